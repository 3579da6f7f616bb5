"""Independent reference computations used by the tests.

Nothing here calls the package's numerical code paths: payoffs come from
explicit enumeration, projections from bisection, and linear programs over
small polytopes from vertex enumeration.
"""

from __future__ import annotations

import itertools

import numpy as np


# ---------------------------------------------------------------------------
# mixed-strategy games
# ---------------------------------------------------------------------------


def split(sigma, sizes):
    out, o = [], 0
    for k in sizes:
        out.append(np.asarray(sigma[o:o + k]))
        o += k
    return out


def pure_payoff_fn_dense(tensors):
    return lambda acts: np.array([t[tuple(acts)] for t in tensors])


def expected_payoffs(pay_fn, sizes, sigma):
    """Expected payoff vector by summing over every pure profile."""
    strats = split(sigma, sizes)
    tot = np.zeros(len(sizes))
    for acts in itertools.product(*(range(k) for k in sizes)):
        p = np.prod([strats[n][a] for n, a in enumerate(acts)])
        if p:
            tot += p * pay_fn(acts)
    return tot


def deviation_vector(pay_fn, sizes, sigma):
    """``V[n, a]``: agent ``n``'s expected payoff for pure action ``a``."""
    strats = split(sigma, sizes)
    v = []
    for n, k in enumerate(sizes):
        for a in range(k):
            tot = 0.0
            others = [range(s) if m != n else [a] for m, s in enumerate(sizes)]
            for acts in itertools.product(*others):
                p = np.prod([strats[m][x] for m, x in enumerate(acts) if m != n])
                if p:
                    tot += p * pay_fn(acts)[n]
            v.append(tot)
    return np.array(v)


def deviation_jacobian(pay_fn, sizes, sigma):
    """``dV[n, a] / dsigma[n', a']`` by enumeration: fix both actions, sum the rest."""
    strats = split(sigma, sizes)
    offs = np.concatenate([[0], np.cumsum(sizes)])
    m = int(offs[-1])
    jac = np.zeros((m, m))
    for n, k in enumerate(sizes):
        for n2, k2 in enumerate(sizes):
            if n2 == n:
                continue
            for a in range(k):
                for a2 in range(k2):
                    rng = [range(s) for s in sizes]
                    rng[n], rng[n2] = [a], [a2]
                    tot = 0.0
                    for acts in itertools.product(*rng):
                        p = np.prod([strats[x][y] for x, y in enumerate(acts) if x not in (n, n2)])
                        if p:
                            tot += p * pay_fn(acts)[n]
                    jac[offs[n] + a, offs[n2] + a2] = tot
    return jac


def regret(pay_fn, sizes, sigma):
    """Best pure deviation gain per agent, by enumeration."""
    v = deviation_vector(pay_fn, sizes, sigma)
    out = []
    for n, (vn, sn) in enumerate(zip(split(v, sizes), split(sigma, sizes))):
        out.append(vn.max() - vn @ sn)
    return np.array(out)


def bimatrix_equilibria(a, b, tol=1e-10):
    """All equilibria of a nondegenerate bimatrix game by support enumeration."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    m, n = a.shape
    out = []
    for k in range(1, min(m, n) + 1):
        for rows in itertools.combinations(range(m), k):
            for cols in itertools.combinations(range(n), k):
                y = _indifferent(a[np.ix_(rows, cols)])
                x = _indifferent(b[np.ix_(rows, cols)].T)
                if x is None or y is None:
                    continue
                xf = np.zeros(m)
                xf[list(rows)] = x
                yf = np.zeros(n)
                yf[list(cols)] = y
                if (a @ yf).max() <= xf @ a @ yf + tol and (xf @ b).max() <= xf @ b @ yf + tol:
                    out.append(np.concatenate([xf, yf]))
    return out


def _indifferent(sub):
    """Opponent mix on a square block making every row equal, or None."""
    k = sub.shape[0]
    mat = np.zeros((k + 1, k + 1))
    mat[:k, :k] = sub
    mat[:k, k] = -1.0
    mat[k, :k] = 1.0
    rhs = np.zeros(k + 1)
    rhs[k] = 1.0
    try:
        sol = np.linalg.solve(mat, rhs)
    except np.linalg.LinAlgError:
        return None
    y = sol[:k]
    if np.any(y < -1e-12):
        return None
    return np.clip(y, 0, None)


# ---------------------------------------------------------------------------
# projections and small linear programs
# ---------------------------------------------------------------------------


def simplex_projection(v, lower=0.0, iters=200):
    """Projection onto ``{x >= lower, sum x = 1}`` by bisection on the shift."""
    v = np.asarray(v, float)
    lo, hi = v.min() - 1.0, v.max() + 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if np.maximum(v - mid, lower).sum() > 1.0:
            lo = mid
        else:
            hi = mid
    return np.maximum(v - 0.5 * (lo + hi), lower)


def lp_max(c, C, d, lower):
    """``max c.x`` over ``{C x = d, x >= lower}`` by enumerating vertices."""
    c = np.asarray(c, float)
    C = np.atleast_2d(np.asarray(C, float))
    n = c.size
    best, arg = -np.inf, None
    rank = np.linalg.matrix_rank(C)
    for k in range(n - rank, n + 1):
        for fixed in itertools.combinations(range(n), k):
            rows = [C]
            rhs = [np.asarray(d, float)]
            if fixed:
                e = np.zeros((len(fixed), n))
                e[np.arange(len(fixed)), list(fixed)] = 1.0
                rows.append(e)
                rhs.append(np.full(len(fixed), lower))
            A = np.vstack(rows)
            r = np.concatenate(rhs)
            if np.linalg.matrix_rank(A) < n:
                continue
            x = np.linalg.lstsq(A, r, rcond=None)[0]
            if np.abs(A @ x - r).max() > 1e-9 or x.min() < lower - 1e-9:
                continue
            if c @ x > best:
                best, arg = float(c @ x), x
    return best, arg


def polytope_projection(w, C, d, lower):
    """Euclidean projection onto ``{C x = d, x >= lower}`` by active-set enumeration.

    Every subset of coordinates is tried as the set held at ``lower``; the
    answer is the feasible candidate whose KKT multipliers are non-negative.
    Exponential, so only for a dozen coordinates or fewer.
    """
    w = np.asarray(w, float)
    C = np.atleast_2d(np.asarray(C, float))
    d = np.asarray(d, float)
    n = w.size
    best, arg = np.inf, None
    for k in range(n + 1):
        for fixed in itertools.combinations(range(n), k):
            free = np.setdiff1d(np.arange(n), fixed)
            x = np.full(n, float(lower))
            if free.size:
                cf = C[:, free]
                rhs = d - C[:, list(fixed)] @ x[list(fixed)] if fixed else d
                # minimise |x_f - w_f|^2 subject to cf x_f = rhs
                lam = np.linalg.lstsq(cf @ cf.T, cf @ w[free] - rhs, rcond=None)[0]
                x[free] = w[free] - cf.T @ lam
            if np.abs(C @ x - d).max() > 1e-9 or x.min() < lower - 1e-12:
                continue
            dist = float(((x - w) ** 2).sum())
            if dist < best - 1e-14:
                best, arg = dist, x
    return arg


# ---------------------------------------------------------------------------
# trees and networks
# ---------------------------------------------------------------------------


def tree_leaves(tree):
    """``(prob, {agent: ((infoset, action), ...)}, payoffs)`` for every leaf."""
    n = tree["agents"] if isinstance(tree["agents"], int) else len(tree["agents"])
    out = []

    def walk(node, prob, hist):
        t = node["type"]
        if t == "leaf":
            out.append((prob, {k: tuple(v) for k, v in hist.items()}, np.asarray(node["payoffs"], float)))
        elif t == "chance":
            for p, ch in zip(node["probs"], node["children"]):
                if p > 0:
                    walk(ch, prob * p, hist)
        else:
            o = node["owner"]
            for a, ch in zip(node["actions"], node["children"]):
                h = {k: list(v) for k, v in hist.items()}
                h[o] = h[o] + [(node["infoset"], a)]
                walk(ch, prob, h)

    walk(tree["root"], 1.0, {k: [] for k in range(n)})
    return out


def tree_deviation(tree, seq_index, sigma):
    """``V`` and its Jacobian straight from the leaf definition.

    ``seq_index[n]`` maps an agent's full history tuple to its global coordinate.
    """
    leaves = tree_leaves(tree)
    n_agents = len(seq_index)
    m = sigma.size
    v = np.zeros(m)
    jac = np.zeros((m, m))
    for prob, hist, pay in leaves:
        coords = [seq_index[k][hist[k]] for k in range(n_agents)]
        for n in range(n_agents):
            rest = prob * np.prod([sigma[coords[k]] for k in range(n_agents) if k != n])
            v[coords[n]] += rest * pay[n]
            for n2 in range(n_agents):
                if n2 == n:
                    continue
                r2 = prob * np.prod([sigma[coords[k]] for k in range(n_agents) if k not in (n, n2)])
                jac[coords[n], coords[n2]] += r2 * pay[n]
    return v, jac


def joint_table(cards, cpds):
    """Joint distribution by enumerating every full assignment.

    ``cpds`` lists ``(variable, parents, table)`` with ``table[parent values..., value]``.
    """
    joint = np.zeros(cards)
    for assign in itertools.product(*(range(c) for c in cards)):
        p = 1.0
        for v, ps, tab in cpds:
            p *= tab[tuple(assign[q] for q in ps) + (assign[v],)]
        joint[assign] = p
    return joint


def marginal(joint, keep):
    keep = sorted(set(keep))
    drop = tuple(i for i in range(joint.ndim) if i not in keep)
    return joint.sum(axis=drop)


def finite_difference(fn, x, h=1e-6):
    x = np.asarray(x, float)
    f0 = np.asarray(fn(x))
    out = np.zeros(f0.shape + x.shape)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        out[..., i] = (np.asarray(fn(x + e)) - np.asarray(fn(x - e))) / (2 * h)
    return out


def tangent_projector(sizes):
    """Block-diagonal projector onto per-agent zero-sum directions.

    Deviation values are only defined on the strategy space, so Jacobians are
    compared along directions that stay inside it.
    """
    blocks = [np.eye(k) - np.full((k, k), 1.0 / k) for k in sizes]
    m = int(sum(sizes))
    out = np.zeros((m, m))
    o = 0
    for k, b in zip(sizes, blocks):
        out[o:o + k, o:o + k] = b
        o += k
    return out


def null_projector(C):
    """Orthogonal projector onto the null space of ``C``."""
    C = np.atleast_2d(np.asarray(C, float))
    _, s, vt = np.linalg.svd(C, full_matrices=True)
    rank = int((s > 1e-10 * max(1.0, s.max(initial=0.0))).sum())
    basis = vt[rank:].T
    return basis @ basis.T
