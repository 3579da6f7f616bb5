"""Terminal-sequence strategy spaces and the epsilon-bounded polytope retraction.

Each agent's decision structure is a *treeplex*: extended sequences (the empty
sequence plus one per information-set/action pair) linked by information sets.
Only terminal sequences carry coordinates; the realisation probability of any
other extended sequence is a fixed linear combination of them, recovered from
the consistency constraints.

The same structure serves extensive-form trees and MAIDs; only the builders
differ.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Hashable, List, Optional, Sequence

import numpy as np

from .strategy import (
    DEFAULT_HORIZON,
    SUPPORT_TOL,
    AgentIndexing,
    SupportSignature,
    bisect_signature_change,
    signature_of,
)
from .views import GameView

DEFAULT_EPSILON = 1e-4


class PerfectRecallError(ValueError):
    """An agent forgets something it knew or did."""


@dataclass
class InfoSet:
    key: Hashable
    parent: int
    actions: tuple
    children: tuple = ()


class Treeplex:
    """One agent's extended sequences and information sets.

    Extended sequence 0 is the empty sequence.  Every information set hangs
    below one extended sequence (its history) and creates one child extended
    sequence per action.
    """

    def __init__(self) -> None:
        self.keys: List[tuple] = [()]
        self._index: Dict[tuple, int] = {(): 0}
        self.infosets: List[InfoSet] = []
        self._iset_index: Dict[Hashable, int] = {}
        self.below: List[List[int]] = [[]]
        self.terminal_flag: List[bool] = [False]
        self._frozen = False

    # -- construction -----------------------------------------------------
    def add_infoset(self, key: Hashable, history: tuple, actions: Sequence) -> int:
        """Register (or re-check) an information set with the given history."""
        actions = tuple(actions)
        if key in self._iset_index:
            i = self._iset_index[key]
            iset = self.infosets[i]
            if self.keys[iset.parent] != history:
                raise PerfectRecallError(f"information set {key!r} reached with two different histories")
            if iset.actions != actions:
                raise ValueError(f"information set {key!r} has inconsistent actions")
            return i
        if history not in self._index:
            raise PerfectRecallError(f"history {history!r} of {key!r} is not a known sequence")
        parent = self._index[history]
        i = len(self.infosets)
        children = []
        for a in actions:
            seq = history + ((key, a),)
            self._index[seq] = len(self.keys)
            children.append(len(self.keys))
            self.keys.append(seq)
            self.below.append([])
            self.terminal_flag.append(False)
        self.infosets.append(InfoSet(key, parent, actions, tuple(children)))
        self._iset_index[key] = i
        self.below[parent].append(i)
        return i

    def mark_terminal(self, history: tuple) -> int:
        if history not in self._index:
            raise PerfectRecallError(f"unknown sequence {history!r}")
        e = self._index[history]
        self.terminal_flag[e] = True
        return e

    def child(self, iset: int, action_pos: int) -> int:
        return self.infosets[iset].children[action_pos]

    def ext_index(self, history: tuple) -> int:
        return self._index[history]

    def infoset_index(self, key: Hashable) -> int:
        return self._iset_index[key]

    # -- derived data -------------------------------------------------------
    def freeze(self) -> None:
        """Fix coordinates and build the expansion and constraint matrices."""
        if self._frozen:
            return
        n_ext = len(self.keys)
        for e in range(n_ext):
            if not self.below[e]:
                self.terminal_flag[e] = True
        self.terminals = [e for e in range(n_ext) if self.terminal_flag[e]]
        self.coord_of = {e: j for j, e in enumerate(self.terminals)}
        ell = len(self.terminals)
        ext = np.zeros((n_ext, ell))
        rows = []
        rhs = []
        for e in range(n_ext - 1, -1, -1):
            exprs = []
            if self.terminal_flag[e]:
                v = np.zeros(ell)
                v[self.coord_of[e]] = 1.0
                exprs.append(v)
            for i in self.below[e]:
                exprs.append(sum(ext[c] for c in self.infosets[i].children))
            ext[e] = exprs[0]
            for x in exprs[1:]:
                rows.append(x - exprs[0])
                rhs.append(0.0)
        rows.append(ext[0])
        rhs.append(1.0)
        c = np.array(rows)
        r = np.array(rhs)
        # canonical dedup: scale each row to a leading +1, drop exact repeats
        canon = []
        seen = set()
        for row, b in zip(c, r):
            nz = np.nonzero(np.abs(row) > 1e-15)[0]
            if nz.size == 0:
                continue
            s = row[nz[0]]
            key = tuple(np.round(np.append(row / s, b / s), 12))
            if key in seen:
                continue
            seen.add(key)
            canon.append((key, row / s + 0.0, b / s + 0.0))
        canon.sort(key=lambda t: t[0])
        self.C = np.array([t[1] for t in canon])
        self.c = np.array([t[2] for t in canon])
        self.ext = ext
        self._frozen = True

    @property
    def size(self) -> int:
        return len(self.terminals)


# ---------------------------------------------------------------------------
# projection onto {C x = c, x >= eps}
# ---------------------------------------------------------------------------


def _eqp(z, C, c, free):
    """Minimise ``||y - z||^2`` over ``C y = c`` with ``y`` zero off ``free``."""
    cf = C[:, free]
    lam = np.linalg.lstsq(cf @ cf.T, cf @ z[free] - c, rcond=None)[0]
    y = np.zeros_like(z)
    y[free] = z[free] - cf.T @ lam
    return y, lam


def project_polytope(w, C, c, eps, y0=None, active0=None, max_iter=500, tol=1e-12):
    """Euclidean projection onto ``{x : C x = c, x >= eps}``.

    Primal active-set method on ``y = x - eps``.  ``y0`` and ``active0`` warm
    start the solve and must describe a feasible point.

    Returns
    -------
    x : ndarray
    active : ndarray of bool
        Coordinates held at the bound.
    """
    n = w.size
    cp = c - C @ np.full(n, eps)
    z = w - eps
    if y0 is None:
        raise ValueError("a feasible starting point is required")
    y = np.maximum(y0, 0.0)
    scale = 1.0 + max(float(np.abs(z).max()), float(y.max()))
    active = np.zeros(n, bool) if active0 is None else active0.copy()
    active &= y <= tol
    for _ in range(max_iter):
        free = ~active
        y_new, lam = _eqp(z, C, cp, free)
        p = y_new - y
        if np.abs(p).max() <= tol * scale:
            mu = y_new - z + C.T @ lam
            mu_a = np.where(active, mu, np.inf)
            j = int(np.argmin(mu_a))
            if mu_a[j] >= -1e-11 * scale:
                y = y_new
                break
            active[j] = False
            y = y_new
            continue
        dec = free & (p < -1e-15 * scale)
        alpha = 1.0
        block = -1
        if dec.any():
            ratios = np.full(n, np.inf)
            ratios[dec] = -y[dec] / p[dec]
            block = int(np.argmin(ratios))
            if ratios[block] < 1.0:
                alpha = max(ratios[block], 0.0)
            else:
                block = -1
        y = y + alpha * p
        if block >= 0:
            y[block] = 0.0
            active[block] = True
    else:
        raise RuntimeError("active-set projection did not converge")
    y[active] = 0.0
    y = np.maximum(y, 0.0)
    return y + eps, active


# ---------------------------------------------------------------------------
# the space
# ---------------------------------------------------------------------------


class SequenceFormSpace:
    """Product of per-agent treeplexes with an epsilon lower bound.

    Parameters
    ----------
    treeplexes : sequence of Treeplex
    epsilon : float
        Lower bound on every realisation probability.
    """

    def __init__(self, treeplexes: Sequence[Treeplex], epsilon: float = DEFAULT_EPSILON) -> None:
        self.agents = list(treeplexes)
        for tp in self.agents:
            tp.freeze()
        self.indexing = AgentIndexing(tuple(tp.size for tp in self.agents))
        self.epsilon = float(epsilon)
        self._uniform = [self._uniform_plan(n) for n in range(len(self.agents))]
        for n, u in enumerate(self._uniform):
            if u.min() < self.epsilon - 1e-15:
                raise ValueError(f"epsilon {self.epsilon} leaves agent {n} without a feasible plan")

    @property
    def n_agents(self) -> int:
        return len(self.agents)

    @property
    def total_dim(self) -> int:
        return self.indexing.total_dim

    def constraint_matrix(self) -> tuple:
        """Block-diagonal ``(C, c)`` over the whole ambient vector."""
        rows = sum(tp.C.shape[0] for tp in self.agents)
        big = np.zeros((rows, self.total_dim))
        rhs = np.zeros(rows)
        r = 0
        for n, tp in enumerate(self.agents):
            k = tp.C.shape[0]
            big[r:r + k, self.indexing.slice(n)] = tp.C
            rhs[r:r + k] = tp.c
            r += k
        return big, rhs

    def sequence_labels(self, n: int) -> List[str]:
        """Readable id of each terminal sequence of agent ``n``."""
        tp = self.agents[n]
        out = []
        for e in tp.terminals:
            key = tp.keys[e]
            out.append(",".join(f"{_fmt(i)}:{_fmt(a)}" for i, a in key) or "empty")
        return out

    # -- behaviour <-> plan -------------------------------------------------
    def _uniform_plan(self, n):
        tp = self.agents[n]
        beh = [np.full(len(i.actions), 1.0 / len(i.actions)) for i in tp.infosets]
        return self._agent_plan(n, beh)

    def _agent_plan(self, n, beh):
        tp = self.agents[n]
        real = np.zeros(len(tp.keys))
        real[0] = 1.0
        for i, iset in enumerate(tp.infosets):
            for pos, ch in enumerate(iset.children):
                real[ch] = real[iset.parent] * beh[i][pos]
        return real[tp.terminals]

    def behavior_to_plan(self, behavior) -> np.ndarray:
        """Realisation plan of a behaviour profile.

        ``behavior[n][i]`` is the action distribution at agent ``n``'s
        information set number ``i`` (in registration order).
        """
        return np.concatenate([self._agent_plan(n, behavior[n]) for n in range(self.n_agents)])

    def extended(self, sigma: np.ndarray, n: int) -> np.ndarray:
        """Realisation probability of every extended sequence of agent ``n``."""
        tp = self.agents[n]
        return tp.ext @ sigma[self.indexing.slice(n)]

    def plan_to_behavior(self, sigma: np.ndarray, return_flags: bool = False):
        """Behaviour profile inducing ``sigma``.

        Information sets reached with zero probability get the uniform
        distribution; with ``return_flags`` their keys are reported.
        """
        sigma = self.indexing.check(sigma)
        out = []
        flagged = []
        for n, tp in enumerate(self.agents):
            real = self.extended(sigma, n)
            beh = []
            for iset in tp.infosets:
                vals = real[list(iset.children)]
                tot = vals.sum()
                if tot <= 0:
                    beh.append(np.full(len(vals), 1.0 / len(vals)))
                    flagged.append((n, iset.key))
                else:
                    beh.append(np.maximum(vals, 0.0) / tot)
            out.append(beh)
        if return_flags:
            return out, flagged
        return out

    def uniform_plan(self) -> np.ndarray:
        return np.concatenate(self._uniform)

    def random_plan(self, rng: np.random.Generator) -> np.ndarray:
        beh = [[rng.dirichlet(np.ones(len(i.actions))) for i in tp.infosets] for tp in self.agents]
        return self.behavior_to_plan(beh)

    def constraint_residual(self, sigma: np.ndarray) -> float:
        big, rhs = self.constraint_matrix()
        return float(np.abs(big @ sigma - rhs).max())

    # -- retraction -------------------------------------------------------
    def retract(self, w, warm: Optional[np.ndarray] = None) -> tuple:
        """Projection of ``w`` onto the epsilon-bounded plan polytope.

        Returns
        -------
        sigma : ndarray
        signature : SupportSignature
        """
        w = self.indexing.check(w)
        out = np.empty_like(w)
        eps = self.epsilon
        for n, tp in enumerate(self.agents):
            sl = self.indexing.slice(n)
            start = warm[sl] if warm is not None else self._uniform[n]
            act0 = start <= eps + SUPPORT_TOL
            x, _ = project_polytope(w[sl], tp.C, tp.c, eps, y0=start - eps, active0=act0)
            out[sl] = x
        return out, signature_of(out, eps)

    def retraction_jacobian(self, signature: SupportSignature) -> np.ndarray:
        """Orthogonal projector onto the null space of the active constraints."""
        mask = signature.mask()
        m = self.total_dim
        jac = np.zeros((m, m))
        for n, tp in enumerate(self.agents):
            sl = self.indexing.slice(n)
            free = np.nonzero(mask[sl])[0]
            if free.size == 0:
                continue
            cf = tp.C[:, free]
            _, s, vt = np.linalg.svd(cf, full_matrices=True)
            rank = int((s > 1e-10 * max(1.0, s.max() if s.size else 0.0)).sum())
            basis = vt[rank:].T
            if basis.shape[1] == 0:
                continue
            glob = free + sl.start
            jac[np.ix_(glob, glob)] = basis @ basis.T
        return jac

    def free_dimension(self, signature: SupportSignature) -> np.ndarray:
        """Dimension of each agent's face on the cell named by ``signature``."""
        mask = signature.mask()
        out = np.zeros(self.n_agents, dtype=int)
        for n, tp in enumerate(self.agents):
            free = np.nonzero(mask[self.indexing.slice(n)])[0]
            if free.size:
                out[n] = free.size - np.linalg.matrix_rank(tp.C[:, free])
        return out

    def boundary_hint(self, w, dw, sigma) -> float:
        """First active-set change along ``w + t dw`` from the KKT system."""
        eps = self.epsilon
        best = np.inf
        for n, tp in enumerate(self.agents):
            sl = self.indexing.slice(n)
            x = sigma[sl]
            free = x > eps + SUPPORT_TOL
            cf = tp.C[:, free]
            gram = cf @ cf.T
            dlam = np.linalg.lstsq(gram, cf @ dw[sl][free], rcond=None)[0]
            dx = dw[sl][free] - cf.T @ dlam
            shift = tp.c - tp.C[:, ~free] @ np.full(int((~free).sum()), eps)
            lam = np.linalg.lstsq(gram, cf @ w[sl][free] - shift, rcond=None)[0]
            mu = eps - w[sl][~free] + tp.C[:, ~free].T @ lam
            dmu = -dw[sl][~free] + tp.C[:, ~free].T @ dlam
            with np.errstate(divide="ignore", invalid="ignore"):
                leave = np.where(dx < 0, (x[free] - eps) / -dx, np.inf)
                enter = np.where(dmu < 0, mu / -dmu, np.inf)
            cand = np.concatenate([leave, enter])
            cand = cand[cand >= 0]
            if cand.size:
                best = min(best, float(cand.min()))
        return best

    def support_distance(self, w, dw, horizon: float = DEFAULT_HORIZON, use_hint: bool = True) -> float:
        """Distance along ``dw`` to the next change of the retraction's support."""
        w = self.indexing.check(w)
        dw = self.indexing.check(dw)
        if not np.any(dw):
            raise ValueError("direction must be non-zero")
        base, _ = self.retract(w)

        def sig_at(t):
            return self.retract(w + t * dw, warm=base)[1]

        hint = self.boundary_hint(w, dw, base) if use_hint else None
        return bisect_signature_change(sig_at, horizon=horizon, hint=hint)

    # -- best responses -------------------------------------------------------
    def best_response(self, values: np.ndarray, n: int, epsilon: Optional[float] = None) -> tuple:
        """Best epsilon-feasible plan of agent ``n`` against linear payoffs.

        Parameters
        ----------
        values : ndarray
            Payoff per terminal sequence of agent ``n`` (its slice of ``V``).
        epsilon : float, optional
            Lower bound to respect; defaults to the space's epsilon.

        Returns
        -------
        value : float
            Optimal payoff.
        plan : ndarray
            An optimal plan (every coordinate >= epsilon).
        choice : list of int
            Action position favoured at each information set.
        """
        eps = self.epsilon if epsilon is None else float(epsilon)
        tp = self.agents[n]
        n_ext = len(tp.keys)
        req = np.zeros(n_ext)
        alpha = np.zeros(n_ext)
        beta = np.zeros(n_ext)
        choice = [0] * len(tp.infosets)
        iset_const = np.zeros(len(tp.infosets))
        # children always have larger indices than parents, so sweep backwards
        for e in range(n_ext - 1, -1, -1):
            r = eps if tp.terminal_flag[e] else 0.0
            a = values[tp.coord_of[e]] if tp.terminal_flag[e] else 0.0
            b = 0.0
            for i in tp.below[e]:
                ch = np.array(tp.infosets[i].children)
                need = req[ch]
                r = max(r, need.sum())
                best = int(np.argmax(alpha[ch]))
                choice[i] = best
                # losers sit at their minimum, the winner takes the rest
                const = sum(alpha[c] * req[c] + beta[c] for j, c in enumerate(ch) if j != best)
                const += beta[ch[best]] - alpha[ch[best]] * (need.sum() - need[best])
                a += alpha[ch[best]]
                b += const
                iset_const[i] = const
            req[e], alpha[e], beta[e] = r, a, b
        value = alpha[0] * 1.0 + beta[0]
        real = np.zeros(n_ext)
        real[0] = 1.0
        for i, iset in enumerate(tp.infosets):
            ch = iset.children
            tot = real[iset.parent]
            rest = tot - sum(req[c] for j, c in enumerate(ch) if j != choice[i])
            for j, c in enumerate(ch):
                real[c] = rest if j == choice[i] else req[c]
        return float(value), real[tp.terminals].copy(), choice


def _fmt(x) -> str:
    if isinstance(x, tuple):
        return "(" + " ".join(_fmt(y) for y in x) + ")"
    return str(x)


class SequenceFormView(GameView):
    """Game view over a :class:`SequenceFormSpace`; subclasses supply payoffs."""

    kind = "sequence"

    def __init__(self, space: SequenceFormSpace) -> None:
        self.space = space
        self.indexing = space.indexing
        self.lower_bound = space.epsilon
        self._rj_cache: dict = {}
        self._warm = None

    def retract(self, w):
        sigma, sig = self.space.retract(w, warm=self._warm)
        self._warm = sigma
        return sigma, sig

    def retraction_jacobian(self, signature):
        jac = self._rj_cache.get(signature)
        if jac is None:
            if len(self._rj_cache) > 4096:
                self._rj_cache.clear()
            jac = self.space.retraction_jacobian(signature)
            self._rj_cache[signature] = jac
        return jac

    def support_distance(self, w, dw, horizon=DEFAULT_HORIZON):
        return self.space.support_distance(w, dw, horizon=horizon)

    def is_affine_on(self, signature):
        if self.n_agents <= 2:
            return True
        return int((self.space.free_dimension(signature) > 0).sum()) <= 1

    def regret(self, sigma):
        v = self.deviation_vector(sigma)
        out = np.empty(self.n_agents)
        for n in range(self.n_agents):
            sl = self.indexing.slice(n)
            best, _, _ = self.space.best_response(v[sl], n)
            out[n] = max(0.0, best - float(sigma[sl] @ v[sl]))
        return out

    def random_profile(self, rng):
        return self.space.retract(self.space.random_plan(rng))[0]
