"""Hot numerical kernels with a compiled loop and a vectorised numpy twin.

Each kernel ``name`` exists in two flavours:

* ``name_loop``  - explicit loops, compiled with numba when available;
* ``name_numpy`` - vectorised numpy, used when numba is disabled.

``name`` itself is bound to one of them according to
:data:`structnash._jit.USE_NUMBA`.  Tests compare the two flavours directly so
both stay correct regardless of which one is selected.
"""

from __future__ import annotations

import numpy as np

from ._jit import USE_NUMBA, njit

__all__ = [
    "project_simplices",
    "project_simplices_loop",
    "project_simplices_numpy",
    "family_contract",
    "family_contract_loop",
    "family_contract_numpy",
    "leaf_accumulate",
    "leaf_accumulate_loop",
    "leaf_accumulate_numpy",
]


# ---------------------------------------------------------------------------
# simplex projection
# ---------------------------------------------------------------------------


@njit
def project_simplices_loop(w, offsets, lengths, lower):
    """Project every slice of ``w`` onto ``{x >= lower, sum x = 1}``."""
    out = np.empty_like(w)
    for s in range(offsets.shape[0]):
        o = offsets[s]
        k = lengths[s]
        target = 1.0 - k * lower
        y = w[o:o + k] - lower
        u = np.sort(y)[::-1]
        css = u[0]
        tau = u[0] - target
        for j in range(1, k):
            css += u[j]
            t = (css - target) / (j + 1)
            if u[j] - t > 0.0:
                tau = t
        for j in range(k):
            v = y[j] - tau
            out[o + j] = lower + (v if v > 0.0 else 0.0)
    return out


def project_simplices_numpy(w, offsets, lengths, lower):
    """Vectorised counterpart of :func:`project_simplices_loop`."""
    out = np.empty_like(w)
    for o, k in zip(offsets.tolist(), lengths.tolist()):
        y = w[o:o + k] - lower
        target = 1.0 - k * lower
        u = np.sort(y)[::-1]
        css = np.cumsum(u)
        t = (css - target) / np.arange(1, k + 1)
        ok = u - t > 0.0
        ok[0] = True
        tau = t[np.nonzero(ok)[0][-1]]
        out[o:o + k] = lower + np.maximum(y - tau, 0.0)
    return out


# ---------------------------------------------------------------------------
# graphical family contraction
# ---------------------------------------------------------------------------


@njit
def family_contract_loop(table, cards, probs, poffs):
    """Contract a family payoff table against the parents' mixed strategies.

    Parameters
    ----------
    table : (prod(cards),) float array
        Family table in (self, parent_1, ..., parent_k) order, last fastest.
    cards : (k+1,) int array
        Action counts of the family members, self first.
    probs : float array
        Concatenated parent strategies.
    poffs : (k,) int array
        Offset of each parent inside ``probs``.

    Returns
    -------
    v : (cards[0],) float array
        Expected payoff of each own action.
    jp : (cards[0], len(probs)) float array
        Derivative of ``v`` with respect to every parent probability.
    """
    k = cards.shape[0] - 1
    d0 = cards[0]
    v = np.zeros(d0)
    jp = np.zeros((d0, probs.shape[0]))
    digits = np.zeros(k + 1, dtype=np.int64)
    pre = np.ones(k + 1)
    suf = np.ones(k + 1)
    for e in range(table.shape[0]):
        if e > 0:
            pos = k
            while True:
                digits[pos] += 1
                if digits[pos] < cards[pos]:
                    break
                digits[pos] = 0
                pos -= 1
        a = digits[0]
        for i in range(k):
            pre[i + 1] = pre[i] * probs[poffs[i] + digits[i + 1]]
        suf[k] = 1.0
        for i in range(k - 1, -1, -1):
            suf[i] = suf[i + 1] * probs[poffs[i] + digits[i + 1]]
        g = table[e]
        v[a] += g * pre[k]
        for i in range(k):
            jp[a, poffs[i] + digits[i + 1]] += g * pre[i] * suf[i + 1]
    return v, jp


def family_contract_numpy(table, cards, probs, poffs):
    """Vectorised counterpart of :func:`family_contract_loop`."""
    k = len(cards) - 1
    t = table.reshape(tuple(int(c) for c in cards))
    strat = [probs[poffs[i]:poffs[i] + cards[i + 1]] for i in range(k)]
    v = t
    for i in range(k - 1, -1, -1):
        v = v @ strat[i]
    jp = np.zeros((int(cards[0]), probs.shape[0]))
    for j in range(k):
        ops = [t, list(range(k + 1))]
        for i in range(k):
            if i != j:
                ops += [strat[i], [i + 1]]
        jp[:, poffs[j]:poffs[j] + cards[j + 1]] = np.einsum(*ops, [0, j + 1])
    return np.asarray(v, dtype=float), jp


# ---------------------------------------------------------------------------
# leaf-table accumulation for sequence-form games
# ---------------------------------------------------------------------------


@njit
def leaf_accumulate_loop(seq, coef, pay, sigma):
    """Deviation vector and Jacobian from an explicit table of outcomes.

    Parameters
    ----------
    seq : (Z, N) int array
        Global coordinate of each agent's terminal sequence at each outcome.
    coef : (Z,) float array
        Chance probability of each outcome.
    pay : (Z, N) float array
        Payoff of each agent at each outcome.
    sigma : (m,) float array
        Realisation plan.
    """
    m = sigma.shape[0]
    z_count, n_agents = seq.shape
    v = np.zeros(m)
    jac = np.zeros((m, m))
    r = np.empty(n_agents)
    for z in range(z_count):
        for n in range(n_agents):
            r[n] = sigma[seq[z, n]]
        for n in range(n_agents):
            g = coef[z] * pay[z, n]
            if g == 0.0:
                continue
            ex1 = 1.0
            for q in range(n_agents):
                if q != n:
                    ex1 *= r[q]
            v[seq[z, n]] += g * ex1
            for n2 in range(n_agents):
                if n2 == n:
                    continue
                ex2 = 1.0
                for q in range(n_agents):
                    if q != n and q != n2:
                        ex2 *= r[q]
                jac[seq[z, n], seq[z, n2]] += g * ex2
    return v, jac


def leaf_accumulate_numpy(seq, coef, pay, sigma):
    """Vectorised counterpart of :func:`leaf_accumulate_loop`."""
    m = sigma.shape[0]
    n_agents = seq.shape[1]
    r = sigma[seq]
    v = np.zeros(m)
    flat = np.zeros(m * m)
    for n in range(n_agents):
        g = coef * pay[:, n]
        rr = r.copy()
        rr[:, n] = 1.0
        v += np.bincount(seq[:, n], weights=g * rr.prod(axis=1), minlength=m)
        for n2 in range(n_agents):
            if n2 == n:
                continue
            r2 = rr.copy()
            r2[:, n2] = 1.0
            idx = seq[:, n] * m + seq[:, n2]
            flat += np.bincount(idx, weights=g * r2.prod(axis=1), minlength=m * m)
    return v, flat.reshape(m, m)


if USE_NUMBA:
    project_simplices = project_simplices_loop
    family_contract = family_contract_loop
    leaf_accumulate = leaf_accumulate_loop
else:
    project_simplices = project_simplices_numpy
    family_contract = family_contract_numpy
    leaf_accumulate = leaf_accumulate_numpy
