"""Complementary pivoting: Lemke-Howson and Lemke's algorithm.

Both solvers pivot on a dense floating-point tableau with lexicographic
minimum-ratio tie-breaking.  Because every tableau starts from an identity
basis, the columns of the tableau under the initial slack variables hold the
current basis inverse, which is exactly the data the lexicographic rule needs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .views import MixedView

DEFAULT_PIVOT_CAP = 10**6
PIVOT_TOL = 1e-12


class LcpError(RuntimeError):
    """Base class for pivoting failures."""


class RayTermination(LcpError):
    """The entering column has no positive entry: the path runs off to infinity."""


class PivotCapExceeded(LcpError):
    """More pivots than the configured cap."""


@dataclass
class LcpTableau:
    """Dense tableau ``B^{-1} [A | rhs]`` with its basis bookkeeping.

    ``lex_cols`` names the columns holding ``B^{-1}``; ``basis[i]`` is the
    variable basic in row ``i``.
    """

    table: np.ndarray
    basis: list
    lex_cols: np.ndarray
    pivots: int = 0
    seen: set = field(default_factory=set)

    @property
    def rhs(self) -> np.ndarray:
        return self.table[:, -1]

    def ratio_row(self, col: int, rows: Optional[np.ndarray] = None) -> int:
        """Row chosen by the lexicographic minimum-ratio test for ``col``."""
        c = self.table[:, col]
        scale = max(1.0, float(np.abs(c).max()))
        cand = np.nonzero(c > PIVOT_TOL * scale)[0]
        if rows is not None:
            cand = np.intersect1d(cand, rows)
        if cand.size == 0:
            raise RayTermination(f"no positive pivot in column {col}")
        keys = np.column_stack([self.rhs[cand], self.table[np.ix_(cand, self.lex_cols)]]) / c[cand, None]
        best = cand[0]
        best_key = keys[0]
        for r, key in zip(cand[1:], keys[1:]):
            diff = key - best_key
            nz = np.nonzero(np.abs(diff) > 1e-12 * (1.0 + np.abs(best_key)))[0]
            if nz.size and diff[nz[0]] < 0:
                best, best_key = r, key
        return int(best)

    def pivot(self, row: int, col: int, cap: int) -> int:
        """Pivot ``col`` into the basis at ``row``; returns the leaving variable."""
        self.pivots += 1
        if self.pivots > cap:
            raise PivotCapExceeded(f"pivot cap {cap} exceeded")
        t = self.table
        t[row] /= t[row, col]
        col_vals = t[:, col].copy()
        col_vals[row] = 0.0
        t -= np.outer(col_vals, t[row])
        leaving = self.basis[row]
        self.basis[row] = col
        key = frozenset(self.basis)
        if key in self.seen:
            raise LcpError("basis revisited; lexicographic rule violated numerically")
        self.seen.add(key)
        return leaving


# ---------------------------------------------------------------------------
# Lemke-Howson
# ---------------------------------------------------------------------------


def _positive(a: np.ndarray) -> np.ndarray:
    return a - a.min() + 1.0


def lemke_howson(a, b, dropped_label: int = 0, cap: int = DEFAULT_PIVOT_CAP, return_pivots: bool = False):
    """Equilibrium of the bimatrix game ``(a, b)`` by Lemke-Howson.

    Parameters
    ----------
    a, b : (m, n) array_like
        Payoffs of the row and column player.
    dropped_label : int
        Label dropped from the artificial equilibrium; ``0..m-1`` are row
        actions, ``m..m+n-1`` column actions.

    Returns
    -------
    x, y : ndarray
        Mixed strategies of the two players.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    m, n = a.shape
    if b.shape != (m, n):
        raise ValueError("payoff matrices must share a shape")
    if not 0 <= dropped_label < m + n:
        raise ValueError("dropped label out of range")
    ap, bp = _positive(a), _positive(b)
    # Tableau P over row strategies x: s + B'^T x = 1 (variables x_i -> i, s_j -> m+j)
    # Tableau Q over column strategies y: r + A' y = 1 (variables r_i -> i, y_j -> m+j)
    tp = np.zeros((n, m + n + 1))
    tp[:, :m] = bp.T
    tp[:, m:m + n] = np.eye(n)
    tp[:, -1] = 1.0
    tq = np.zeros((m, m + n + 1))
    tq[:, :m] = np.eye(m)
    tq[:, m:m + n] = ap
    tq[:, -1] = 1.0
    tabs = {
        "P": LcpTableau(tp, [m + j for j in range(n)], np.arange(m, m + n)),
        "Q": LcpTableau(tq, list(range(m)), np.arange(m)),
    }
    # label k is carried by x_k (in P) and r_k (in Q) for k < m, else s_j (P) and y_j (Q)
    side = "P" if dropped_label < m else "Q"
    entering = dropped_label
    total = 0
    while True:
        tab = tabs[side]
        row = tab.ratio_row(entering)
        leaving = tab.pivot(row, entering, cap)
        total += 1
        if total > cap:
            raise PivotCapExceeded(f"pivot cap {cap} exceeded")
        if leaving == dropped_label:
            break
        side = "Q" if side == "P" else "P"
        entering = leaving
    x = np.zeros(m)
    y = np.zeros(n)
    for r, var in enumerate(tabs["P"].basis):
        if var < m:
            x[var] = tabs["P"].rhs[r]
    for r, var in enumerate(tabs["Q"].basis):
        if var >= m:
            y[var - m] = tabs["Q"].rhs[r]
    x = np.maximum(x, 0.0)
    y = np.maximum(y, 0.0)
    x /= x.sum()
    y /= y.sum()
    if return_pivots:
        return x, y, total
    return x, y


# ---------------------------------------------------------------------------
# Lemke's algorithm for general LCPs
# ---------------------------------------------------------------------------


def lemke(M, q, d=None, cap: int = DEFAULT_PIVOT_CAP) -> np.ndarray:
    """Solve ``w = q + M z >= 0, z >= 0, w^T z = 0`` by Lemke's algorithm.

    Parameters
    ----------
    M : (k, k) array_like
    q : (k,) array_like
    d : (k,) array_like, optional
        Positive covering vector, all ones by default.

    Returns
    -------
    z : ndarray

    Raises
    ------
    RayTermination
        If the complementary path ends in a secondary ray.
    """
    M = np.asarray(M, dtype=float)
    q = np.asarray(q, dtype=float)
    k = q.size
    d = np.ones(k) if d is None else np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("covering vector must be positive")
    if np.all(q >= 0):
        return np.zeros(k)
    # columns: w (0..k-1), z (k..2k-1), z0 (2k), rhs
    t = np.zeros((k, 2 * k + 2))
    t[:, :k] = np.eye(k)
    t[:, k:2 * k] = -M
    t[:, 2 * k] = -d
    t[:, -1] = q
    tab = LcpTableau(t, list(range(k)), np.arange(k))
    z0 = 2 * k
    # first pivot: z0 enters at the row with the most negative q_i/d_i,
    # lexicographic on (q_i, e_i)/d_i for ties
    keys = np.column_stack([q, np.eye(k)]) / d[:, None]
    row = 0
    for r in range(1, k):
        diff = keys[r] - keys[row]
        nz = np.nonzero(np.abs(diff) > 1e-14)[0]
        if nz.size and diff[nz[0]] < 0:
            row = r
    leaving = tab.pivot(row, z0, cap)
    while True:
        entering = leaving + k if leaving < k else leaving - k
        row = tab.ratio_row(entering)
        leaving = tab.pivot(row, entering, cap)
        if leaving == z0:
            break
    z = np.zeros(k)
    for r, var in enumerate(tab.basis):
        if k <= var < 2 * k:
            z[var - k] = tab.rhs[r]
    return np.maximum(z, 0.0)


# ---------------------------------------------------------------------------
# polymatrix games
# ---------------------------------------------------------------------------


class PolymatrixGame(MixedView):
    """Game whose payoffs are sums of pairwise bimatrix interactions.

    Parameters
    ----------
    action_counts : sequence of int
    blocks : (m, m) array_like
        Block ``(n, n')`` holds ``B^{n,n'}``: the payoff agent ``n`` gets for
        each action pair in its game against ``n'``.  Diagonal blocks are
        ignored and stored as zero.
    unary : (m,) array_like, optional
        Payoff of each action independent of the other agents.
    """

    def __init__(self, action_counts: Sequence[int], blocks, unary=None) -> None:
        super().__init__(action_counts)
        b = np.array(blocks, dtype=float)
        if b.shape != (self.dim, self.dim):
            raise ValueError(f"blocks must be {self.dim}x{self.dim}")
        for n in range(self.n_agents):
            sl = self.indexing.slice(n)
            b[sl, sl] = 0.0
        if not np.all(np.isfinite(b)):
            raise ValueError("payoffs must be finite")
        b.setflags(write=False)
        self.blocks = b
        u = np.zeros(self.dim) if unary is None else np.array(unary, dtype=float)
        if u.shape != (self.dim,) or not np.all(np.isfinite(u)):
            raise ValueError("unary payoffs must be a finite vector over all actions")
        u.setflags(write=False)
        self.unary = u

    def folded_blocks(self) -> np.ndarray:
        """Blocks with the unary term spread over one opponent's columns.

        On valid profiles every opponent strategy sums to one, so adding
        ``u_a`` to a whole row of one block reproduces the unary payoff.
        """
        b = self.blocks.copy()
        if self.n_agents < 2 or not np.any(self.unary):
            return b
        for n in range(self.n_agents):
            other = 1 if n == 0 else 0
            rows, cols = self.indexing.slice(n), self.indexing.slice(other)
            b[rows, cols] += self.unary[rows, None]
        return b

    def block(self, n: int, n2: int) -> np.ndarray:
        return self.blocks[self.indexing.slice(n), self.indexing.slice(n2)]

    def deviation_vector(self, sigma):
        return self.blocks @ self.indexing.check(sigma) + self.unary

    def deviation_jacobian(self, sigma):
        self.indexing.check(sigma)
        return self.blocks.copy()

    def payoff_range(self, n):
        sl = self.indexing.slice(n)
        rows = self.blocks[sl]
        spread = 0.0
        for n2 in range(self.n_agents):
            if n2 != n:
                blk = rows[:, self.indexing.slice(n2)]
                spread += float(blk.max() - blk.min())
        u = self.unary[sl]
        return spread + float(u.max() - u.min())

    def is_affine_on(self, signature):
        return True


def solve_polymatrix(
    game: PolymatrixGame,
    start: Optional[np.ndarray] = None,
    cap: int = DEFAULT_PIVOT_CAP,
    method: str = "auto",
) -> np.ndarray:
    """Equilibrium of a polymatrix game.

    Two-agent games go through :func:`lemke_howson` with label 0 so that both
    entry points agree; larger games solve the stacked LCP

    ``s = C sigma - E^T v >= 0,  t = E sigma - 1 >= 0``

    with Lemke's algorithm, where ``C`` holds positive pairwise costs.  When
    ``start`` is given the covering vector is taken from the costs against
    that profile, which tends to return an equilibrium near it.
    """
    idx = game.indexing
    n_agents, m = idx.agent_count, idx.total_dim
    if n_agents > 1 and np.any(game.unary):
        game = PolymatrixGame(idx.sizes, game.folded_blocks())
    if method == "auto":
        method = "lh" if n_agents == 2 else "lemke"
    if method == "lh":
        if n_agents != 2:
            raise ValueError("Lemke-Howson needs exactly two agents")
        x, y = lemke_howson(game.block(0, 1), game.block(1, 0).T, 0, cap=cap)
        return np.concatenate([x, y])
    if n_agents == 1:
        v = np.zeros(m)
        v[int(np.argmax(game.unary))] = 1.0
        return v
    owner = idx.owner()
    cost = np.zeros((m, m))
    for n in range(n_agents):
        # a common positive scale per agent keeps its best responses intact;
        # per-block shifts only add constants to its payoffs
        others = [n2 for n2 in range(n_agents) if n2 != n]
        spread = max(float(np.ptp(game.block(n, n2))) for n2 in others)
        scale = spread if spread > 0 else 1.0
        for n2 in others:
            blk = game.block(n, n2)
            cost[idx.slice(n), idx.slice(n2)] = (blk.max() - blk) / scale + 1.0
    e = np.zeros((n_agents, m))
    e[owner, np.arange(m)] = 1.0
    big = np.zeros((m + n_agents, m + n_agents))
    big[:m, :m] = cost
    big[:m, m:] = -e.T
    big[m:, :m] = e
    q = np.concatenate([np.zeros(m), -np.ones(n_agents)])
    if start is not None:
        d = np.concatenate([cost @ idx.check(start), np.ones(n_agents)])
    else:
        d = None
    z = lemke(big, q, d, cap=cap)
    sigma = z[:m]
    for n in range(n_agents):
        sl = idx.slice(n)
        tot = sigma[sl].sum()
        if tot <= 0:
            raise LcpError(f"agent {n} received an empty strategy")
        sigma[sl] /= tot
    return sigma
