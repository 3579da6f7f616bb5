"""Graphical games: payoffs depend only on an agent's family.

The deviation Jacobian is assembled per agent from a single contraction of
the family table.  Columns of agents outside the family are not derivatives
of anything the agent sees; every such column equals the family expectation
``V_a`` and is filled by copying.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from . import kernels
from .normal_form import NormalFormGame
from .views import MixedView

DEFAULT_FLATTEN_CAP = 10**6


class GraphicalGame(MixedView):
    """Graphical game with family-local payoff tables.

    Parameters
    ----------
    action_counts : sequence of int
        Actions per agent.
    parents : sequence of sequence of int
        Ordered parent list per agent (directed edges parent -> agent).
    family_payoffs : sequence of array_like
        Per agent, a table over ``(self, parents...)`` with the last parent
        varying fastest; flat or already shaped.

    Attributes
    ----------
    op_count : int
        Running count of elementary multiply-adds spent in Jacobian
        evaluations, used to check the per-iteration complexity bound.
    """

    def __init__(self, action_counts: Sequence[int], parents, family_payoffs) -> None:
        super().__init__(action_counts)
        n = self.n_agents
        if len(parents) != n or len(family_payoffs) != n:
            raise ValueError("parents and family_payoffs need one entry per agent")
        self.parents = tuple(tuple(int(p) for p in ps) for ps in parents)
        sizes = self.indexing.sizes
        tables = []
        for i, (ps, tab) in enumerate(zip(self.parents, family_payoffs)):
            if i in ps:
                raise ValueError(f"agent {i} lists itself as a parent")
            if len(set(ps)) != len(ps):
                raise ValueError(f"agent {i} has duplicate parents")
            if any(p < 0 or p >= n for p in ps):
                raise ValueError(f"agent {i} has an out-of-range parent")
            shape = (sizes[i],) + tuple(sizes[p] for p in ps)
            arr = np.asarray(tab, dtype=float)
            if arr.size != int(np.prod(shape)):
                raise ValueError(f"family table of agent {i} has {arr.size} entries, expected {int(np.prod(shape))}")
            if not np.all(np.isfinite(arr)):
                raise ValueError("payoffs must be finite")
            arr = np.ascontiguousarray(arr.reshape(shape))
            arr.setflags(write=False)
            tables.append(arr)
        self.tables = tuple(tables)
        self._cards = [np.array(t.shape, dtype=np.int64) for t in self.tables]
        self._poffs = []
        for ps in self.parents:
            po = np.zeros(len(ps), dtype=np.int64)
            acc = 0
            for j, p in enumerate(ps):
                po[j] = acc
                acc += sizes[p]
            self._poffs.append(po)
        self.op_count = 0

    @classmethod
    def undirected(cls, action_counts, neighbours, family_payoffs) -> "GraphicalGame":
        """Build from symmetric neighbour lists (each edge listed on both ends)."""
        for i, nb in enumerate(neighbours):
            for j in nb:
                if i not in neighbours[j]:
                    raise ValueError(f"edge {i}-{j} is not symmetric")
        return cls(action_counts, neighbours, family_payoffs)

    def family(self, n: int) -> tuple:
        return (n,) + self.parents[n]

    # -- kernels -----------------------------------------------------------
    def _parent_probs(self, sigma, n):
        ps = self.parents[n]
        if not ps:
            return np.zeros(0)
        return np.concatenate([sigma[self.indexing.slice(p)] for p in ps])

    def _contract(self, sigma, n):
        tab = self.tables[n]
        return kernels.family_contract(tab.ravel(), self._cards[n], self._parent_probs(sigma, n), self._poffs[n])

    def deviation_vector(self, sigma):
        sigma = self.indexing.check(sigma)
        out = np.empty(self.dim)
        for n in range(self.n_agents):
            v = self.tables[n]
            for p in reversed(self.parents[n]):
                v = v @ sigma[self.indexing.slice(p)]
            out[self.indexing.slice(n)] = v
        return out

    def deviation_jacobian(self, sigma):
        sigma = self.indexing.check(sigma)
        m = self.dim
        jac = np.empty((m, m))
        ops = 0
        for n in range(self.n_agents):
            rows = self.indexing.slice(n)
            v, jp = self._contract(sigma, n)
            ops += self.tables[n].size * (1 + len(self.parents[n]))
            # non-family columns: the family expectation, copied across
            jac[rows, :] = v[:, None]
            jac[rows, rows] = 0.0
            for j, p in enumerate(self.parents[n]):
                po = int(self._poffs[n][j])
                jac[rows, self.indexing.slice(p)] = jp[:, po:po + self.indexing.sizes[p]]
            ops += v.size * m
        self.op_count += ops
        return jac

    def payoff_range(self, n):
        t = self.tables[n]
        return float(t.max() - t.min())

    def is_affine_on(self, signature):
        if self.n_agents <= 2:
            return True
        mixed = self.mixed_agents(signature)
        return all(sum(bool(mixed[p]) for p in ps) <= 1 for ps in self.parents)

    def pure_payoff(self, actions: Sequence[int]) -> np.ndarray:
        return np.array([self.tables[n][tuple(int(actions[k]) for k in self.family(n))] for n in range(self.n_agents)])

    def complexity_bound(self) -> int:
        """Operation ceiling ``|N| f d^f + d^2 |N|^2`` for one Jacobian."""
        d = max(self.indexing.sizes)
        f = max(len(self.family(n)) for n in range(self.n_agents))
        n = self.n_agents
        return n * f * d**f + d * d * n * n


def graphical_deviation_vector(game: GraphicalGame, sigma) -> np.ndarray:
    return game.deviation_vector(sigma)


def graphical_deviation_jacobian(game: GraphicalGame, sigma) -> np.ndarray:
    return game.deviation_jacobian(sigma)


def flatten_to_normal_form(game: GraphicalGame, cap: int = DEFAULT_FLATTEN_CAP) -> NormalFormGame:
    """Dense normal-form game equivalent to ``game``.

    Raises
    ------
    ValueError
        If the joint action space exceeds ``cap`` entries.
    """
    sizes = game.indexing.sizes
    total = int(np.prod(sizes, dtype=object))
    if total > cap:
        raise ValueError(f"joint action space of {total} entries exceeds the cap of {cap}")
    n = game.n_agents
    tensors = np.empty((n,) + tuple(sizes))
    for i in range(n):
        fam = game.family(i)
        # put the family axes in agent order, then broadcast over the rest
        order = np.argsort(fam)
        t = np.transpose(game.tables[i], order)
        shape = [1] * n
        for k in fam:
            shape[k] = sizes[k]
        tensors[i] = np.broadcast_to(t.reshape(shape), tuple(sizes))
    return NormalFormGame(sizes, tensors)
