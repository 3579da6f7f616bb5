"""Discrete factors, clique trees, and pair/triple clique marginals.

Scopes are kept sorted by variable id so that factor tables have a canonical
layout.  Calibration is plain two-pass sum-product from clique 0.  Joint
marginals over two or three cliques follow from the separation property of
the tree:

* adjacent cliques: ``P(Ci, Cj) = P(Ci) P(Cj) / P(Sij)``;
* farther apart: ``P(Ci, Cj) = sum P(Ci, Ck) P(Ck, Cj) / P(Ck)`` with ``Ck``
  the neighbour of ``Cj`` on the path, summing out ``Ck`` minus ``Ci u Cj``;
* three cliques meet at a unique median clique ``C*``; the joint is the
  product of the three pair marginals with ``C*`` divided by ``P(C*)^2``.

Zero divided by zero is zero throughout.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np


class OpCounter:
    """Running total of factor entries produced by products."""

    def __init__(self) -> None:
        self.count = 0

    def reset(self) -> None:
        self.count = 0


op_counter = OpCounter()


class Factor:
    """Non-negative table over a sorted tuple of discrete variables.

    Parameters
    ----------
    scope : sequence of int
        Variable ids; reordered ascending together with the table axes.
    cards : sequence of int
        Domain size of each scope variable.
    values : array_like
        Table of shape ``cards`` (or flat, row-major).
    """

    __slots__ = ("scope", "cards", "values")

    def __init__(self, scope: Sequence[int], cards: Sequence[int], values) -> None:
        scope = tuple(int(v) for v in scope)
        cards = tuple(int(c) for c in cards)
        if len(set(scope)) != len(scope):
            raise ValueError("scope variables must be distinct")
        if len(cards) != len(scope):
            raise ValueError("one domain size per scope variable")
        vals = np.asarray(values, dtype=float)
        if vals.size != int(np.prod(cards, dtype=np.int64)):
            raise ValueError(f"table has {vals.size} entries, expected {int(np.prod(cards))}")
        vals = vals.reshape(cards)
        order = np.argsort(scope, kind="stable")
        if np.any(order != np.arange(len(scope))):
            vals = np.transpose(vals, order)
            scope = tuple(scope[i] for i in order)
            cards = tuple(cards[i] for i in order)
        self.scope = scope
        self.cards = cards
        self.values = np.array(vals, order="C")

    @classmethod
    def _trusted(cls, scope: tuple, cards: tuple, values: np.ndarray) -> "Factor":
        """Internal constructor for already sorted, shaped input."""
        f = cls.__new__(cls)
        f.scope = scope
        f.cards = cards
        f.values = values
        return f

    @classmethod
    def scalar(cls, value: float = 1.0) -> "Factor":
        return cls((), (), np.array(value, dtype=float))

    @property
    def size(self) -> int:
        return int(self.values.size)

    def card_of(self, var: int) -> int:
        return self.cards[self.scope.index(var)]

    def __repr__(self) -> str:
        return f"Factor(scope={self.scope}, cards={self.cards})"

    # -- algebra ------------------------------------------------------------
    def product(self, other: "Factor") -> "Factor":
        return factor_product(self, other)

    def __mul__(self, other: "Factor") -> "Factor":
        return factor_product(self, other)

    def sum_out(self, variables: Iterable[int]) -> "Factor":
        """Marginalise the given variables away (absent ones are an error)."""
        drop = set(int(v) for v in variables)
        missing = drop - set(self.scope)
        if missing:
            raise KeyError(f"variables {sorted(missing)} not in scope {self.scope}")
        if not drop:
            return self
        axes = tuple(i for i, v in enumerate(self.scope) if v in drop)
        keep = [i for i, v in enumerate(self.scope) if v not in drop]
        return Factor._trusted(tuple(self.scope[i] for i in keep), tuple(self.cards[i] for i in keep), np.asarray(self.values.sum(axis=axes)))

    def marginal(self, keep: Iterable[int]) -> "Factor":
        """Marginal on ``keep`` intersected with the scope."""
        keep = set(int(v) for v in keep)
        return self.sum_out([v for v in self.scope if v not in keep])

    def divide(self, other: "Factor") -> "Factor":
        """Entrywise quotient by a factor over a subset of the scope; 0/0 is 0."""
        if not set(other.scope) <= set(self.scope):
            raise ValueError("divisor scope must be contained in the dividend scope")
        shape = [1] * len(self.scope)
        for v, c in zip(other.scope, other.cards):
            i = self.scope.index(v)
            if self.cards[i] != c:
                raise ValueError(f"domain size conflict on variable {v}")
            shape[i] = c
        den = other.values.reshape(shape)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(den == 0, 0.0, self.values / np.where(den == 0, 1.0, den))
        return Factor._trusted(self.scope, self.cards, out)

    def normalized(self) -> "Factor":
        tot = self.values.sum()
        return Factor(self.scope, self.cards, self.values / tot if tot > 0 else self.values)


def factor_product(f: Factor, g: Factor) -> Factor:
    """Product over the union scope; shared variables must agree on size."""
    union = sorted(set(f.scope) | set(g.scope))
    cards = {}
    for fac in (f, g):
        for v, c in zip(fac.scope, fac.cards):
            if cards.setdefault(v, c) != c:
                raise ValueError(f"domain size conflict on variable {v}")
    label = {v: i for i, v in enumerate(union)}
    out = np.einsum(f.values, [label[v] for v in f.scope], g.values, [label[v] for v in g.scope], list(range(len(union))))
    op_counter.count += int(out.size)
    return Factor._trusted(tuple(union), tuple(cards[v] for v in union), out)


def multi_product(factors: Sequence[Factor], keep: Optional[Iterable[int]] = None) -> Factor:
    """Product of several factors, optionally summed down to ``keep`` in one contraction."""
    cards = {}
    for fac in factors:
        for v, c in zip(fac.scope, fac.cards):
            if cards.setdefault(v, c) != c:
                raise ValueError(f"domain size conflict on variable {v}")
    union = sorted(cards)
    out_vars = union if keep is None else sorted(set(keep) & set(union))
    label = {v: i for i, v in enumerate(union)}
    ops = []
    for fac in factors:
        ops += [fac.values, [label[v] for v in fac.scope]]
    out_labels = [label[v] for v in out_vars]
    path = False
    if len(factors) > 2:
        key = (tuple((fac.scope, fac.cards) for fac in factors), tuple(out_vars))
        path = _PATHS.get(key)
        if path is None:
            path = np.einsum_path(*ops, out_labels, optimize="greedy")[0]
            _PATHS[key] = path
    vals = np.einsum(*ops, out_labels, optimize=path)
    op_counter.count += int(np.prod([cards[v] for v in union], dtype=np.int64))
    return Factor._trusted(tuple(out_vars), tuple(cards[v] for v in out_vars), np.asarray(vals))


_PATHS: Dict[tuple, list] = {}


def factor_marginalize(f: Factor, var: int) -> Factor:
    return f.sum_out([var])


# ---------------------------------------------------------------------------
# Bayesian networks
# ---------------------------------------------------------------------------


@dataclass
class BayesNet:
    """DAG of discrete variables with one CPD factor each.

    Parameters
    ----------
    cards : sequence of int
        Domain size per variable id.
    parents : sequence of sequence of int
    cpds : sequence of Factor
        CPD of variable ``v`` has scope ``{v} u parents[v]``.
    extra_families : sequence of sequence of int
        Further variable sets that must each fit in one clique (used for the
        parent sets of utility functions).
    """

    cards: Sequence[int]
    parents: Sequence[Sequence[int]]
    cpds: List[Factor]
    extra_families: Sequence[Sequence[int]] = ()

    def __post_init__(self) -> None:
        n = len(self.cards)
        if len(self.parents) != n or len(self.cpds) != n:
            raise ValueError("need one parent list and CPD per variable")
        topo_order(self.parents)
        for v, (ps, cpd) in enumerate(zip(self.parents, self.cpds)):
            if set(cpd.scope) != {v, *ps}:
                raise ValueError(f"CPD of variable {v} has the wrong scope")

    @property
    def n_vars(self) -> int:
        return len(self.cards)

    def families(self) -> List[Tuple[int, ...]]:
        fams = [tuple(sorted({v, *ps})) for v, ps in enumerate(self.parents)]
        fams += [tuple(sorted(set(f))) for f in self.extra_families if len(f)]
        return fams

    def check_normalized(self, tol: float = 1e-10) -> None:
        for v, cpd in enumerate(self.cpds):
            s = cpd.sum_out([v]).values
            if np.abs(s - 1.0).max(initial=0.0) > tol:
                raise ValueError(f"CPD of variable {v} does not normalise")

    def joint(self) -> Factor:
        """Full joint distribution (brute force; small networks only)."""
        out = Factor.scalar()
        for cpd in self.cpds:
            out = out * cpd
        return out


def topo_order(parents: Sequence[Sequence[int]]) -> List[int]:
    """Topological order, smallest id first among ready nodes; rejects cycles."""
    import heapq

    n = len(parents)
    indeg = [len(set(ps)) for ps in parents]
    kids = [[] for _ in range(n)]
    for v, ps in enumerate(parents):
        for p in set(ps):
            if not 0 <= p < n:
                raise ValueError(f"parent {p} out of range")
            kids[p].append(v)
    ready = [v for v in range(n) if indeg[v] == 0]
    heapq.heapify(ready)
    out = []
    while ready:
        v = heapq.heappop(ready)
        out.append(v)
        for k in kids[v]:
            indeg[k] -= 1
            if indeg[k] == 0:
                heapq.heappush(ready, k)
    if len(out) != n:
        raise ValueError("graph has a directed cycle")
    return out


# ---------------------------------------------------------------------------
# clique trees
# ---------------------------------------------------------------------------


def _moral_graph(n_vars: int, families: Iterable[Sequence[int]]) -> List[set]:
    adj = [set() for _ in range(n_vars)]
    for fam in families:
        for a, b in itertools.combinations(fam, 2):
            adj[a].add(b)
            adj[b].add(a)
    return adj


def elimination_order(adj: List[set], priority: Optional[Sequence[int]] = None) -> List[int]:
    """Greedy min-fill order with lowest-id tie-break.

    ``priority`` optionally groups variables: all variables of a lower
    priority value are eliminated before any of a higher one, min-fill
    deciding within a group.
    """
    g = [set(a) for a in adj]
    alive = set(range(len(g)))
    prio = [0] * len(g) if priority is None else list(priority)
    order = []
    while alive:
        best = None
        for v in sorted(alive):
            nb = list(g[v])
            fill = sum(1 for a, b in itertools.combinations(nb, 2) if b not in g[a])
            key = (prio[v], fill, v)
            if best is None or key < best[0]:
                best = (key, v)
        v = best[1]
        nb = list(g[v])
        for a, b in itertools.combinations(nb, 2):
            g[a].add(b)
            g[b].add(a)
        for a in nb:
            g[a].discard(v)
        alive.discard(v)
        order.append(v)
        g[v] = set(nb)
    return order


@dataclass
class CliqueTree:
    """Clique tree with potentials, calibrated beliefs and sepset marginals.

    Attributes
    ----------
    cliques : list of tuple of int
    edges : list of (int, int)
    neighbours : list of list of int
    cards : list of int
        Domain size per network variable.
    beliefs : list of Factor, optional
        Calibrated clique marginals.
    sepsets : dict
        ``(i, j)`` with ``i < j`` mapped to the sepset marginal.
    """

    cliques: List[Tuple[int, ...]]
    edges: List[Tuple[int, int]]
    cards: List[int]
    assignment: List[int] = field(default_factory=list)
    beliefs: Optional[List[Factor]] = None
    sepsets: Dict[Tuple[int, int], Factor] = field(default_factory=dict)

    def __post_init__(self) -> None:
        k = len(self.cliques)
        self.neighbours = [[] for _ in range(k)]
        for a, b in self.edges:
            self.neighbours[a].append(b)
            self.neighbours[b].append(a)
        for nb in self.neighbours:
            nb.sort()
        # rooted copy at clique 0 for path and median queries
        self.parent = [-1] * k
        self.depth = [0] * k
        self.bfs = []
        if k:
            seen = [False] * k
            seen[0] = True
            q = deque([0])
            while q:
                u = q.popleft()
                self.bfs.append(u)
                for v in self.neighbours[u]:
                    if not seen[v]:
                        seen[v] = True
                        self.parent[v] = u
                        self.depth[v] = self.depth[u] + 1
                        q.append(v)
            if len(self.bfs) != k:
                raise ValueError("clique graph is not connected")

    @property
    def calibrated(self) -> bool:
        return self.beliefs is not None

    def __len__(self) -> int:
        return len(self.cliques)

    def clique_containing(self, variables: Iterable[int]) -> int:
        """Smallest-index clique containing every variable given."""
        need = set(variables)
        for i, c in enumerate(self.cliques):
            if need <= set(c):
                return i
        raise KeyError(f"no clique contains {sorted(need)}")

    def lca(self, a: int, b: int) -> int:
        while self.depth[a] > self.depth[b]:
            a = self.parent[a]
        while self.depth[b] > self.depth[a]:
            b = self.parent[b]
        while a != b:
            a, b = self.parent[a], self.parent[b]
        return a

    def median(self, i: int, j: int, k: int) -> int:
        """Unique clique on all three pairwise paths."""
        cands = [self.lca(i, j), self.lca(j, k), self.lca(i, k)]
        return max(cands, key=lambda c: self.depth[c])

    def path(self, i: int, j: int) -> List[int]:
        m = self.lca(i, j)
        up = [i]
        while up[-1] != m:
            up.append(self.parent[up[-1]])
        down = [j]
        while down[-1] != m:
            down.append(self.parent[down[-1]])
        return up + down[-2::-1]

    def check_structure(self, families: Iterable[Sequence[int]]) -> None:
        """Assert family preservation and the running-intersection property."""
        sets = [set(c) for c in self.cliques]
        for fam in families:
            if not any(set(fam) <= s for s in sets):
                raise AssertionError(f"family {tuple(fam)} lies in no clique")
        for v in range(len(self.cards)):
            holders = [i for i, s in enumerate(sets) if v in s]
            if len(holders) <= 1:
                continue
            hs = set(holders)
            seen = {holders[0]}
            q = deque([holders[0]])
            while q:
                u = q.popleft()
                for w in self.neighbours[u]:
                    if w in hs and w not in seen:
                        seen.add(w)
                        q.append(w)
            if seen != hs:
                raise AssertionError(f"cliques holding variable {v} are not connected")

    def clique_factor_shape(self, i: int) -> tuple:
        return tuple(self.cards[v] for v in self.cliques[i])


def build_clique_tree(net: BayesNet, priority: Optional[Sequence[int]] = None) -> CliqueTree:
    """Moralise, triangulate by min-fill, keep maximal cliques, join by a maximum spanning tree.

    Parameters
    ----------
    net : BayesNet
    priority : sequence of int, optional
        Elimination groups (see :func:`elimination_order`).
    """
    fams = net.families()
    adj = _moral_graph(net.n_vars, fams)
    order = elimination_order(adj, priority)
    g = [set(a) for a in adj]
    raw = []
    for v in order:
        nb = g[v]
        raw.append(tuple(sorted(nb | {v})))
        for a, b in itertools.combinations(nb, 2):
            g[a].add(b)
            g[b].add(a)
        for a in nb:
            g[a].discard(v)
        g[v] = set()
    cliques = []
    for c in raw:
        s = set(c)
        if any(s <= set(o) for o in cliques):
            continue
        cliques = [o for o in cliques if not set(o) <= s]
        cliques.append(c)
    cliques = sorted(cliques, key=lambda c: (c[0], c))
    # Kruskal on sepset sizes; ties broken by the lower clique pair
    cand = []
    for i, j in itertools.combinations(range(len(cliques)), 2):
        cand.append((-len(set(cliques[i]) & set(cliques[j])), i, j))
    cand.sort()
    root = list(range(len(cliques)))

    def find(x):
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    edges = []
    for _, i, j in cand:
        a, b = find(i), find(j)
        if a != b:
            root[a] = b
            edges.append((i, j))
    tree = CliqueTree(cliques, edges, list(net.cards))
    tree.check_structure(fams)
    tree.assignment = [tree.clique_containing(f) for f in (tuple(sorted({v, *ps})) for v, ps in enumerate(net.parents))]
    return tree


def calibrate(tree: CliqueTree, net: BayesNet) -> CliqueTree:
    """Two-pass sum-product; beliefs become exact clique marginals.

    Returns a calibrated copy; ``tree`` itself is left untouched.
    """
    k = len(tree.cliques)
    pots = []
    for i, c in enumerate(tree.cliques):
        pots.append(Factor(c, [tree.cards[v] for v in c], np.ones([tree.cards[v] for v in c])))
    for v, i in enumerate(tree.assignment):
        pots[i] = pots[i] * net.cpds[v]
    msgs: Dict[Tuple[int, int], Factor] = {}

    def send(u, w):
        inc = [pots[u]] + [msgs[(x, u)] for x in tree.neighbours[u] if x != w]
        sep = set(tree.cliques[u]) & set(tree.cliques[w])
        msgs[(u, w)] = multi_product(inc, keep=sep)

    for u in reversed(tree.bfs):
        if tree.parent[u] >= 0:
            send(u, tree.parent[u])
    for u in tree.bfs:
        for w in tree.neighbours[u]:
            if w != tree.parent[u]:
                send(u, w)
    beliefs = []
    for u in range(k):
        inc = [pots[u]] + [msgs[(x, u)] for x in tree.neighbours[u]]
        beliefs.append(multi_product(inc, keep=tree.cliques[u]))
    out = CliqueTree(tree.cliques, tree.edges, tree.cards, list(tree.assignment))
    out.beliefs = beliefs
    for a, b in tree.edges:
        i, j = min(a, b), max(a, b)
        out.sepsets[(i, j)] = beliefs[i].marginal(set(tree.cliques[i]) & set(tree.cliques[j]))
    return out


def _sepset(tree: CliqueTree, i: int, j: int) -> Factor:
    return tree.sepsets[(min(i, j), max(i, j))]


class PairTable:
    """All-pairs clique marginals of a calibrated tree, filled by path length."""

    def __init__(self, tree: CliqueTree) -> None:
        if not tree.calibrated:
            raise ValueError("tree must be calibrated first")
        self.tree = tree
        k = len(tree)
        self._pairs: Dict[Tuple[int, int], Factor] = {}
        for i in range(k):
            self._pairs[(i, i)] = tree.beliefs[i]
        for a, b in tree.edges:
            i, j = min(a, b), max(a, b)
            self._pairs[(i, j)] = (tree.beliefs[i] * tree.beliefs[j]).divide(_sepset(tree, i, j))
        # breadth-first from each clique: every pair is built from a pair one step shorter
        for i in range(k):
            dist = {i: 0}
            prev = {i: -1}
            q = deque([i])
            while q:
                u = q.popleft()
                for w in tree.neighbours[u]:
                    if w not in dist:
                        dist[w] = dist[u] + 1
                        prev[w] = u
                        q.append(w)
                        if dist[w] >= 2 and (min(i, w), max(i, w)) not in self._pairs:
                            self._pairs[(min(i, w), max(i, w))] = self._extend(i, u, w)

    def _extend(self, i: int, k: int, j: int) -> Factor:
        tree = self.tree
        keep = set(tree.cliques[i]) | set(tree.cliques[j])
        return multi_product([self[i, k], self[k, j], _inverse(tree.beliefs[k])], keep=keep)

    def __getitem__(self, key) -> Factor:
        i, j = key
        return self._pairs[(min(i, j), max(i, j))]

    def __len__(self) -> int:
        return len(self._pairs)


def _inverse(f: Factor) -> Factor:
    with np.errstate(divide="ignore"):
        vals = np.where(f.values == 0, 0.0, 1.0 / np.where(f.values == 0, 1.0, f.values))
    return Factor._trusted(f.scope, f.cards, vals)


def all_pairs_marginals(tree: CliqueTree) -> PairTable:
    return PairTable(tree)


def triple_marginal(tree: CliqueTree, pairs: PairTable, i: int, j: int, k: int, keep: Optional[Iterable[int]] = None) -> Factor:
    """Joint marginal over three cliques (or the subset ``keep`` of their union).

    When one clique lies on the path between the other two the on-path
    formula is used; otherwise the three paths meet at a median clique
    ``C*`` outside the triple.
    """
    union = set(tree.cliques[i]) | set(tree.cliques[j]) | set(tree.cliques[k])
    keep = union if keep is None else set(keep) & union
    if i == j == k:
        return tree.beliefs[i].marginal(keep)
    star = tree.median(i, j, k)
    inv = _inverse(tree.beliefs[star])
    if star in (i, j, k):
        others = sorted({i, j, k} - {star})
        if len(others) == 1:
            return pairs[star, others[0]].marginal(keep)
        a, b = others
        parts = [pairs[a, star], pairs[star, b], inv]
    else:
        parts = [pairs[i, star], pairs[j, star], pairs[k, star], inv, inv]
    return multi_product(parts, keep=keep)
