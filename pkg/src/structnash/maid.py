"""Multi-agent influence diagrams in sequence form.

Chance and decision nodes are the random variables of a Bayesian network;
utility nodes are deterministic functions of their parents and only add
their parent sets as families the clique tree must cover.  Agent ``n``'s
terminal sequences are the joint assignments to its last decision and that
decision's parents, which under perfect recall include every earlier
decision of ``n`` and its parents.

``V`` and its Jacobian come from clique marginals: for a utility node ``U``
of agent ``n``,

* ``V_h += E[U 1(h)] / sigma_n(h)``,
* ``J_{h,h'} += E[U 1(h) 1(h')] / (sigma_n(h) sigma_n'(h'))``,

where the expectations need the joint over ``Pa(U)`` and the sequence
scopes of ``n`` and ``n'``, read from pair and triple clique marginals.

MAID JSON format::

    {"agents": 2,
     "nodes": [
        {"name": "A", "kind": "decision", "owner": 0, "parents": [], "domain": 2},
        {"name": "X", "kind": "chance", "parents": ["A"], "domain": 2, "cpd": [...]},
        {"name": "U", "kind": "utility", "owner": 0, "parents": ["A", "X"], "table": [...]}],
     "relevance_edges": [["A", "B"]]}

Tables are flat with the first parent varying slowest and, for CPDs, the
node's own value fastest.  ``domain`` is a size or a list of labels.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .bayes import BayesNet, CliqueTree, Factor, PairTable, build_clique_tree, calibrate, multi_product, topo_order, triple_marginal
from .continuation import PathState, TraceConfig, newton_polish, solve_continuation
from .extensive import LeafTableGame
from .sequence_form import DEFAULT_EPSILON, PerfectRecallError, SequenceFormSpace, SequenceFormView, Treeplex

KINDS = ("chance", "decision", "utility")


@dataclass
class MaidNode:
    name: str
    kind: str
    parents: Tuple[str, ...]
    domain: Tuple
    owner: Optional[int] = None
    table: Optional[np.ndarray] = None

    @property
    def card(self) -> int:
        return len(self.domain)


class Maid:
    """Validated MAID.

    Parameters
    ----------
    n_agents : int
    nodes : sequence of MaidNode or dict
    relevance_edges : sequence of (str, str), optional
        User-supplied relevance graph: ``(D, D2)`` means ``D2`` is relevant
        to ``D``.
    """

    def __init__(self, n_agents: int, nodes, relevance_edges=None) -> None:
        self.n_agents = int(n_agents)
        self.nodes: List[MaidNode] = [_as_node(x) for x in nodes]
        self.by_name = {}
        for nd in self.nodes:
            if nd.name in self.by_name:
                raise ValueError(f"duplicate node name {nd.name!r}")
            self.by_name[nd.name] = nd
        for nd in self.nodes:
            if nd.kind not in KINDS:
                raise ValueError(f"node {nd.name!r} has unknown kind {nd.kind!r}")
            for p in nd.parents:
                if p not in self.by_name:
                    raise ValueError(f"node {nd.name!r} has unknown parent {p!r}")
                if self.by_name[p].kind == "utility":
                    raise ValueError(f"utility node {p!r} may not have children")
            if nd.kind != "utility" and nd.card < 1:
                raise ValueError(f"node {nd.name!r} has an empty domain")
            if nd.kind in ("decision", "utility") and not (nd.owner is not None and 0 <= nd.owner < self.n_agents):
                raise ValueError(f"node {nd.name!r} needs an owner in range")
        # variables are chance and decision nodes, numbered in the given order
        self.variables = [nd.name for nd in self.nodes if nd.kind != "utility"]
        self.var_id = {nm: i for i, nm in enumerate(self.variables)}
        self.utilities = [nd.name for nd in self.nodes if nd.kind == "utility"]
        topo_order([[self.var_id[p] for p in self.by_name[v].parents] for v in self.variables])
        for nd in self.nodes:
            shape = self.parent_cards(nd.name)
            if nd.kind == "chance":
                t = np.asarray(nd.table, dtype=float)
                if t.size != int(np.prod(shape + (nd.card,))):
                    raise ValueError(f"CPD of {nd.name!r} has the wrong size")
                t = t.reshape(shape + (nd.card,))
                if t.min(initial=0.0) < 0 or np.abs(t.sum(-1) - 1.0).max(initial=0.0) > 1e-10:
                    raise ValueError(f"CPD of {nd.name!r} does not normalise")
                nd.table = t
            elif nd.kind == "utility":
                t = np.asarray(nd.table, dtype=float)
                if t.size != int(np.prod(shape)):
                    raise ValueError(f"utility table of {nd.name!r} has the wrong size")
                nd.table = t.reshape(shape)
        self.relevance_edges = None if relevance_edges is None else [tuple(e) for e in relevance_edges]
        self.check_perfect_recall()

    # -- structure -------------------------------------------------------
    def parent_cards(self, name: str) -> tuple:
        return tuple(self.by_name[p].card for p in self.by_name[name].parents)

    def topological(self) -> List[str]:
        order = topo_order([[self.var_id[p] for p in self.by_name[v].parents] for v in self.variables])
        return [self.variables[i] for i in order]

    def decisions(self, n: Optional[int] = None) -> List[str]:
        """Decision nodes (of agent ``n``) in topological order."""
        return [v for v in self.topological() if self.by_name[v].kind == "decision" and (n is None or self.by_name[v].owner == n)]

    def utilities_of(self, n: int) -> List[str]:
        return [u for u in self.utilities if self.by_name[u].owner == n]

    def check_perfect_recall(self) -> None:
        for n in range(self.n_agents):
            ds = self.decisions(n)
            for a, b in zip(ds, ds[1:]):
                pa_b = set(self.by_name[b].parents)
                need = {a} | set(self.by_name[a].parents)
                if not need <= pa_b:
                    missing = sorted(need - pa_b)
                    raise PerfectRecallError(f"decision {b!r} of agent {n} forgets {missing}")

    def sequence_scope(self, n: int) -> List[str]:
        """Variables whose joint assignment names one of agent ``n``'s sequences."""
        ds = self.decisions(n)
        if not ds:
            return []
        last = ds[-1]
        return [last] + list(self.by_name[last].parents)

    def descendants(self, name: str) -> set:
        kids: Dict[str, list] = {nd.name: [] for nd in self.nodes}
        for nd in self.nodes:
            for p in nd.parents:
                kids[p].append(nd.name)
        out, stack = set(), [name]
        while stack:
            for k in kids[stack.pop()]:
                if k not in out:
                    out.add(k)
                    stack.append(k)
        return out

    def ancestors(self, name: str) -> set:
        out, stack = set(), [name]
        while stack:
            for p in self.by_name[stack.pop()].parents:
                if p not in out:
                    out.add(p)
                    stack.append(p)
        return out

    # -- serialisation --------------------------------------------------------
    def to_json(self) -> dict:
        nodes = []
        for nd in self.nodes:
            d = {"name": nd.name, "kind": nd.kind, "parents": list(nd.parents), "domain": list(nd.domain)}
            if nd.owner is not None:
                d["owner"] = nd.owner
            if nd.kind == "chance":
                d["cpd"] = np.asarray(nd.table).ravel().tolist()
            elif nd.kind == "utility":
                d["table"] = np.asarray(nd.table).ravel().tolist()
            nodes.append(d)
        out = {"agents": self.n_agents, "nodes": nodes}
        if self.relevance_edges is not None:
            out["relevance_edges"] = [list(e) for e in self.relevance_edges]
        return out

    @classmethod
    def from_json(cls, data: dict) -> "Maid":
        return cls(data["agents"], data["nodes"], data.get("relevance_edges"))

    def with_decisions_as_chance(self, rules: Dict[str, np.ndarray]) -> "Maid":
        """Copy in which each decision named in ``rules`` becomes a chance node with that CPD."""
        nodes = []
        for nd in self.nodes:
            if nd.name in rules:
                nodes.append(replace(nd, kind="chance", owner=None, table=np.asarray(rules[nd.name], dtype=float)))
            else:
                nodes.append(replace(nd))
        return Maid(self.n_agents, nodes)


def _as_node(x) -> MaidNode:
    if isinstance(x, MaidNode):
        return replace(x)
    dom = x.get("domain", ())
    dom = tuple(range(int(dom))) if isinstance(dom, (int, np.integer)) else tuple(dom)
    table = x.get("cpd", x.get("table"))
    return MaidNode(
        name=str(x["name"]),
        kind=str(x["kind"]),
        parents=tuple(str(p) for p in x.get("parents", ())),
        domain=dom if x["kind"] != "utility" else (),
        owner=None if x.get("owner") is None else int(x["owner"]),
        table=None if table is None else np.asarray(table, dtype=float),
    )


def load_maid(path) -> Maid:
    with open(path) as fh:
        return Maid.from_json(json.load(fh))


# ---------------------------------------------------------------------------
# sequence space
# ---------------------------------------------------------------------------


def infoset_key(decision: str, values: Sequence[int]) -> tuple:
    return (decision, tuple(int(v) for v in values))


@dataclass
class AgentSequences:
    """Agent ``n``'s sequence scope and the coordinate of each joint assignment."""

    scope: Tuple[int, ...]
    cards: Tuple[int, ...]
    coords: np.ndarray


def build_space(maid: Maid, epsilon: float = DEFAULT_EPSILON) -> Tuple[SequenceFormSpace, List[AgentSequences]]:
    """Terminal-sequence space of a perfect-recall MAID.

    Returns
    -------
    space : SequenceFormSpace
    sequences : list of AgentSequences
        Per agent, a table over the sorted variable scope mapping each joint
        assignment to its global coordinate.
    """
    tps = []
    for n in range(maid.n_agents):
        tp = Treeplex()
        ds = maid.decisions(n)
        for j, d in enumerate(ds):
            pa = maid.by_name[d].parents
            for vals in itertools.product(*(range(c) for c in maid.parent_cards(d))):
                assign = dict(zip(pa, vals))
                hist = []
                for k in ds[:j]:
                    pk = maid.by_name[k].parents
                    hist.append((infoset_key(k, [assign[p] for p in pk]), assign[k]))
                tp.add_infoset(infoset_key(d, vals), tuple(hist), tuple(range(maid.by_name[d].card)))
        tps.append(tp)
    space = SequenceFormSpace(tps, epsilon)
    seqs = []
    for n, tp in enumerate(tps):
        names = maid.sequence_scope(n)
        ids = [maid.var_id[v] for v in names]
        order = np.argsort(ids)
        scope = tuple(ids[i] for i in order)
        cards = tuple(maid.by_name[names[i]].card for i in order)
        coords = np.zeros(cards, dtype=np.int64)
        off = space.indexing.offsets[n]
        if not names:
            coords[()] = off
        else:
            last = names[0]
            pa = maid.by_name[last].parents
            for vals in itertools.product(*(range(c) for c in maid.parent_cards(last))):
                i = tp.infoset_index(infoset_key(last, vals))
                for a in range(maid.by_name[last].card):
                    full = dict(zip(pa, vals))
                    full[last] = a
                    idx = tuple(full[names[k]] for k in order)
                    coords[idx] = off + tp.coord_of[tp.child(i, a)]
        seqs.append(AgentSequences(scope, cards, coords))
    return space, seqs


# ---------------------------------------------------------------------------
# the game view
# ---------------------------------------------------------------------------


class MaidGame(SequenceFormView):
    """Sequence-form view of a MAID with inference-based ``V`` and Jacobian.

    Parameters
    ----------
    maid : Maid
    epsilon : float
        Lower bound on realisation probabilities.
    """

    def __init__(self, maid: Maid, epsilon: float = DEFAULT_EPSILON) -> None:
        space, seqs = build_space(maid, epsilon)
        super().__init__(space)
        self.maid = maid
        self.sequences = seqs
        self.cards = [maid.by_name[v].card for v in maid.variables]
        self.parents = [[maid.var_id[p] for p in maid.by_name[v].parents] for v in maid.variables]
        self.chance_cpds = {}
        for v in maid.variables:
            nd = maid.by_name[v]
            if nd.kind == "chance":
                self.chance_cpds[v] = self._cpd_factor(v, nd.table)
        self.utility_factors = []
        for u in maid.utilities:
            nd = maid.by_name[u]
            scope = [maid.var_id[p] for p in nd.parents]
            self.utility_factors.append((nd.owner, Factor(scope, [self.cards[i] for i in scope], nd.table)))
        # chance variables are eliminated before decisions
        prio = [0 if maid.by_name[v].kind == "chance" else 1 for v in maid.variables]
        self.tree: CliqueTree = build_clique_tree(self._network(self._uniform_rules()), priority=prio)
        self.seq_clique = [self.tree.clique_containing(s.scope) for s in seqs]
        self.util_clique = [self.tree.clique_containing(f.scope) for _, f in self.utility_factors]
        self._cache_key = None
        self._cache = None

    # -- rules and plans ---------------------------------------------------
    def _cpd_factor(self, name: str, table: np.ndarray) -> Factor:
        maid = self.maid
        scope = [maid.var_id[p] for p in maid.by_name[name].parents] + [maid.var_id[name]]
        return Factor(scope, [self.cards[i] for i in scope], table)

    def _uniform_rules(self) -> Dict[str, np.ndarray]:
        out = {}
        for d in self.maid.decisions():
            shape = self.maid.parent_cards(d) + (self.maid.by_name[d].card,)
            out[d] = np.full(shape, 1.0 / shape[-1])
        return out

    def decision_rules(self, sigma: np.ndarray) -> Dict[str, np.ndarray]:
        """Decision rule tables ``P(D | Pa_D)`` induced by a plan."""
        beh = self.space.plan_to_behavior(sigma)
        out = {}
        for n, tp in enumerate(self.space.agents):
            for i, iset in enumerate(tp.infosets):
                d, vals = iset.key
                if d not in out:
                    out[d] = np.zeros(self.maid.parent_cards(d) + (self.maid.by_name[d].card,))
                out[d][vals] = beh[n][i]
        return out

    def plan_from_rules(self, rules: Dict[str, np.ndarray]) -> np.ndarray:
        beh = []
        for tp in self.space.agents:
            beh.append([np.asarray(rules[iset.key[0]], dtype=float)[iset.key[1]] for iset in tp.infosets])
        return self.space.behavior_to_plan(beh)

    def _network(self, rules: Dict[str, np.ndarray]) -> BayesNet:
        cpds = []
        for v in self.maid.variables:
            cpds.append(self.chance_cpds[v] if v in self.chance_cpds else self._cpd_factor(v, rules[v]))
        extra = [f.scope for _, f in self.utility_factors] if hasattr(self, "utility_factors") else ()
        return BayesNet(self.cards, self.parents, cpds, extra)

    def sequence_labels(self, n: int) -> List[str]:
        """Each sequence as the assignment it names, e.g. ``"A=0,B=1,A'=1"``."""
        s = self.sequences[n]
        labels = [""] * self.indexing.sizes[n]
        off = self.indexing.offsets[n]
        names = [self.maid.variables[v] for v in s.scope]
        for idx in np.ndindex(*s.cards):
            parts = [f"{nm}={self.maid.by_name[nm].domain[i]}" for nm, i in zip(names, idx)]
            labels[int(s.coords[idx]) - off] = ",".join(parts) or "empty"
        return labels

    def network(self, sigma: np.ndarray) -> BayesNet:
        return self._network(self.decision_rules(self.indexing.check(sigma)))

    def _plan_factor(self, sigma: np.ndarray, n: int) -> Factor:
        s = self.sequences[n]
        return Factor(s.scope, s.cards, sigma[s.coords])

    def _inference(self, sigma: np.ndarray):
        key = sigma.tobytes()
        if self._cache_key != key:
            tree = calibrate(self.tree, self.network(sigma))
            self._cache = (tree, PairTable(tree))
            self._cache_key = key
        return self._cache

    # -- payoffs -------------------------------------------------------------
    def payoffs(self, sigma):
        sigma = self.indexing.check(sigma)
        tree, _ = self._inference(sigma)
        out = np.zeros(self.n_agents)
        for (owner, uf), c in zip(self.utility_factors, self.util_clique):
            marg = tree.beliefs[c].marginal(uf.scope)
            out[owner] += float(multi_product([marg, uf], keep=()).values)
        return out

    def deviation_vector(self, sigma):
        sigma = self.indexing.check(sigma)
        tree, pairs = self._inference(sigma)
        v = np.zeros(self.dim)
        for n in range(self.n_agents):
            s = self.sequences[n]
            acc = None
            for (owner, uf), cu in zip(self.utility_factors, self.util_clique):
                if owner != n:
                    continue
                keep = set(s.scope) | set(uf.scope)
                joint = pairs[self.seq_clique[n], cu].marginal(keep)
                part = multi_product([joint, uf], keep=s.scope)
                acc = part if acc is None else Factor(acc.scope, acc.cards, acc.values + part.values)
            if acc is None:
                continue
            acc = acc.divide(self._plan_factor(sigma, n))
            np.add.at(v, s.coords.ravel(), acc.values.ravel())
        return v

    def deviation_jacobian(self, sigma):
        sigma = self.indexing.check(sigma)
        tree, pairs = self._inference(sigma)
        m = self.dim
        jac = np.zeros((m, m))
        for n in range(self.n_agents):
            s = self.sequences[n]
            for n2 in range(self.n_agents):
                if n2 == n:
                    continue
                s2 = self.sequences[n2]
                acc = None
                for (owner, uf), cu in zip(self.utility_factors, self.util_clique):
                    if owner != n:
                        continue
                    keep = set(s.scope) | set(s2.scope) | set(uf.scope)
                    joint = triple_marginal(tree, pairs, cu, self.seq_clique[n], self.seq_clique[n2], keep=keep)
                    part = multi_product([joint, uf], keep=set(s.scope) | set(s2.scope))
                    acc = part if acc is None else Factor(acc.scope, acc.cards, acc.values + part.values)
                if acc is None:
                    continue
                acc = acc.divide(self._plan_factor(sigma, n)).divide(self._plan_factor(sigma, n2))
                rows = _broadcast_coords(acc, s)
                cols = _broadcast_coords(acc, s2)
                np.add.at(jac, (rows.ravel(), cols.ravel()), acc.values.ravel())
        return jac

    def payoff_range(self, n):
        lo = hi = 0.0
        for owner, uf in self.utility_factors:
            if owner == n:
                lo += min(float(uf.values.min()), 0.0)
                hi += max(float(uf.values.max()), 0.0)
        return hi - lo


def _broadcast_coords(f: Factor, s: AgentSequences) -> np.ndarray:
    """Coordinate of agent sequence for every entry of factor ``f``."""
    shape = [1] * len(f.scope)
    for v, c in zip(s.scope, s.cards):
        shape[f.scope.index(v)] = c
    return np.broadcast_to(s.coords.reshape(shape), f.cards)


def expected_payoffs(maid: Maid, rules: Dict[str, np.ndarray], epsilon: float = DEFAULT_EPSILON) -> np.ndarray:
    """Per-agent expected utility under decision rules, by clique-tree inference."""
    game = MaidGame(maid, epsilon)
    tree = calibrate(game.tree, game._network(rules))
    out = np.zeros(maid.n_agents)
    for (owner, uf), c in zip(game.utility_factors, game.util_clique):
        out[owner] += float(multi_product([tree.beliefs[c].marginal(uf.scope), uf], keep=()).values)
    return out


def maid_to_sequence_view(maid: Maid, epsilon: float = DEFAULT_EPSILON) -> MaidGame:
    return MaidGame(maid, epsilon)


# ---------------------------------------------------------------------------
# expansion oracles
# ---------------------------------------------------------------------------


def expand_outcomes(game: MaidGame, cap: int = 2_000_000) -> LeafTableGame:
    """Outcome table over every joint assignment of the MAID's variables.

    This is the balanced game tree of the MAID flattened to its leaves; it
    shares ``game``'s sequence space so vectors compare coordinate by
    coordinate.
    """
    maid = game.maid
    cards = game.cards
    total = int(np.prod(cards, dtype=np.int64))
    if total > cap:
        raise ValueError(f"{total} outcomes exceed the cap of {cap}")
    grid = np.indices(cards, dtype=np.int32).reshape(len(cards), -1)
    prob = np.ones(total)
    for v in maid.variables:
        nd = maid.by_name[v]
        if nd.kind == "chance":
            idx = tuple(grid[maid.var_id[p]] for p in nd.parents) + (grid[maid.var_id[v]],)
            prob *= nd.table[idx]
    seq = np.empty((total, maid.n_agents), dtype=np.int64)
    for n, s in enumerate(game.sequences):
        seq[:, n] = s.coords[tuple(grid[i] for i in s.scope)] if s.scope else s.coords[()]
    pay = np.zeros((total, maid.n_agents))
    for u in maid.utilities:
        nd = maid.by_name[u]
        idx = tuple(grid[maid.var_id[p]] for p in nd.parents)
        pay[:, nd.owner] += nd.table[idx] if idx else nd.table
    keep = prob > 0
    return LeafTableGame(game.space, seq[keep], prob[keep], pay[keep])


def maid_to_tree(maid: Maid) -> dict:
    """Balanced extensive-form tree branching on variables in topological order."""
    order = maid.topological()

    def node(depth, assign):
        if depth == len(order):
            pay = [0.0] * maid.n_agents
            for u in maid.utilities:
                nd = maid.by_name[u]
                pay[nd.owner] += float(nd.table[tuple(assign[p] for p in nd.parents)])
            return {"type": "leaf", "payoffs": pay}
        v = order[depth]
        nd = maid.by_name[v]
        kids = []
        for a in range(nd.card):
            assign[v] = a
            kids.append(node(depth + 1, assign))
        del assign[v]
        if nd.kind == "chance":
            probs = nd.table[tuple(assign[p] for p in nd.parents)].tolist()
            return {"type": "chance", "probs": probs, "children": kids}
        key = infoset_key(v, [assign[p] for p in nd.parents])
        return {"type": "decision", "owner": nd.owner, "infoset": key, "actions": list(range(nd.card)), "children": kids}

    return {"agents": maid.n_agents, "root": node(0, {})}


# ---------------------------------------------------------------------------
# strategic relevance
# ---------------------------------------------------------------------------


@dataclass
class RelevanceGraph:
    """Directed graph over decisions; ``(D, D2)`` means ``D`` needs ``D2``'s rule."""

    nodes: List[str]
    edges: List[Tuple[str, str]]
    provenance: str = "user-supplied"

    def successors(self, d: str) -> List[str]:
        return [b for a, b in self.edges if a == d]


def approx_relevance_graph(maid: Maid) -> RelevanceGraph:
    """Sound over-approximation of strategic relevance.

    ``D2`` is kept as relevant to ``D`` unless it is not an ancestor of any
    utility node of ``D``'s owner that descends from ``D``, or it is ``D``
    itself or one of ``D``'s parents.
    """
    ds = maid.decisions()
    edges = []
    for d in ds:
        nd = maid.by_name[d]
        desc = maid.descendants(d)
        utils = [u for u in maid.utilities_of(nd.owner) if u in desc]
        anc = set()
        for u in utils:
            anc |= maid.ancestors(u)
        for d2 in ds:
            if d2 != d and d2 not in nd.parents and d2 in anc:
                edges.append((d, d2))
    return RelevanceGraph(ds, edges, "over-approximated")


def relevance_graph(maid: Maid) -> RelevanceGraph:
    """User-supplied graph when the MAID carries one, else the over-approximation."""
    if maid.relevance_edges is not None:
        return RelevanceGraph(maid.decisions(), list(maid.relevance_edges), "user-supplied")
    return approx_relevance_graph(maid)


def strongly_connected_components(nodes: Sequence[str], edges: Sequence[Tuple[str, str]]) -> List[List[str]]:
    """Tarjan's algorithm; components come out dependencies first."""
    succ = {v: [] for v in nodes}
    for a, b in edges:
        succ[a].append(b)
    index, low, on_stack = {}, {}, set()
    stack, out = [], []
    counter = [0]

    def visit(v):
        # explicit stack to avoid recursion limits on long chains
        work = [(v, iter(succ[v]))]
        index[v] = low[v] = counter[0]
        counter[0] += 1
        stack.append(v)
        on_stack.add(v)
        while work:
            node, it = work[-1]
            advanced = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter[0]
                    counter[0] += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    advanced = True
                    break
                if w in on_stack:
                    low[node] = min(low[node], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
            if low[node] == index[node]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == node:
                        break
                out.append(sorted(comp, key=list(nodes).index))

    for v in nodes:
        if v not in index:
            visit(v)
    return out


def relevance_scc_decompose(maid: Maid, graph: Optional[RelevanceGraph] = None) -> List[List[str]]:
    """Decision blocks in solving order (every block after those it needs)."""
    graph = graph or relevance_graph(maid)
    return strongly_connected_components(graph.nodes, graph.edges)


@dataclass
class MaidSolveResult:
    plan: Optional[np.ndarray]
    rules: Dict[str, np.ndarray]
    regret: float
    status: str
    iterations: int
    restarts: int
    blocks: List[List[str]] = field(default_factory=list)


def solve_maid(maid: Maid, epsilon: float = DEFAULT_EPSILON, config: Optional[TraceConfig] = None, decompose: bool = True) -> MaidSolveResult:
    """Equilibrium of a MAID, block by block along the relevance decomposition.

    Each block is solved by continuation with decisions outside it turned
    into chance nodes: already-solved ones keep their rules, the rest play
    uniformly (they are irrelevant to the block).  The lower bound on
    realisation probabilities couples blocks slightly, so the assembled
    profile is polished by Newton's method on the full game at ``lam = 0``
    and, should that fail, the full game is solved directly.
    """
    cfg = config or TraceConfig()
    blocks = relevance_scc_decompose(maid) if decompose else [maid.decisions()]
    full = MaidGame(maid, epsilon)

    def direct(iters=0, restarts=0, tag=""):
        res = solve_continuation(full, cfg)
        iters += res.iterations
        restarts += res.restarts
        if not res.equilibria:
            return MaidSolveResult(None, {}, np.inf, tag + res.status, iters, restarts, blocks)
        plan = res.equilibria[0].profile
        return MaidSolveResult(plan, full.decision_rules(plan), float(full.regret(plan).max()), tag + res.status, iters, restarts, blocks)

    if len(blocks) <= 1:
        return direct()
    rules: Dict[str, np.ndarray] = {}
    uniform = full._uniform_rules()
    iters = restarts = 0
    for block in blocks:
        frozen = {d: rules.get(d, uniform[d]) for d in maid.decisions() if d not in block}
        sub = MaidGame(maid.with_decisions_as_chance(frozen), epsilon)
        res = solve_continuation(sub, cfg)
        iters += res.iterations
        restarts += res.restarts
        if not res.equilibria:
            return direct(iters, restarts, "block_failed:")
        sub_rules = sub.decision_rules(res.equilibria[0].profile)
        for d in block:
            rules[d] = sub_rules[d]
    plan = full.space.retract(full.plan_from_rules(rules))[0]
    reg = float(full.regret(plan).max())
    if reg > cfg.regret_tol:
        w = plan + full.deviation_vector(plan)
        state, _ = newton_polish(full, PathState(w=w, lam=0.0, b=np.zeros_like(w), signature=full.retract(w)[1]), cfg.newton_max_iter)
        cand = full.retract(state.w)[0]
        creg = float(full.regret(cand).max())
        if creg < reg:
            plan, reg = cand, creg
    if reg > cfg.regret_tol:
        return direct(iters, restarts, "decomposition_fallback:")
    return MaidSolveResult(plan, full.decision_rules(plan), reg, "decomposed", iters, restarts, blocks)


# ---------------------------------------------------------------------------
# small reference MAIDs
# ---------------------------------------------------------------------------


def example_maid(payoffs: Optional[np.ndarray] = None) -> Maid:
    """MAID of :func:`structnash.extensive.example_tree`.

    Agent 0 picks ``A``, agent 1 picks ``B`` blind, agent 0 picks ``A'``
    seeing both.  One utility node per agent depends on all three decisions;
    ``payoffs`` is the tree's leaf table in (A, B, A') order.
    """
    if payoffs is None:
        payoffs = np.arange(16, dtype=float).reshape(8, 2) % 7
    pay = np.asarray(payoffs, dtype=float).reshape(8, 2)
    nodes = [
        {"name": "A", "kind": "decision", "owner": 0, "parents": [], "domain": 2},
        {"name": "B", "kind": "decision", "owner": 1, "parents": [], "domain": 2},
        {"name": "A'", "kind": "decision", "owner": 0, "parents": ["A", "B"], "domain": 2},
        {"name": "UA", "kind": "utility", "owner": 0, "parents": ["A", "B", "A'"], "table": pay[:, 0]},
        {"name": "UB", "kind": "utility", "owner": 1, "parents": ["A", "B", "A'"], "table": pay[:, 1]},
    ]
    return Maid(2, nodes)
