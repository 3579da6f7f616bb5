"""Extensive-form game trees in sequence form.

Tree JSON format::

    {"agents": 2,
     "root": {"type": "decision", "owner": 0, "infoset": "A", "actions": ["a1", "a2"],
              "children": [<node>, <node>]}}

Chance nodes carry ``"probs"`` and ``"children"``; leaves carry ``"payoffs"``
(one number per agent).  ``"agents"`` may be a count or a list of names.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from . import kernels
from .sequence_form import DEFAULT_EPSILON, SequenceFormSpace, SequenceFormView, Treeplex


def _walk(node, histories, prob, tps, leaves, n_agents, depth=0):
    if depth > 10_000:
        raise ValueError("tree too deep")
    kind = node.get("type")
    if kind == "leaf":
        pay = [float(x) for x in node["payoffs"]]
        if len(pay) != n_agents:
            raise ValueError("leaf payoff vector has the wrong length")
        ends = [tps[n].mark_terminal(histories[n]) for n in range(n_agents)]
        leaves.append((ends, prob, pay))
    elif kind == "chance":
        probs = [float(p) for p in node["probs"]]
        kids = node["children"]
        if len(probs) != len(kids):
            raise ValueError("chance node needs one probability per child")
        if min(probs) < 0 or abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError("chance probabilities must form a distribution")
        for p, child in zip(probs, kids):
            if p > 0:
                _walk(child, histories, prob * p, tps, leaves, n_agents, depth + 1)
    elif kind == "decision":
        n = int(node["owner"])
        if not 0 <= n < n_agents:
            raise ValueError(f"owner {n} out of range")
        actions = tuple(node["actions"])
        kids = node["children"]
        if len(actions) != len(kids) or not actions:
            raise ValueError("decision node needs one child per action")
        key = node["infoset"]
        tps[n].add_infoset(key, histories[n], actions)
        for a, child in zip(actions, kids):
            hist = list(histories)
            hist[n] = histories[n] + ((key, a),)
            _walk(child, tuple(hist), prob, tps, leaves, n_agents, depth + 1)
    else:
        raise ValueError(f"unknown node type {kind!r}")


class LeafTableGame(SequenceFormView):
    """Sequence-form game given by an explicit outcome table.

    Parameters
    ----------
    space : SequenceFormSpace
    leaf_seq : (Z, N) int array
        Global coordinate of each agent's terminal sequence at each outcome.
    leaf_prob : (Z,) array
        Chance probability of each outcome.
    leaf_pay : (Z, N) array
        Payoff of each agent at each outcome.
    """

    def __init__(self, space: SequenceFormSpace, leaf_seq, leaf_prob, leaf_pay) -> None:
        super().__init__(space)
        self.leaf_seq = np.ascontiguousarray(leaf_seq, dtype=np.int64)
        self.leaf_prob = np.ascontiguousarray(leaf_prob, dtype=float)
        self.leaf_pay = np.ascontiguousarray(leaf_pay, dtype=float).reshape(self.leaf_seq.shape)

    @property
    def n_leaves(self) -> int:
        return self.leaf_seq.shape[0]

    def deviation_vector(self, sigma):
        return leaf_deviation_vector(self.leaf_seq, self.leaf_prob, self.leaf_pay, self.indexing.check(sigma))

    def deviation_jacobian(self, sigma):
        return kernels.leaf_accumulate(self.leaf_seq, self.leaf_prob, self.leaf_pay, self.indexing.check(sigma))[1]

    def payoffs(self, sigma):
        r = self.indexing.check(sigma)[self.leaf_seq]
        w = self.leaf_prob * r.prod(axis=1)
        return w @ self.leaf_pay

    def payoff_range(self, n):
        col = self.leaf_pay[:, n]
        return float(max(col.max(), 0.0) - min(col.min(), 0.0))


class ExtensiveGame(LeafTableGame):
    """Perfect-recall game tree with payoffs stored as an outcome table.

    Parameters
    ----------
    tree : dict
        Parsed tree JSON (see module docstring).
    epsilon : float
        Lower bound on realisation probabilities.
    """

    def __init__(self, tree: dict, epsilon: float = DEFAULT_EPSILON) -> None:
        agents = tree["agents"]
        self.agent_names = [str(a) for a in agents] if isinstance(agents, list) else [str(i) for i in range(int(agents))]
        n_agents = len(self.agent_names)
        tps = [Treeplex() for _ in range(n_agents)]
        leaves = []
        _walk(tree["root"], tuple(() for _ in range(n_agents)), 1.0, tps, leaves, n_agents)
        space = SequenceFormSpace(tps, epsilon)
        idx = space.indexing
        seq = np.empty((len(leaves), n_agents), dtype=np.int64)
        for z, (ends, _, _) in enumerate(leaves):
            for n, e in enumerate(ends):
                seq[z, n] = idx.offsets[n] + tps[n].coord_of[e]
        prob = np.array([p for _, p, _ in leaves])
        pay = np.array([g for _, _, g in leaves]).reshape(len(leaves), n_agents)
        super().__init__(space, seq, prob, pay)
        self.tree = tree


def leaf_deviation_vector(seq, coef, pay, sigma) -> np.ndarray:
    """``V`` alone from an outcome table (no Jacobian)."""
    m = sigma.shape[0]
    r = sigma[seq]
    v = np.zeros(m)
    for n in range(seq.shape[1]):
        rr = r.copy()
        rr[:, n] = 1.0
        v += np.bincount(seq[:, n], weights=coef * pay[:, n] * rr.prod(axis=1), minlength=m)
    return v


def load_tree(path) -> dict:
    import json

    with open(path) as fh:
        return json.load(fh)


def example_tree(payoffs: Optional[np.ndarray] = None) -> dict:
    """Two-agent tree: agent 0 moves, agent 1 moves blind, agent 0 moves again.

    Agent 0 has four final information sets (one per earlier action pair)
    and so eight terminal sequences; agent 1 has two.
    """
    if payoffs is None:
        payoffs = np.arange(16, dtype=float).reshape(8, 2) % 7
    leaves = iter(np.asarray(payoffs, dtype=float).tolist())
    names = iter(f"a{k}'" for k in range(1, 9))

    def bottom(a, b):
        acts = [next(names), next(names)]
        return {"type": "decision", "owner": 0, "infoset": f"A.{a}.{b}", "actions": acts,
                "children": [{"type": "leaf", "payoffs": next(leaves)} for _ in acts]}

    def bob(a):
        return {"type": "decision", "owner": 1, "infoset": "B", "actions": ["b1", "b2"],
                "children": [bottom(a, "b1"), bottom(a, "b2")]}

    return {"agents": ["Alice", "Bob"],
            "root": {"type": "decision", "owner": 0, "infoset": "A", "actions": ["a1", "a2"],
                     "children": [bob("a1"), bob("a2")]}}
