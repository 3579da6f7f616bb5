"""Random perfect-recall MAIDs shared by the MAID tests."""

import numpy as np

from structnash.maid import Maid


def random_maid(rng, max_vars=8, n_agents=None, max_decisions=2):
    """Variables in id order; each agent's later decision sees its earlier one and that one's parents."""
    n_agents = n_agents or int(rng.integers(2, 4))
    n_vars = int(rng.integers(n_agents + 1, max_vars + 1))
    owners = list(range(n_agents)) + [None] * (n_vars - n_agents)
    rng.shuffle(owners)
    decided = {}
    nodes, names, cards = [], [], {}
    for v, owner in enumerate(owners):
        if owner is not None and len(decided.get(owner, [])) >= max_decisions:
            owner = None
        if owner is None and v > 0 and rng.random() < 0.3:
            owner = int(rng.integers(n_agents))
            if len(decided.get(owner, [])) >= max_decisions:
                owner = None
        name = f"V{v}"
        card = int(rng.integers(2, 4))
        extra = [names[i] for i in rng.choice(len(names), size=min(len(names), int(rng.integers(0, 3))), replace=False)] if names else []
        if owner is None:
            parents = sorted(set(extra), key=names.index)
            shape = tuple(cards[p] for p in parents)
            cpd = rng.dirichlet(np.ones(card), size=int(np.prod(shape, dtype=int))).ravel()
            nodes.append({"name": name, "kind": "chance", "parents": parents, "domain": card, "cpd": cpd.tolist()})
        else:
            prev = decided.get(owner, [])
            recall = set()
            if prev:
                last = prev[-1]
                recall = {last} | set(next(nd for nd in nodes if nd["name"] == last)["parents"])
            parents = sorted(recall | set(extra[:1]), key=names.index)
            nodes.append({"name": name, "kind": "decision", "owner": owner, "parents": parents, "domain": card})
            decided.setdefault(owner, []).append(name)
        names.append(name)
        cards[name] = card
    for n in range(n_agents):
        for j in range(int(rng.integers(1, 3))):
            k = int(rng.integers(1, min(3, len(names)) + 1))
            parents = sorted(rng.choice(names, size=k, replace=False).tolist(), key=names.index)
            size = int(np.prod([cards[p] for p in parents]))
            nodes.append({"name": f"U{n}_{j}", "kind": "utility", "owner": n, "parents": parents,
                          "table": np.round(rng.uniform(-2, 2, size), 3).tolist()})
    return Maid(n_agents, nodes)


def sequence_index(game):
    """Own-history tuple -> global coordinate, for the tree oracle."""
    out = []
    for n, tp in enumerate(game.space.agents):
        base = game.indexing.offsets[n]
        out.append({tp.keys[e]: base + tp.coord_of[e] for e in tp.terminals})
    return out
