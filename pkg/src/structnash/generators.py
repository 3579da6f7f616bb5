"""Benchmark game families.

Every generator is a pure function of its size and seed.  Random payoffs are
drawn per family-table entry, i.i.d. uniform on ``[0, 1]``.
"""

from __future__ import annotations

from typing import List

import numpy as np

from .graphical import GraphicalGame
from .maid import Maid

RPS = np.array([[0.0, -1.0, 1.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]])


def _rng(seed) -> np.random.Generator:
    return np.random.default_rng(seed)


def road_neighbours(L: int) -> List[List[int]]:
    """Neighbours on a 2-by-``L`` road: agent ``2k`` is west, ``2k + 1`` east of plot ``k``."""
    nb = []
    for k in range(L):
        for side in (0, 1):
            me = []
            if k > 0:
                me.append(2 * (k - 1) + side)
            me.append(2 * k + 1 - side)
            if k < L - 1:
                me.append(2 * (k + 1) + side)
            nb.append(me)
    return nb


def _rps_tables(neighbours, rng) -> list:
    """Additive rock-paper-scissors: one independent sign pattern per ordered pair."""
    tables = []
    for i, nb in enumerate(neighbours):
        shape = (3,) * (1 + len(nb))
        tab = np.zeros(shape)
        for j, _ in enumerate(nb):
            pair = RPS if rng.random() < 0.5 else -RPS
            view = [1] * len(shape)
            view[0] = 3
            view[1 + j] = 3
            tab = tab + pair.reshape(view)
        tables.append(tab)
    return tables


def _random_tables(neighbours, rng, actions: int = 3) -> list:
    return [rng.random((actions,) * (1 + len(nb))) for nb in neighbours]


def gen_road(L: int, payoff_mode: str = "random", seed=0) -> GraphicalGame:
    """Road game with ``2 L`` agents and three actions each.

    Parameters
    ----------
    L : int
        Plots per side of the road.
    payoff_mode : {"random", "rps"}
    seed : int
    """
    if L < 1:
        raise ValueError("L must be at least 1")
    nb = road_neighbours(L)
    rng = _rng(seed)
    if payoff_mode == "rps":
        tables = _rps_tables(nb, rng)
    elif payoff_mode == "random":
        tables = _random_tables(nb, rng)
    else:
        raise ValueError(f"unknown payoff mode {payoff_mode!r}")
    return GraphicalGame.undirected([3] * (2 * L), nb, tables)


def gen_ring(n: int, seed=0) -> GraphicalGame:
    """Ring of ``n`` agents, each seeing its two neighbours."""
    if n < 3:
        raise ValueError("a ring needs at least 3 agents")
    nb = [[(i - 1) % n, (i + 1) % n] for i in range(n)]
    return GraphicalGame.undirected([3] * n, nb, _random_tables(nb, _rng(seed)))


def gen_grid(L: int, seed=0) -> GraphicalGame:
    """``L``-by-``L`` grid with 4-neighbourhoods."""
    if L < 2:
        raise ValueError("a grid needs L >= 2")
    nb = []
    for r in range(L):
        for c in range(L):
            me = []
            for dr, dc in ((-1, 0), (0, -1), (0, 1), (1, 0)):
                rr, cc = r + dr, c + dc
                if 0 <= rr < L and 0 <= cc < L:
                    me.append(rr * L + cc)
            nb.append(me)
    return GraphicalGame.undirected([3] * (L * L), nb, _random_tables(nb, _rng(seed)))


def gen_chain_maid(n: int, seed=0, actions: int = 3, chance_card: int = 3) -> Maid:
    """Chain MAID ``D1 -> C1 -> D2 -> C2 -> ... -> Dn``.

    Decision ``Di`` belongs to agent ``i - 1``.  Each agent has a utility
    node on its own decision and each neighbour's decision.
    """
    if n < 2:
        raise ValueError("a chain needs at least 2 agents")
    rng = _rng(seed)
    nodes = []
    for i in range(n):
        nodes.append({"name": f"D{i + 1}", "kind": "decision", "owner": i,
                      "parents": [f"C{i}"] if i > 0 else [], "domain": actions})
        if i < n - 1:
            cpd = rng.dirichlet(np.ones(chance_card), size=actions)
            nodes.append({"name": f"C{i + 1}", "kind": "chance", "parents": [f"D{i + 1}"],
                          "domain": chance_card, "cpd": cpd.ravel()})
    for i in range(n):
        for j in (i - 1, i + 1):
            if 0 <= j < n:
                nodes.append({"name": f"U{i + 1}_{j + 1}", "kind": "utility", "owner": i,
                              "parents": [f"D{i + 1}", f"D{j + 1}"], "table": rng.random(actions * actions)})
    return Maid(n, nodes)


# Two-stage road payoffs (artifact-defined).  Action 0 = house, 1 = store.
ROAD2STAGE_ESPIONAGE = 0.8
ROAD2STAGE_CHANGE_PENALTY = 1.0
ROAD2STAGE_LEFT = np.array([[0.0, 2.0], [2.0, 0.0]])  # L_i(B_{i-1}, B_i): differ from the left
ROAD2STAGE_RIGHT = np.array([[1.5, 0.0], [0.0, 1.5]])  # R_i(B_i, B_{i+1}): the right follows
ROAD2STAGE_BIAS = np.array([0.0, 0.3])  # stores pay a little more on their own


def gen_road2stage_maid(n: int) -> Maid:
    """Two-stage road MAID with ``n`` landowners.

    Landowner ``i`` plans ``P_i`` and then builds ``B_i`` seeing its plan and
    ``E_{i-1}``, a noisy copy of the left neighbour's plan.  Utilities:
    ``C_i(P_i, B_i)`` penalises changing the plan, ``L_i(B_{i-1}, B_i)``
    rewards differing from the left neighbour and ``R_i(B_i, B_{i+1})``
    rewards the right neighbour copying.
    """
    if n < 2:
        raise ValueError("the road needs at least 2 landowners")
    q = ROAD2STAGE_ESPIONAGE
    spy = np.array([[q, 1 - q], [1 - q, q]])
    change = np.array([[0.0, -ROAD2STAGE_CHANGE_PENALTY], [-ROAD2STAGE_CHANGE_PENALTY, 0.0]]) + ROAD2STAGE_BIAS[None, :]
    nodes = []
    for i in range(1, n + 1):
        nodes.append({"name": f"P{i}", "kind": "decision", "owner": i - 1, "parents": [], "domain": ["house", "store"]})
    for i in range(1, n):
        nodes.append({"name": f"E{i}", "kind": "chance", "parents": [f"P{i}"], "domain": ["house", "store"], "cpd": spy.ravel()})
    for i in range(1, n + 1):
        pa = [f"P{i}"] + ([f"E{i - 1}"] if i > 1 else [])
        nodes.append({"name": f"B{i}", "kind": "decision", "owner": i - 1, "parents": pa, "domain": ["house", "store"]})
    for i in range(1, n + 1):
        nodes.append({"name": f"C{i}", "kind": "utility", "owner": i - 1, "parents": [f"P{i}", f"B{i}"], "table": change.ravel()})
        if i > 1:
            nodes.append({"name": f"L{i}", "kind": "utility", "owner": i - 1, "parents": [f"B{i - 1}", f"B{i}"], "table": ROAD2STAGE_LEFT.ravel()})
        if i < n:
            nodes.append({"name": f"R{i}", "kind": "utility", "owner": i - 1, "parents": [f"B{i}", f"B{i + 1}"], "table": ROAD2STAGE_RIGHT.ravel()})
    return Maid(n, nodes)
