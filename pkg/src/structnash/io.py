"""JSON formats for games and profiles.

Games are recognised by their keys:

* normal form: ``{"agents": [{"actions": k}, ...], "payoffs": [flat per agent]}``
  with the last agent's action varying fastest;
* graphical: ``{"agents": [...], "parents": [[...]], "family_payoffs": [...]}``
  with family tables indexed ``(self, parents...)``, last varying fastest;
* extensive form: ``{"agents": ..., "root": {...}}`` (see :mod:`structnash.extensive`);
* MAID: ``{"agents": n, "nodes": [...]}`` (see :mod:`structnash.maid`).

Profiles are written keyed by agent and action (or sequence) label, with the
flat vector alongside::

    {"kind": "mixed", "agents": [{"agent": "0", "strategy": {"0": 0.5, "1": 0.5}}],
     "vector": [0.5, 0.5]}
"""

from __future__ import annotations

import json
from typing import List

import numpy as np

from .extensive import ExtensiveGame
from .graphical import GraphicalGame
from .maid import Maid, MaidGame
from .normal_form import NormalFormGame
from .sequence_form import DEFAULT_EPSILON
from .views import GameView


def game_kind(data: dict) -> str:
    if "nodes" in data:
        return "maid"
    if "root" in data:
        return "extensive"
    if "family_payoffs" in data:
        return "graphical"
    if "payoffs" in data:
        return "normal"
    raise ValueError("unrecognised game JSON")


def _action_counts(agents) -> List[int]:
    return [int(a["actions"]) if isinstance(a, dict) else int(a) for a in agents]


def game_from_json(data: dict, epsilon: float = DEFAULT_EPSILON) -> GameView:
    """Build the game view described by ``data``."""
    kind = game_kind(data)
    if kind == "normal":
        counts = _action_counts(data["agents"])
        return NormalFormGame(counts, np.asarray([np.asarray(p, dtype=float) for p in data["payoffs"]]))
    if kind == "graphical":
        return GraphicalGame(_action_counts(data["agents"]), data["parents"], data["family_payoffs"])
    if kind == "extensive":
        return ExtensiveGame(data, epsilon)
    return MaidGame(Maid.from_json(data), epsilon)


def game_to_json(view) -> dict:
    """Inverse of :func:`game_from_json` for the formats above."""
    if isinstance(view, MaidGame):
        return view.maid.to_json()
    if isinstance(view, ExtensiveGame):
        return view.tree
    if isinstance(view, GraphicalGame):
        return {"agents": [{"actions": k} for k in view.indexing.sizes],
                "parents": [list(p) for p in view.parents],
                "family_payoffs": [t.ravel().tolist() for t in view.tables]}
    if isinstance(view, NormalFormGame):
        return {"agents": [{"actions": k} for k in view.indexing.sizes],
                "payoffs": [t.ravel().tolist() for t in view.tensors]}
    raise TypeError(f"no JSON format for {type(view).__name__}")


def load_game(path, epsilon: float = DEFAULT_EPSILON) -> GameView:
    with open(path) as fh:
        return game_from_json(json.load(fh), epsilon)


def save_json(obj, path) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


def strategy_labels(view: GameView, n: int) -> List[str]:
    """Readable id of each coordinate of agent ``n``."""
    if isinstance(view, MaidGame):
        return view.sequence_labels(n)
    if view.kind == "sequence":
        return view.space.sequence_labels(n)
    return [str(a) for a in range(view.indexing.sizes[n])]


def agent_names(view: GameView) -> List[str]:
    if isinstance(view, ExtensiveGame):
        return list(view.agent_names)
    return [str(n) for n in range(view.n_agents)]


def profile_to_json(view: GameView, sigma) -> dict:
    sigma = view.indexing.check(np.asarray(sigma, dtype=float))
    agents = []
    for n, name in enumerate(agent_names(view)):
        part = sigma[view.indexing.slice(n)]
        agents.append({"agent": name, "strategy": dict(zip(strategy_labels(view, n), part.tolist()))})
    return {"kind": view.kind, "agents": agents, "vector": sigma.tolist()}


def profile_from_json(view: GameView, data) -> np.ndarray:
    """Accept a bare vector, a ``{"vector": [...]}`` record or the keyed form."""
    if isinstance(data, list):
        return view.indexing.check(np.asarray(data, dtype=float))
    if "vector" in data:
        return view.indexing.check(np.asarray(data["vector"], dtype=float))
    out = np.zeros(view.dim)
    for n, rec in enumerate(data["agents"]):
        labels = strategy_labels(view, n)
        sl = view.indexing.slice(n)
        block = np.zeros(len(labels))
        for k, p in rec["strategy"].items():
            block[labels.index(k)] = float(p)
        out[sl] = block
    return view.indexing.check(out)


def load_profile(view: GameView, path) -> np.ndarray:
    with open(path) as fh:
        return profile_from_json(view, json.load(fh))
