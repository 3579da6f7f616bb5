"""Compare the compiled and numpy flavours of every hot kernel.

Usage::

    python benchmarks/bench_kernels.py [--repeat 20] [--scale 1]

Both flavours are imported directly, so the ``STRUCTNASH_DISABLE_NUMBA``
switch does not matter here.  Each row reports the best time per call and
the largest output difference between the two flavours.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from structnash import kernels
from structnash._jit import NUMBA_AVAILABLE
from structnash.extensive import ExtensiveGame
from structnash.generators import gen_ring
from structnash.strategy import AgentIndexing


def best_time(fn, args, repeat: int) -> float:
    fn(*args)  # compile and warm caches
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _diff(a, b) -> float:
    if isinstance(a, tuple):
        return max(_diff(x, y) for x, y in zip(a, b))
    return float(np.abs(np.asarray(a) - np.asarray(b)).max())


def random_tree(rng, depth: int, n_agents: int = 2, actions: int = 2) -> dict:
    counter = iter(range(10**9))

    def node(d, owner):
        if d == depth:
            return {"type": "leaf", "payoffs": rng.random(n_agents).tolist()}
        return {"type": "decision", "owner": owner, "infoset": f"I{next(counter)}", "actions": list(range(actions)),
                "children": [node(d + 1, (owner + 1) % n_agents) for _ in range(actions)]}

    return {"agents": n_agents, "root": node(0, 0)}


def cases(scale: int, rng):
    idx = AgentIndexing(tuple([5] * (200 * scale)))
    w = rng.standard_normal(idx.total_dim)
    yield "project_simplices", (w, idx.offsets, idx.lengths, 0.0)

    g = gen_ring(8 * scale, seed=0)
    sigma = g.random_profile(rng)
    n = 0
    yield "family_contract", (g.tables[n].ravel(), g._cards[n], g._parent_probs(sigma, n), g._poffs[n])

    game = ExtensiveGame(random_tree(rng, 8 + scale))
    s = game.random_profile(rng)
    yield "leaf_accumulate", (game.leaf_seq, game.leaf_prob, game.leaf_pay, s)


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=20)
    ap.add_argument("--scale", type=int, default=1)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"numba available: {NUMBA_AVAILABLE}")
    print(f"{'kernel':<20}{'numba ms':>12}{'numpy ms':>12}{'speedup':>10}{'max diff':>12}")
    for name, fargs in cases(args.scale, rng):
        loop = getattr(kernels, f"{name}_loop")
        vec = getattr(kernels, f"{name}_numpy")
        t_loop = best_time(loop, fargs, args.repeat)
        t_vec = best_time(vec, fargs, args.repeat)
        diff = _diff(loop(*fargs), vec(*fargs))
        print(f"{name:<20}{t_loop * 1e3:>12.4f}{t_vec * 1e3:>12.4f}{t_vec / t_loop:>10.2f}{diff:>12.2e}")


if __name__ == "__main__":
    main()
