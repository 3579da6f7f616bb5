"""Benchmark runner, per-iteration cost probe and cubic fit.

Each trial solves the game of ``(family, size, seed)`` from perturbation
seed ``trial``.  Results go to a CSV with the columns in :data:`CSV_COLUMNS`
and, optionally, to a line-delimited JSON file with extra detail.
"""

from __future__ import annotations

import csv
import io as _io
import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import List, Sequence

import numpy as np

from .continuation import TraceConfig, augmented_jacobian, null_direction, solve_continuation
from .generators import gen_chain_maid, gen_grid, gen_ring, gen_road, gen_road2stage_maid
from .ipa import IpaConfig, solve_ipa
from .maid import MaidGame
from .sat import random_instance, sat_reduce
from .sequence_form import DEFAULT_EPSILON
from .views import GameView

CSV_COLUMNS = ["family", "size", "seed", "trial", "solver", "wall_ms", "iterations", "restarts", "regret", "equilibria_found"]
FAMILIES = ("road-rps", "road-random", "ring-random", "grid-random", "chain-maid", "road2stage-maid", "sat-reduction")
SOLVERS = ("cont", "ipa+cont")
DEDUP_TOL = 1e-6


@dataclass
class BenchmarkSpec:
    """One benchmark sweep.

    Parameters
    ----------
    family : str
        One of :data:`FAMILIES`.
    sizes : list of int
        Road and grid side ``L``, ring and MAID agent count, or SAT variable count.
    seeds : list of int
        Game seeds.
    trials : int
        Perturbation draws per game.
    solver : {"cont", "ipa+cont"}
    epsilon : float
        Realisation lower bound for MAID families.
    restart_limit : int
    lambda_threshold : float
    timing : bool
        Record wall time; switch off for byte-reproducible output.
    workers : int
        Worker processes for trials.
    """

    family: str
    sizes: List[int]
    seeds: List[int] = field(default_factory=lambda: [0])
    trials: int = 1
    solver: str = "cont"
    epsilon: float = DEFAULT_EPSILON
    restart_limit: int = 10
    lambda_threshold: float = -0.2
    timing: bool = True
    workers: int = 1

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if self.solver not in SOLVERS:
            raise ValueError(f"unknown solver {self.solver!r}")
        if isinstance(self.sizes, int):
            self.sizes = [self.sizes]
        if isinstance(self.seeds, int):
            self.seeds = [self.seeds]
        if not self.sizes or min(self.sizes) < 1:
            raise ValueError("sizes must be at least 1")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")

    @classmethod
    def from_json(cls, data: dict) -> "BenchmarkSpec":
        data = dict(data)
        if "size" in data and "sizes" not in data:
            data["sizes"] = data.pop("size")
        if "seed" in data and "seeds" not in data:
            data["seeds"] = data.pop("seed")
        return cls(**data)


def make_game(family: str, size: int, seed: int = 0, epsilon: float = DEFAULT_EPSILON) -> GameView:
    """Game view of a benchmark family member."""
    if family == "road-rps":
        return gen_road(size, "rps", seed)
    if family == "road-random":
        return gen_road(size, "random", seed)
    if family == "ring-random":
        return gen_ring(size, seed)
    if family == "grid-random":
        return gen_grid(size, seed)
    if family == "chain-maid":
        return MaidGame(gen_chain_maid(size, seed), epsilon)
    if family == "road2stage-maid":
        return MaidGame(gen_road2stage_maid(size), epsilon)
    if family == "sat-reduction":
        inst = random_instance(np.random.default_rng(seed), n_vars=size, n_clauses=size + 1)
        return sat_reduce(inst).game
    raise ValueError(f"unknown family {family!r}")


def solve(view: GameView, solver: str = "cont", seed: int = 0, restart_limit: int = 10, lambda_threshold: float = -0.2):
    """Run one solver; returns a :class:`structnash.continuation.SolveResult`."""
    tcfg = TraceConfig(seed=seed, restart_limit=restart_limit, lambda_threshold=lambda_threshold, max_equilibria=1)
    if solver == "cont":
        return solve_continuation(view, tcfg)
    if solver == "ipa+cont":
        if view.kind != "mixed":
            raise ValueError("ipa+cont needs a mixed-strategy game")
        return solve_ipa(view, IpaConfig(seed=seed, restart_limit=restart_limit), tcfg)
    raise ValueError(f"unknown solver {solver!r}")


def _run_trial(job: tuple) -> dict:
    family, size, seed, trial, solver, epsilon, restart_limit, lam_thr, timing = job
    rec = {"family": family, "size": size, "seed": seed, "trial": trial, "solver": solver}
    try:
        view = make_game(family, size, seed, epsilon)
        t0 = time.perf_counter()
        res = solve(view, solver, seed=trial, restart_limit=restart_limit, lambda_threshold=lam_thr)
        wall = (time.perf_counter() - t0) * 1e3
        rec.update(status=res.status, iterations=res.iterations, restarts=res.restarts, ipa_iterations=res.ipa_iterations)
        if res.equilibria:
            prof = res.equilibria[0].profile
            rec["regret"] = float(view.regret(prof).max())
            rec["profile"] = prof.tolist()
            rec["signature"] = res.equilibria[0].signature.mask().astype(int).tolist()
        else:
            rec["regret"] = None
        rec["wall_ms"] = wall if timing else None
    except Exception as exc:  # failures are data, not fatal
        rec.update(status=f"error:{type(exc).__name__}: {exc}", iterations=0, restarts=0, regret=None, wall_ms=None)
    return rec


def _same(a: dict, b: dict) -> bool:
    return a["signature"] == b["signature"] and float(np.abs(np.subtract(a["profile"], b["profile"])).max()) <= DEDUP_TOL


def run_benchmark(spec: BenchmarkSpec, csv_out=None, jsonl_out=None) -> List[dict]:
    """Run every trial of ``spec``; write CSV and JSONL when paths or streams are given.

    ``equilibria_found`` is the cumulative count of distinct equilibria over
    the trials of one game so far.
    """
    jobs = [(spec.family, size, seed, trial, spec.solver, spec.epsilon, spec.restart_limit, spec.lambda_threshold, spec.timing)
            for size in spec.sizes for seed in spec.seeds for trial in range(spec.trials)]
    if spec.workers > 1:
        with ProcessPoolExecutor(spec.workers) as pool:
            records = list(pool.map(_run_trial, jobs))
    else:
        records = [_run_trial(j) for j in jobs]
    seen: dict = {}
    for rec in records:
        found = seen.setdefault((rec["size"], rec["seed"]), [])
        if rec.get("profile") is not None and not any(_same(rec, o) for o in found):
            found.append(rec)
        rec["equilibria_found"] = len(found)
    if csv_out is not None:
        _write(csv_out, to_csv(records))
    if jsonl_out is not None:
        _write(jsonl_out, "".join(json.dumps(r, sort_keys=True) + "\n" for r in records))
    return records


def _fmt(x, digits: str) -> str:
    return "" if x is None else format(x, digits)


def to_csv(records: Sequence[dict]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in records:
        w.writerow([r["family"], r["size"], r["seed"], r["trial"], r["solver"], _fmt(r.get("wall_ms"), ".3f"),
                    r.get("iterations", 0), r.get("restarts", 0), _fmt(r.get("regret"), ".3e"), r["equilibria_found"]])
    return buf.getvalue()


def _write(target, text: str) -> None:
    if hasattr(target, "write"):
        target.write(text)
    else:
        with open(target, "w", newline="") as fh:
            fh.write(text)


def iteration_table(records: Sequence[dict]) -> List[dict]:
    """Mean iterations, restarts and wall time per size, for plotting."""
    out = []
    for size in sorted({r["size"] for r in records}):
        rs = [r for r in records if r["size"] == size and r.get("regret") is not None]
        if not rs:
            continue
        walls = [r["wall_ms"] for r in rs if r.get("wall_ms") is not None]
        out.append({"size": size, "iterations": float(np.mean([r["iterations"] for r in rs])),
                    "restarts": float(np.mean([r["restarts"] for r in rs])),
                    "wall_ms": float(np.mean(walls)) if walls else None, "solved": len(rs)})
    return out


def iteration_cost(view: GameView, reps: int = 15, batch: int = 5, seed: int = 0) -> float:
    """Seconds for the core work of one path step, best of ``reps`` batches.

    The step's work is forming the augmented Jacobian and extracting its
    null direction at a random interior point.  Taking the fastest batch
    filters out scheduler noise.
    """
    rng = np.random.default_rng(seed)
    points = []
    while len(points) < batch:
        sigma = view.random_profile(rng)
        w = sigma + 0.01 * rng.standard_normal(sigma.size)
        b = rng.standard_normal(w.size)
        try:
            null_direction(augmented_jacobian(view, w, b))
        except np.linalg.LinAlgError:
            continue
        points.append((w, b))
    best = np.inf
    for _ in range(reps):
        t0 = time.perf_counter()
        for w, b in points:
            null_direction(augmented_jacobian(view, w, b))
        best = min(best, (time.perf_counter() - t0) / batch)
    return float(best)


def fit_cubic(m: Sequence[float], cost: Sequence[float]) -> tuple:
    """Least-squares cubic polynomial in ``m``; returns ``(coefficients, r_squared)``.

    Coefficients are highest degree first, as in :func:`numpy.polyfit`.
    """
    m = np.asarray(m, dtype=float)
    y = np.asarray(cost, dtype=float)
    if m.size < 4:
        raise ValueError("need at least four sizes for a cubic fit")
    coef = np.polyfit(m, y, 3)
    pred = np.polyval(coef, m)
    ss_res = float(((y - pred) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    return coef, 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
