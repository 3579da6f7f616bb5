"""Command-line interface: ``structnash {solve,generate,verify,bench}``."""

from __future__ import annotations

import argparse
import json
import sys
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .bench import FAMILIES, SOLVERS, BenchmarkSpec, make_game, run_benchmark, solve
from .continuation import TraceConfig
from .io import game_from_json, game_to_json, load_profile, profile_to_json, save_json
from .maid import MaidGame, solve_maid
from .sequence_form import DEFAULT_EPSILON


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON, help="realisation lower bound for sequence-form games")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="output file (default: stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="structnash", description="Nash equilibria of structured games by path following.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="find an equilibrium of a game file")
    p.add_argument("game")
    p.add_argument("--solver", choices=SOLVERS, default="cont")
    p.add_argument("--lambda-threshold", type=float, default=-0.2)
    p.add_argument("--max-restarts", type=int, default=10)
    p.add_argument("--no-decompose", action="store_true", help="solve MAIDs without relevance decomposition")
    _common(p)

    p = sub.add_parser("generate", help="write a benchmark game")
    p.add_argument("family", choices=FAMILIES)
    p.add_argument("--size", type=int, required=True)
    _common(p)

    p = sub.add_parser("verify", help="check a profile against a game")
    p.add_argument("game")
    p.add_argument("profile")
    p.add_argument("--tol", type=float, default=1e-8)
    _common(p)

    p = sub.add_parser("bench", help="run a benchmark spec")
    p.add_argument("spec")
    p.add_argument("--solver", choices=SOLVERS, default=None)
    p.add_argument("--lambda-threshold", type=float, default=None)
    p.add_argument("--max-restarts", type=int, default=None)
    p.add_argument("--jsonl", default=None, help="line-delimited JSON detail file")
    p.add_argument("--epsilon", type=float, default=None)
    p.add_argument("--seed", type=int, default=None, help="replace the spec's game seeds with this one")
    p.add_argument("--out", default=None, help="CSV file (default: stdout)")
    return parser


def _emit(obj, out: Optional[str]) -> None:
    if out:
        save_json(obj, out)
    else:
        json.dump(obj, sys.stdout, indent=1, sort_keys=True)
        sys.stdout.write("\n")


def _load(path: str, epsilon: float):
    with open(path) as fh:
        return game_from_json(json.load(fh), epsilon)


def cmd_solve(args) -> int:
    view = _load(args.game, args.epsilon)
    if isinstance(view, MaidGame) and args.solver == "cont":
        cfg = TraceConfig(seed=args.seed, restart_limit=args.max_restarts, lambda_threshold=args.lambda_threshold, max_equilibria=1)
        res = solve_maid(view.maid, args.epsilon, cfg, decompose=not args.no_decompose)
        profile, status, iters, restarts = res.plan, res.status, res.iterations, res.restarts
    else:
        res = solve(view, args.solver, seed=args.seed, restart_limit=args.max_restarts, lambda_threshold=args.lambda_threshold)
        profile = res.equilibria[0].profile if res.equilibria else None
        status, iters, restarts = res.status, res.iterations, res.restarts
    if profile is None:
        print(f"no equilibrium found ({status}, {iters} iterations, {restarts} restarts)", file=sys.stderr)
        return 1
    reg = float(view.regret(profile).max())
    out = profile_to_json(view, profile)
    out.update(regret=reg, iterations=iters, restarts=restarts, status=status)
    _emit(out, args.out)
    print(f"equilibrium: regret {reg:.3e}, {iters} iterations, {restarts} restarts", file=sys.stderr)
    return 0


def cmd_generate(args) -> int:
    view = make_game(args.family, args.size, args.seed, args.epsilon)
    _emit(game_to_json(view), args.out)
    return 0


def cmd_verify(args) -> int:
    view = _load(args.game, args.epsilon)
    sigma = load_profile(view, args.profile)
    reg = view.regret(sigma)
    ok = bool(reg.max() <= args.tol)
    out = {"equilibrium": ok, "regret": reg.tolist(), "max_regret": float(reg.max()), "payoffs": view.payoffs(sigma).tolist()}
    if view.kind == "sequence":
        out["min_realisation"] = float(np.min(sigma))
    _emit(out, args.out)
    return 0 if ok else 1


def cmd_bench(args) -> int:
    with open(args.spec) as fh:
        data = json.load(fh)
    for key, val in (("solver", args.solver), ("lambda_threshold", args.lambda_threshold),
                     ("restart_limit", args.max_restarts), ("epsilon", args.epsilon)):
        if val is not None:
            data[key] = val
    if args.seed is not None:
        data.pop("seed", None)
        data["seeds"] = [args.seed]
    spec = BenchmarkSpec.from_json(data)
    run_benchmark(spec, csv_out=args.out or sys.stdout, jsonl_out=args.jsonl)
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    return {"solve": cmd_solve, "generate": cmd_generate, "verify": cmd_verify, "bench": cmd_bench}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
