"""Iterated polymatrix approximation (IPA) quick-start.

At a profile ``sigma`` the game is replaced by its first-order expansion, a
polymatrix game ``P_sigma`` whose pairwise blocks are the structured Jacobian
and whose unary term makes ``V^P(sigma) = V(sigma)``.  An equilibrium
``p(sigma)`` of ``P_sigma`` is found by complementary pivoting and ``sigma``
moves toward it.  A fixed point ``p(sigma) = sigma`` is an equilibrium of the
original game.  The approximate answer is then handed to the continuation
engine as a point on a nearby path.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .continuation import EquilibriumRecord, PathState, SolveResult, TraceConfig, solve_continuation, trace, wobble
from .lcp import LcpError, PolymatrixGame, solve_polymatrix
from .views import GameView, MixedView


@dataclass(frozen=True)
class IpaConfig:
    """Settings for :func:`ipa_run`.

    Parameters
    ----------
    tolerance : float
        Convergence threshold on ``||p(sigma) - sigma||`` and on true regret.
    max_iter : int
    step0 : float
        Initial damping factor.
    grow, shrink : float
        Damping multipliers after an improving or worsening residual.
    min_step : float
    restart_limit : int
        Fresh random starts tried by :func:`solve_ipa` before giving up.
    seed : int
    """

    tolerance: float = 1e-6
    max_iter: int = 200
    step0: float = 0.5
    grow: float = 1.5
    shrink: float = 0.5
    min_step: float = 0.02
    restart_limit: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        if not self.tolerance > 0:
            raise ValueError("tolerance must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be at least 1")
        if not 0 < self.min_step <= self.step0 <= 1:
            raise ValueError("need 0 < min_step <= step0 <= 1")


@dataclass
class IpaResult:
    profile: np.ndarray
    status: str
    iterations: int
    residual: float
    regret: float
    history: list = field(default_factory=list)


def linearize(view: GameView, sigma: np.ndarray) -> PolymatrixGame:
    """First-order polymatrix expansion of ``view`` at ``sigma``."""
    if view.kind != "mixed":
        raise ValueError("linearisation needs a mixed-strategy game")
    sigma = view.indexing.check(sigma)
    jac = view.deviation_jacobian(sigma)
    unary = view.deviation_vector(sigma) - jac @ sigma
    return PolymatrixGame(view.indexing.sizes, jac, unary)


def ipa_run(view: GameView, sigma0: np.ndarray, config: Optional[IpaConfig] = None) -> IpaResult:
    """Damped fixed-point iteration ``sigma <- sigma + a (p(sigma) - sigma)``.

    The damping ``a`` grows after an iteration that shrank the residual and
    shrinks otherwise.  The run stops early as soon as either ``sigma`` or
    ``p(sigma)`` has true regret within tolerance.
    """
    cfg = config or IpaConfig()
    sigma = view.indexing.check(np.asarray(sigma0, dtype=float)).copy()
    reg = float(view.regret(sigma).max())
    if reg <= cfg.tolerance:
        return IpaResult(sigma, "converged", 0, 0.0, reg)
    step = cfg.step0
    prev = np.inf
    history = []
    res = np.inf
    for it in range(1, cfg.max_iter + 1):
        try:
            p = solve_polymatrix(linearize(view, sigma), start=sigma)
        except LcpError as exc:
            raise LcpError(f"polymatrix solve failed at iteration {it}: {exc}") from exc
        res = float(np.abs(p - sigma).max())
        reg_p = float(view.regret(p).max())
        history.append((res, reg_p))
        if reg_p <= cfg.tolerance:
            return IpaResult(p, "converged", it, res, reg_p, history)
        if res <= cfg.tolerance:
            return IpaResult(sigma, "converged", it, res, float(view.regret(sigma).max()), history)
        step = min(1.0, step * cfg.grow) if res < prev else max(cfg.min_step, step * cfg.shrink)
        prev = res
        sigma = sigma + step * (p - sigma)
    return IpaResult(sigma, "stalled", cfg.max_iter, res, float(view.regret(sigma).max()), history)


def _cone_point(v: np.ndarray, support: np.ndarray) -> np.ndarray:
    """Nearest point to ``v`` in the simplex normal cone for ``support``.

    The cone holds vectors equal to a common ``t`` on the support and at most
    ``t`` elsewhere; the optimal ``t`` averages ``v`` over the support plus
    the off-support entries above ``t``.
    """
    on = v[support]
    off = np.sort(v[~support])[::-1]
    total, count = float(on.sum()), on.size
    t = total / count
    for x in off:
        if x <= t:
            break
        total += x
        count += 1
        t = total / count
    return np.where(support, t, np.minimum(v, t))


def quickstart_from_profile(view: GameView, sigma: np.ndarray, lam: float = 1.0) -> PathState:
    """Point on a continuation path whose retraction is ``sigma``.

    ``w = V(sigma) + sigma`` is moved to the nearest ``w'`` with
    ``R(w') = sigma`` and the bonus is set to ``(w' - w) / lam``, so
    ``F(w', lam) = 0``.  Games without a simplex retraction, or profiles whose
    preimage cannot be matched, fall back to a wobble at ``w``.
    """
    if not 0 < lam <= 1:
        raise ValueError("lam must lie in (0, 1]")
    sigma = view.indexing.check(np.asarray(sigma, dtype=float))
    v = view.deviation_vector(sigma)
    w = v + sigma
    if isinstance(view, MixedView) and np.all(sigma >= -1e-12):
        cone = np.empty_like(v)
        for n in range(view.n_agents):
            sl = view.indexing.slice(n)
            support = sigma[sl] > 0
            cone[sl] = _cone_point(v[sl], support)
        w2 = sigma + cone
        r, sig = view.retract(w2)
        if np.abs(r - sigma).max() <= 1e-12:
            return PathState(w=w2, lam=float(lam), b=(w2 - w) / lam, signature=sig)
    _, sig = view.retract(w)
    return wobble(view, PathState(w=w, lam=float(lam), b=np.zeros_like(w), signature=sig))


def solve_ipa(view: GameView, ipa_config: Optional[IpaConfig] = None, trace_config: Optional[TraceConfig] = None) -> SolveResult:
    """IPA from random starts, then continuation from the best approximation.

    Returns
    -------
    SolveResult
        ``iterations`` counts continuation steps only, ``ipa_iterations``
        the linearise-and-solve rounds, and ``restarts`` fresh IPA starts.
    """
    cfg = ipa_config or IpaConfig()
    tcfg = trace_config or TraceConfig(max_equilibria=1)
    rng = np.random.default_rng(cfg.seed)
    iters = 0
    best: Optional[IpaResult] = None
    sigma0 = view.uniform_profile() if hasattr(view, "uniform_profile") else view.random_profile(rng)
    restarts = 0
    for attempt in range(cfg.restart_limit + 1):
        try:
            res = ipa_run(view, sigma0, cfg)
        except LcpError:
            res = None
        if res is not None:
            iters += res.iterations
            if best is None or res.regret < best.regret:
                best = res
            if res.status == "converged":
                break
        restarts += 1
        sigma0 = view.random_profile(rng)
    if best is None:
        return SolveResult([], "failed", 0, restarts, [], ipa_iterations=iters)
    if best.regret <= tcfg.regret_tol:
        rec = EquilibriumRecord(profile=best.profile, regret=best.regret, crossing_index=0, steps=0, restarts=restarts, signature=view.retract(best.profile)[1])
        return SolveResult([rec], "converged", 0, restarts, [], ipa_iterations=iters)
    state = quickstart_from_profile(view, best.profile, 1.0)
    tr = trace(view, state, replace(tcfg, max_equilibria=1))
    if not tr.equilibria:
        fallback = solve_continuation(view, tcfg)
        return SolveResult(fallback.equilibria, fallback.status, tr.steps + fallback.iterations, restarts + 1 + fallback.restarts, [tr] + fallback.traces, ipa_iterations=iters)
    for e in tr.equilibria:
        e.restarts = restarts
    return SolveResult(list(tr.equilibria), tr.status, tr.steps, restarts, [tr], ipa_iterations=iters)
