"""Path following on the perturbed equilibrium correspondence.

The engine traces the zero set of

    F(w, lam) = w - R(w) - V(R(w)) - lam * b

from the bonus-dominated start at ``lam = 1`` through support cells, emitting
an equilibrium every time ``lam`` crosses zero.  Internally the perturbation
is split as ``lam * b = mu * b_hat`` with ``||b_hat|| = 1`` so that tangent
vectors weigh ``w`` and the homotopy parameter on the same scale.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional

import numpy as np

from .strategy import SupportSignature
from .views import GameView


@dataclass
class TraceConfig:
    """Knobs of :func:`trace`.

    Attributes
    ----------
    lambda_threshold : float
        Tracing stops once ``lam`` falls below this (negative) value.
    max_steps : int
        Cap on accepted plus rejected steps.
    error_budget : float
        Largest ``||F||_inf`` allowed after an accepted step.
    newton_trigger : float
        Predictor error above which the corrector runs.
    newton_max_iter : int
        Corrector and polish iteration cap.
    wobble : bool
        Allow perturbation changes when steps cannot be made small enough.
    max_step : float
        Step-length cap in non-affine cells.
    min_step : float
        Steps shorter than this trigger a wobble (or failure).
    corrector_radius : float
        Corrector iterates must stay within this multiple of the step length.
    min_cosine : float
        Smallest cosine allowed between successive tangents inside a cell.
    restart_limit : int
        Restarts allowed by :func:`solve_continuation`.
    seed : int
        Seed for the perturbation draw.
    cycle_detection : bool
        Abort when the path revisits a support cell.
    cycle_mode : str
        ``"cell"`` treats any revisit of a signature (other than bouncing
        straight back to the previous cell) as a cycle; ``"entry"`` only
        when the cell is re-entered within ``1e-6`` of an earlier entry point,
        which tolerates paths that legitimately pass through a cell twice.
    max_equilibria : int or None
        Stop after this many recorded equilibria.
    stop_on_ray : bool
        Stop when an affine cell extends to infinity with ``lam`` decreasing.
    horizon : float
        Search horizon for boundary distances.
    max_stalled_wobbles : int
        Consecutive wobbles without an accepted step before the trace gives
        up with status ``stalled``.  Degenerate games can make the Jacobian
        singular on a whole cell, where no perturbation helps.
    """

    lambda_threshold: float = -0.2
    max_steps: int = 100_000
    error_budget: float = 1e-7
    newton_trigger: float = 1e-8
    newton_max_iter: int = 20
    wobble: bool = True
    max_step: float = 0.25
    min_step: float = 1e-9
    corrector_radius: float = 0.3
    min_cosine: float = 0.9
    restart_limit: int = 10
    seed: int = 0
    cycle_detection: bool = True
    cycle_mode: str = "entry"
    max_equilibria: Optional[int] = None
    stop_on_ray: bool = True
    horizon: float = 1e6
    regret_tol: float = 1e-8
    max_stalled_wobbles: int = 5

    def __post_init__(self) -> None:
        if self.cycle_mode not in ("cell", "entry"):
            raise ValueError("cycle_mode must be 'cell' or 'entry'")
        if self.lambda_threshold >= 0:
            raise ValueError("lambda_threshold must be negative")
        if self.error_budget <= 0 or self.newton_trigger <= 0:
            raise ValueError("tolerances must be positive")
        if self.max_steps < 1 or self.newton_max_iter < 1:
            raise ValueError("iteration caps must be positive")


@dataclass
class PathState:
    """One point ``(w, lam)`` on the path for perturbation ``b``."""

    w: np.ndarray
    lam: float
    b: np.ndarray
    signature: Optional[SupportSignature] = None
    steps: int = 0
    error: float = 0.0


@dataclass
class EquilibriumRecord:
    """An equilibrium found where the path crossed ``lam = 0``."""

    profile: np.ndarray
    regret: float
    crossing_index: int
    steps: int
    restarts: int = 0
    signature: Optional[SupportSignature] = None


@dataclass
class TraceResult:
    equilibria: List[EquilibriumRecord]
    status: str
    steps: int
    state: PathState
    wobbles: int = 0
    newton_calls: int = 0
    cells: int = 0
    log: List[dict] = field(default_factory=list)

    def __iter__(self):
        return iter(self.equilibria)

    def __len__(self) -> int:
        return len(self.equilibria)


def signature_hash(sig: SupportSignature) -> int:
    """Process-independent hash of a signature, for logs."""
    return zlib.crc32(sig.bits) ^ sig.length


# ---------------------------------------------------------------------------
# residual and linearisation
# ---------------------------------------------------------------------------


def residual(view: GameView, w: np.ndarray, lam: float, b: np.ndarray) -> np.ndarray:
    """``F(w, lam)``."""
    sigma, _ = view.retract(w)
    return w - sigma - view.deviation_vector(sigma) - lam * b


def _jacobian_w(view, w):
    sigma, sig = view.retract(w)
    dr = view.retraction_jacobian(sig)
    jac = view.deviation_jacobian(sigma)
    m = w.size
    a = np.eye(m) - (jac + np.eye(m)) @ dr
    return a, sigma, sig


def augmented_jacobian(view: GameView, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``[dF/dw, dF/dlam]`` as an ``m x (m+1)`` matrix."""
    a, _, _ = _jacobian_w(view, w)
    return np.column_stack([a, -b])


def null_direction(aug: np.ndarray) -> tuple:
    """Unit null vector of a full-row-rank ``m x (m+1)`` matrix.

    Returns the vector and the sign of ``det([aug; t^T])`` so callers can keep
    the orientation fixed along the path.
    """
    m = aug.shape[0]
    q, r = np.linalg.qr(aug.T, mode="complete")
    t = q[:, m].copy()
    diag = np.abs(np.diag(r[:m, :m]))
    if diag.size and diag.min() <= 1e-13 * max(1.0, diag.max()):
        raise np.linalg.LinAlgError("augmented Jacobian is rank deficient")
    sign = np.sign(np.linalg.det(np.vstack([aug, t])))
    return t, sign


def adjoint_direction(aug: np.ndarray) -> np.ndarray:
    """Cofactor form of the tangent: ``(-adj(A_w) A_lam, det A_w)``.

    Cross-check for small problems only; the cost grows like ``m^4``.
    """
    m = aug.shape[0]
    out = np.empty(m + 1)
    for i in range(m + 1):
        minor = np.delete(aug, i, axis=1)
        out[i] = (-1) ** (i + m) * np.linalg.det(minor)
    return out


def path_direction(view: GameView, state: PathState, orientation: Optional[float] = None) -> tuple:
    """Tangent ``(dw, dlam)`` of the path at ``state``.

    Parameters
    ----------
    orientation : float, optional
        Sign of ``det([A; t^T])`` to reproduce.  When omitted the direction is
        chosen with ``dlam < 0``.

    Returns
    -------
    dw : ndarray
    dlam : float
    orientation : float
        The orientation sign actually used.
    """
    aug = augmented_jacobian(view, state.w, state.b)
    t, sign = null_direction(aug)
    if orientation is None:
        if t[-1] > 0:
            t, sign = -t, -sign
        orientation = sign
    elif sign != orientation:
        t = -t
    return t[:-1], float(t[-1]), orientation


# ---------------------------------------------------------------------------
# local repairs
# ---------------------------------------------------------------------------


def newton_polish(view: GameView, state: PathState, max_iter: int = 20, tol: float = 1e-13) -> tuple:
    """Gauss-Newton on ``w`` at fixed ``lam``; never increases ``||F||``.

    Returns
    -------
    state : PathState
    ok : bool
        Whether the final residual is at most ``tol``.
    """
    w = state.w.copy()
    err = float(np.abs(residual(view, w, state.lam, state.b)).max())
    for _ in range(max_iter):
        if err <= tol:
            break
        a, sigma, _ = _jacobian_w(view, w)
        f = w - sigma - view.deviation_vector(sigma) - state.lam * state.b
        step = np.linalg.lstsq(a, -f, rcond=None)[0]
        improved = False
        for damp in (1.0, 0.5, 0.25, 0.125):
            cand = w + damp * step
            e = float(np.abs(residual(view, cand, state.lam, state.b)).max())
            if e < err:
                w, err, improved = cand, e, True
                break
        if not improved:
            break
    _, sig = view.retract(w)
    return replace(state, w=w, signature=sig, error=err), err <= tol


def wobble(view: GameView, state: PathState) -> PathState:
    """Replace ``b`` so that ``F(w, lam) = 0`` holds exactly at the current ``w``."""
    if state.lam == 0:
        raise ValueError("cannot wobble at lam = 0")
    sigma, sig = view.retract(state.w)
    b = (state.w - sigma - view.deviation_vector(sigma)) / state.lam
    return replace(state, b=b, signature=sig, error=0.0)


# ---------------------------------------------------------------------------
# starting points
# ---------------------------------------------------------------------------


def _bonus_scale(view: GameView, b: np.ndarray) -> np.ndarray:
    b = b.copy()
    for n in range(view.n_agents):
        sl = view.indexing.slice(n)
        part = np.sort(b[sl])[::-1]
        if part.size < 2:
            continue
        gap = part[0] - part[1]
        need = 1.5 * (view.payoff_range(n) + 1e-3)
        if gap < need:
            b[sl] *= need / gap
    return b


def _strict_pure_equilibrium(view: GameView, b: np.ndarray, max_rounds: int = 1000) -> np.ndarray:
    """Iterated best response on ``G + b`` starting from the bonus argmax."""
    idx = view.indexing
    acts = [int(np.argmax(b[idx.slice(n)])) for n in range(view.n_agents)]
    from .strategy import pure_profile

    for _ in range(max_rounds):
        changed = False
        for n in range(view.n_agents):
            sigma = pure_profile(idx, acts)
            v = view.deviation_vector(sigma) + b
            a = int(np.argmax(v[idx.slice(n)]))
            if a != acts[n]:
                acts[n] = a
                changed = True
        if not changed:
            break
    sigma = pure_profile(idx, acts)
    v = view.deviation_vector(sigma) + b
    for n in range(view.n_agents):
        vn = v[idx.slice(n)]
        others = np.delete(vn, acts[n])
        if others.size and others.max() >= vn[acts[n]]:
            raise ValueError("bonus does not single out a strict pure equilibrium")
    return sigma


def initial_state_normal(view: GameView, seed=None, bonus: Optional[np.ndarray] = None) -> PathState:
    """Start of the path for a mixed-strategy game.

    With ``bonus=None`` the bonus has i.i.d. uniform entries rescaled per
    agent until the top bonus beats the runner-up by more than the agent's
    payoff range, so each agent's argmax action is strictly dominant at
    ``lam = 1``.  A custom bonus is accepted when iterated best response finds
    a strict pure equilibrium of the perturbed game.
    """
    if bonus is None:
        rng = np.random.default_rng(seed)
        b = _bonus_scale(view, rng.random(view.dim))
        idx = view.indexing
        from .strategy import pure_profile

        sigma = pure_profile(idx, [int(np.argmax(b[idx.slice(n)])) for n in range(view.n_agents)])
    else:
        b = np.asarray(bonus, dtype=float).copy()
        sigma = _strict_pure_equilibrium(view, b)
    w = view.deviation_vector(sigma) + b + sigma
    _, sig = view.retract(w)
    return PathState(w=w, lam=1.0, b=b, signature=sig)


def initial_state(view: GameView, seed=None, bonus: Optional[np.ndarray] = None) -> PathState:
    """Dispatch to the right starting construction for ``view``."""
    if view.kind == "sequence":
        from .extensive_start import initial_state_sequence

        return initial_state_sequence(view, seed=seed, bonus=bonus)
    return initial_state_normal(view, seed=seed, bonus=bonus)


# ---------------------------------------------------------------------------
# the tracer
# ---------------------------------------------------------------------------


class _Tracer:
    def __init__(self, view: GameView, state: PathState, cfg: TraceConfig, log: Optional[Callable[[dict], None]]):
        self.view = view
        self.cfg = cfg
        self.m = view.dim
        nb = float(np.linalg.norm(state.b))
        if nb == 0:
            raise ValueError("perturbation must be non-zero")
        self.nb = nb
        self.bh = state.b / nb
        self.w = state.w.astype(float).copy()
        self.mu = float(state.lam) * nb
        self.mu_stop = cfg.lambda_threshold * nb
        self.events: List[dict] = []
        self.sink = log
        self.records: List[EquilibriumRecord] = []
        self.wobbles = 0
        self.stalled = 0
        self.newton_calls = 0
        self.cells = 1
        self._jac_cache = None

    # -- helpers -------------------------------------------------------
    def emit(self, **ev) -> None:
        self.events.append(ev)
        if self.sink is not None:
            self.sink(ev)

    def F(self, w, mu):
        sigma, sig = self.view.retract(w)
        return w - sigma - self.view.deviation_vector(sigma) - mu * self.bh, sigma, sig

    def A(self, w):
        a, sigma, sig = _jacobian_w(self.view, w)
        return np.column_stack([a, -self.bh]), sigma, sig

    def correct(self, w, mu, t, radius):
        """Pseudo-arclength Newton: solve ``F = 0`` with the update orthogonal to ``t``.

        Gives up once the iterate strays more than ``radius`` from the
        predictor, which signals divergence or a jump to another branch.
        """
        self.newton_calls += 1
        tol = 0.01 * self.cfg.newton_trigger
        w0, mu0 = w, mu
        for _ in range(self.cfg.newton_max_iter):
            if not np.all(np.isfinite(w)) or np.hypot(np.linalg.norm(w - w0), mu - mu0) > radius:
                return w0, mu0, False, np.inf
            f, _, _ = self.F(w, mu)
            e = float(np.abs(f).max())
            if not np.isfinite(e):
                return w, mu, False, e
            if e <= tol:
                return w, mu, True, e
            aug, _, _ = self.A(w)
            sq = np.vstack([aug, t])
            try:
                d = np.linalg.solve(sq, np.concatenate([-f, [0.0]]))
            except np.linalg.LinAlgError:
                d = np.linalg.lstsq(aug, -f, rcond=None)[0]
            w = w + d[:-1]
            mu = mu + d[-1]
        f, _, _ = self.F(w, mu)
        e = float(np.abs(f).max())
        return w, mu, e <= self.cfg.error_budget, e

    def record(self, w0, mu0, w1, mu1, steps):
        theta = mu0 / (mu0 - mu1)
        w = w0 + theta * (w1 - w0)
        st = PathState(w=w, lam=0.0, b=self.bh)
        st, _ = newton_polish(self.view, st, max_iter=self.cfg.newton_max_iter)
        sigma, sig = self.view.retract(st.w)
        reg = float(np.max(self.view.regret(sigma)))
        idx = len(self.records)
        self.emit(event="equilibrium", step=steps, crossing=idx, regret=reg, residual=st.error)
        if reg <= self.cfg.regret_tol:
            self.records.append(EquilibriumRecord(profile=sigma, regret=reg, crossing_index=idx, steps=steps, signature=sig))
        else:
            self.emit(event="crossing_rejected", step=steps, regret=reg)

    def tangent(self, w, orient):
        """Oriented unit tangent at ``w``; nudges off degenerate points."""
        aug, sigma, sig = self.A(w)
        t, sign = null_direction(aug)
        if orient is None:
            if t[-1] > 0:
                t, sign = -t, -sign
            orient = sign
        elif sign != orient:
            t = -t
        return t, orient, sig

    def reject(self, k, w1, mu1, steps):
        """Shrink the step; wobble onto a new path when it gets too small."""
        k *= 2
        if self.cfg.max_step / k >= self.cfg.min_step:
            return k, None
        if self.cfg.wobble and mu1 != 0:
            st = wobble(self.view, PathState(w=w1, lam=mu1, b=self.bh))
            self.bh = st.b
            self.wobbles += 1
            self.stalled += 1
            self.emit(event="wobble", step=steps, lam=mu1 / self.nb)
            if self.stalled > self.cfg.max_stalled_wobbles:
                return k, "stalled"
            return 1, (w1, mu1)
        return k, "fail"

    # -- main loop ------------------------------------------------------
    def run(self) -> TraceResult:
        cfg = self.cfg
        view = self.view
        w, mu = self.w, self.mu
        f, sigma, sig = self.F(w, mu)
        err = float(np.abs(f).max())
        if err > cfg.error_budget:
            raise ValueError(f"start is off the path: |F| = {err:.3e}")
        t, orient, sig = self.tangent(w, None)
        cur, prev_cell = sig, None
        seen = {sig: [np.append(w, mu)]}
        k, clean = 1, 0
        steps = 0
        e1 = err
        status = "step_cap"
        while steps < cfg.max_steps:
            if mu < self.mu_stop:
                status = "threshold"
                break
            if cfg.max_equilibria is not None and len(self.records) >= cfg.max_equilibria:
                status = "max_equilibria"
                break
            dw, dmu = t[:-1], float(t[-1])
            affine = view.is_affine_on(cur)
            delta = view.support_distance(w, dw, horizon=cfg.horizon) if np.any(dw) else np.inf
            if affine:
                if not np.isfinite(delta):
                    if dmu < 0 and mu > 0:
                        h0 = mu / -dmu
                        self.record(w, mu, w + h0 * dw, 0.0, steps)
                        w, mu = w + h0 * dw, 0.0
                    if cfg.stop_on_ray or dmu >= 0:
                        status = "ray"
                        break
                    h = (mu - self.mu_stop) / -dmu + cfg.max_step
                else:
                    h = delta
            else:
                h = min(delta, cfg.max_step / k)
            steps += 1
            w1, mu1 = w + h * dw, mu + h * dmu
            f1, _, _ = self.F(w1, mu1)
            e1 = float(np.abs(f1).max())
            if e1 > cfg.newton_trigger:
                w1c, mu1c, ok, e1 = self.correct(w1, mu1, t, cfg.corrector_radius * h + 1e-9)
                self.emit(event="newton", step=steps, ok=ok, residual=e1)
                if not ok:
                    k, fix = self.reject(k, w + 0.5 * min(h, cfg.min_step) * dw, mu + 0.5 * min(h, cfg.min_step) * dmu, steps)
                    clean = 0
                    if fix in ("fail", "stalled"):
                        status = "newton_failure" if fix == "fail" else fix
                        break
                    if fix is None:
                        continue
                    w1c, mu1c = fix
                    e1 = 0.0
                w1, mu1 = w1c, mu1c
            try:
                t1, _, sig1 = self.tangent(w1, orient)
            except np.linalg.LinAlgError:
                try:
                    w1 = w1 + 1e-11 * dw
                    t1, _, sig1 = self.tangent(w1, orient)
                except np.linalg.LinAlgError:
                    k, fix = self.reject(k, w1, mu1, steps)
                    if fix in ("fail", "stalled"):
                        status = "singular" if fix == "fail" else fix
                        break
                    continue
            if not affine and sig1 == cur and float(t1 @ t) < cfg.min_cosine:
                k, fix = self.reject(k, w1, mu1, steps)
                clean = 0
                self.emit(event="angle_reject", step=steps)
                if fix in ("fail", "stalled"):
                    status = "newton_failure" if fix == "fail" else fix
                    break
                if fix is None:
                    continue
            if e1 > 0.5 * cfg.error_budget:
                k *= 2
                clean = 0
            else:
                clean += 1
                if clean >= 3:
                    k = max(1, k // 2)
                    clean = 0
            if (mu > 0 >= mu1) or (mu < 0 <= mu1):
                if mu != 0:
                    self.record(w, mu, w1, mu1, steps)
            w, mu, t = w1, mu1, t1
            self.stalled = 0
            if sig1 != cur:
                point = np.append(w, mu)
                if cfg.cycle_detection and sig1 in seen and sig1 != prev_cell:
                    scale = 1e-6 * (1.0 + float(np.abs(point).max()))
                    if cfg.cycle_mode == "cell" or any(np.abs(p - point).max() <= scale for p in seen[sig1]):
                        status = "cycle"
                        self.emit(event="cycle", step=steps, cell=signature_hash(sig1))
                        break
                seen.setdefault(sig1, []).append(point)
                prev_cell, cur = cur, sig1
                self.cells += 1
            self.emit(event="step", step=steps, lam=mu / self.nb, residual=e1, cell=signature_hash(cur), k=k)
        lam = mu / self.nb
        final = PathState(w=w, lam=lam, b=self.bh * self.nb, signature=cur, steps=steps, error=e1)
        return TraceResult(
            equilibria=self.records,
            status=status,
            steps=steps,
            state=final,
            wobbles=self.wobbles,
            newton_calls=self.newton_calls,
            cells=self.cells,
            log=self.events,
        )


def trace(view: GameView, state: PathState, config: Optional[TraceConfig] = None, log=None) -> TraceResult:
    """Follow the path from ``state`` and collect equilibria at ``lam = 0``.

    Parameters
    ----------
    view : GameView
    state : PathState
        Must satisfy ``F = 0`` within the error budget.
    config : TraceConfig, optional
    log : callable, optional
        Receives every run-log record as a dict.

    Returns
    -------
    TraceResult
        ``status`` is one of ``threshold``, ``ray``, ``cycle``,
        ``max_equilibria``, ``step_cap``, ``newton_failure``, ``singular`` or
        ``stalled``.
    """
    cfg = config or TraceConfig()
    return _Tracer(view, state, cfg, log).run()


def jsonl_writer(stream) -> Callable[[dict], None]:
    """Log sink writing one JSON object per line to ``stream``."""

    def write(ev: dict) -> None:
        stream.write(json.dumps(ev, sort_keys=True) + "\n")

    return write


@dataclass
class SolveResult:
    equilibria: List[EquilibriumRecord]
    status: str
    iterations: int
    restarts: int
    traces: List[TraceResult] = field(default_factory=list)
    ipa_iterations: int = 0


def solve_continuation(view: GameView, config: Optional[TraceConfig] = None, first_only: bool = True) -> SolveResult:
    """Trace from fresh random perturbations until an equilibrium is found.

    Each restart uses seed ``config.seed + r``.
    """
    cfg = config or TraceConfig()
    if first_only and cfg.max_equilibria is None:
        cfg = replace(cfg, max_equilibria=1)
    total = 0
    traces = []
    for r in range(cfg.restart_limit + 1):
        st = initial_state(view, seed=cfg.seed + r)
        res = trace(view, st, cfg)
        traces.append(res)
        total += res.steps
        if res.equilibria:
            for rec in res.equilibria:
                rec.restarts = r
            return SolveResult(res.equilibria, res.status, total, r, traces)
    return SolveResult([], traces[-1].status if traces else "none", total, cfg.restart_limit, traces)
