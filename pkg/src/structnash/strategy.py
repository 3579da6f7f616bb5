"""Strategy-profile spaces, the product-of-simplices retraction and supports.

All game kinds share a single ambient vector layout: agent ``n`` owns the
contiguous slice ``indexing.slice(n)``.  For normal-form and graphical games a
slice holds mixed-strategy probabilities; for sequence-form games it holds
realisation probabilities of terminal sequences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from . import kernels

SUPPORT_TOL = 1e-12
BISECT_TOL = 1e-10
DEFAULT_HORIZON = 1e6


@dataclass(frozen=True)
class AgentIndexing:
    """Layout of per-agent coordinate slices inside the ambient vector.

    Parameters
    ----------
    sizes : sequence of int
        Number of coordinates owned by each agent, in agent order.
    """

    sizes: tuple
    offsets: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        sizes = tuple(int(s) for s in self.sizes)
        if not sizes or min(sizes) < 1:
            raise ValueError("every agent needs at least one coordinate")
        object.__setattr__(self, "sizes", sizes)
        offs = np.zeros(len(sizes), dtype=np.int64)
        offs[1:] = np.cumsum(sizes)[:-1]
        offs.setflags(write=False)
        object.__setattr__(self, "offsets", offs)

    @property
    def agent_count(self) -> int:
        return len(self.sizes)

    @property
    def total_dim(self) -> int:
        return int(sum(self.sizes))

    @property
    def lengths(self) -> np.ndarray:
        return np.asarray(self.sizes, dtype=np.int64)

    def slice(self, n: int) -> slice:
        o = int(self.offsets[n])
        return slice(o, o + self.sizes[n])

    def owner(self) -> np.ndarray:
        """Agent index of every coordinate."""
        return np.repeat(np.arange(self.agent_count), self.sizes)

    def split(self, x: np.ndarray) -> list:
        return [x[self.slice(n)] for n in range(self.agent_count)]

    def check(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.total_dim,):
            raise ValueError(f"expected vector of length {self.total_dim}, got shape {x.shape}")
        return x


@dataclass(frozen=True)
class SupportSignature:
    """Hashable bitmask marking coordinates strictly above their lower bound."""

    bits: bytes
    length: int

    @classmethod
    def from_mask(cls, mask: np.ndarray) -> "SupportSignature":
        mask = np.asarray(mask, dtype=bool)
        return cls(np.packbits(mask).tobytes(), int(mask.size))

    def mask(self) -> np.ndarray:
        raw = np.frombuffer(self.bits, dtype=np.uint8)
        return np.unpackbits(raw, count=self.length).astype(bool)

    def __repr__(self) -> str:
        return "SupportSignature(" + "".join("1" if b else "0" for b in self.mask()) + ")"


@dataclass(frozen=True)
class StrategyProfile:
    """A point of the strategy space together with its layout."""

    values: np.ndarray
    indexing: AgentIndexing

    def __post_init__(self) -> None:
        v = self.indexing.check(self.values).copy()
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def agent(self, n: int) -> np.ndarray:
        return self.values[self.indexing.slice(n)]

    def is_mixed_valid(self, tol: float = 1e-9) -> bool:
        for n in range(self.indexing.agent_count):
            s = self.agent(n)
            if s.min() < -tol or abs(s.sum() - 1.0) > tol:
                return False
        return True


def signature_of(sigma: np.ndarray, lower_bound: float = 0.0) -> SupportSignature:
    """Support signature of an already retracted vector."""
    return SupportSignature.from_mask(np.asarray(sigma) > lower_bound + SUPPORT_TOL)


def _check_bound(indexing: AgentIndexing, lower_bound: float) -> None:
    if lower_bound < 0 or np.any(lower_bound * indexing.lengths > 1.0 + 1e-15):
        raise ValueError("lower bound makes some simplex empty")


def project_product_simplex(w: np.ndarray, indexing: AgentIndexing, lower_bound: float = 0.0) -> np.ndarray:
    """Raw-array form of :func:`retract_simplex` (no signature)."""
    w = indexing.check(w)
    return kernels.project_simplices(np.ascontiguousarray(w), indexing.offsets, indexing.lengths, float(lower_bound))


def retract_simplex(w, indexing: AgentIndexing, lower_bound: float = 0.0):
    """Euclidean projection onto the product of (bounded) simplices.

    Parameters
    ----------
    w : array_like
        Ambient point.
    indexing : AgentIndexing
        Slice layout; each slice is projected independently.
    lower_bound : float
        Common lower bound on every coordinate.

    Returns
    -------
    profile : StrategyProfile
    signature : SupportSignature
    """
    _check_bound(indexing, lower_bound)
    sigma = project_product_simplex(w, indexing, lower_bound)
    return StrategyProfile(sigma, indexing), signature_of(sigma, lower_bound)


def retraction_jacobian(signature: SupportSignature, indexing: AgentIndexing) -> np.ndarray:
    """Jacobian of the product-simplex retraction on a support cell.

    On support ``S`` of size ``k`` the agent block is ``I - 11^T / k``; rows
    and columns outside the support vanish.
    """
    mask = signature.mask()
    if mask.size != indexing.total_dim:
        raise ValueError("signature does not match indexing")
    m = indexing.total_dim
    jac = np.zeros((m, m))
    for n in range(indexing.agent_count):
        sl = indexing.slice(n)
        idx = np.arange(sl.start, sl.stop)[mask[sl]]
        k = idx.size
        if k == 0:
            raise ValueError(f"agent {n} has an empty support")
        jac[np.ix_(idx, idx)] = np.eye(k) - 1.0 / k
    return jac


def simplex_boundary_hint(w: np.ndarray, dw: np.ndarray, indexing: AgentIndexing, lower_bound: float = 0.0) -> float:
    """Closed-form first support change along ``w + t dw`` (used as a hint).

    Within the current cell every projected coordinate is affine in ``t``, so
    the first change is the smallest positive root among support coordinates
    hitting the bound and off-support coordinates rising above the threshold.
    """
    best = np.inf
    y = w - lower_bound
    sigma = project_product_simplex(w, indexing, lower_bound)
    for n in range(indexing.agent_count):
        sl = indexing.slice(n)
        on = sigma[sl] > lower_bound + SUPPORT_TOL
        k = int(on.sum())
        target = 1.0 - indexing.sizes[n] * lower_bound
        ys, dys = y[sl], dw[sl]
        tau0 = (ys[on].sum() - target) / k
        dtau = dys[on].sum() / k
        gap0 = ys - tau0
        dgap = dys - dtau
        with np.errstate(divide="ignore", invalid="ignore"):
            leave = np.where(on & (dgap < 0), -gap0 / dgap, np.inf)
            enter = np.where(~on & (dgap > 0), -gap0 / dgap, np.inf)
        cand = np.concatenate([leave, enter])
        cand = cand[cand >= 0]
        if cand.size:
            best = min(best, float(cand.min()))
    return best


def bisect_signature_change(
    sig_at: Callable[[float], SupportSignature],
    horizon: float = DEFAULT_HORIZON,
    tol: float = BISECT_TOL,
    hint: Optional[float] = None,
    start: float = 1e-3,
) -> float:
    """Smallest ``t > 0`` where ``sig_at(t)`` differs from ``sig_at(0)``.

    The support cells of a projection are convex, so along a ray the
    predicate "signature changed" is monotone; a doubling scan brackets the
    change and bisection narrows it to ``tol``.  The returned value is the
    upper end of the final bracket, so the point it names already lies in the
    next cell.  ``inf`` means no change within ``horizon``.
    """
    sig0 = sig_at(0.0)
    lo, hi = 0.0, None
    if hint is not None and np.isfinite(hint) and hint < horizon:
        a = hint * (1.0 - 1e-7) - tol
        b = hint * (1.0 + 1e-7) + tol
        if sig_at(max(a, 0.0)) == sig0 and sig_at(b) != sig0:
            lo, hi = max(a, 0.0), b
    if hi is None:
        t = min(start, horizon)
        while True:
            if sig_at(t) != sig0:
                hi = t
                break
            lo = t
            if t >= horizon:
                return float("inf")
            t = min(2.0 * t, horizon)
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if sig_at(mid) == sig0:
            lo = mid
        else:
            hi = mid
    return hi


def support_distance(
    w,
    dw,
    indexing: AgentIndexing,
    lower_bound: float = 0.0,
    horizon: float = DEFAULT_HORIZON,
    use_hint: bool = True,
) -> float:
    """Distance along ``dw`` from ``w`` to the next support-cell boundary.

    Returns the smallest ``t > 0`` at which the signature of
    ``retract_simplex(w + t dw)`` changes, to within :data:`BISECT_TOL`, or
    ``inf`` if nothing changes before ``horizon``.
    """
    w = indexing.check(w)
    dw = indexing.check(dw)
    if not np.any(dw):
        raise ValueError("direction must be non-zero")

    def sig_at(t: float) -> SupportSignature:
        return signature_of(project_product_simplex(w + t * dw, indexing, lower_bound), lower_bound)

    hint = simplex_boundary_hint(w, dw, indexing, lower_bound) if use_hint else None
    return bisect_signature_change(sig_at, horizon=horizon, hint=hint)


def uniform_profile(indexing: AgentIndexing) -> np.ndarray:
    return np.concatenate([np.full(k, 1.0 / k) for k in indexing.sizes])


def random_profile(indexing: AgentIndexing, rng: np.random.Generator) -> np.ndarray:
    """Uniformly random point of the product of simplices."""
    return np.concatenate([rng.dirichlet(np.ones(k)) for k in indexing.sizes])


def pure_profile(indexing: AgentIndexing, actions: Sequence[int]) -> np.ndarray:
    x = np.zeros(indexing.total_dim)
    for n, a in enumerate(actions):
        x[int(indexing.offsets[n]) + int(a)] = 1.0
    return x
