"""The uniform interface every game kind exposes to the solvers.

A :class:`GameView` bundles the deviation function ``V``, its Jacobian, the
retraction ``R`` onto the strategy space and the Jacobian of ``R`` on a support
cell.  The continuation engine and IPA only ever talk to this interface.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from typing import Optional

import numpy as np

from .strategy import (
    DEFAULT_HORIZON,
    AgentIndexing,
    SupportSignature,
    project_product_simplex,
    random_profile,
    retraction_jacobian,
    signature_of,
    support_distance,
    uniform_profile,
)


class GameView(ABC):
    """Abstract game as seen by the equilibrium solvers."""

    indexing: AgentIndexing
    #: ``"mixed"`` for product-of-simplices spaces, ``"sequence"`` otherwise.
    kind: str = "mixed"
    lower_bound: float = 0.0

    @property
    def n_agents(self) -> int:
        return self.indexing.agent_count

    @property
    def dim(self) -> int:
        return self.indexing.total_dim

    # -- payoffs ---------------------------------------------------------
    @abstractmethod
    def deviation_vector(self, sigma: np.ndarray) -> np.ndarray:
        """``V(sigma)``: payoff of each coordinate's owner for deviating to it."""

    @abstractmethod
    def deviation_jacobian(self, sigma: np.ndarray) -> np.ndarray:
        """``dV/dsigma`` with zero same-agent blocks."""

    def payoffs(self, sigma: np.ndarray) -> np.ndarray:
        """Expected payoff of every agent."""
        v = self.deviation_vector(sigma)
        return np.array([sigma[self.indexing.slice(n)] @ v[self.indexing.slice(n)] for n in range(self.n_agents)])

    @abstractmethod
    def regret(self, sigma: np.ndarray) -> np.ndarray:
        """Per-agent gain of the best feasible unilateral deviation."""

    @abstractmethod
    def payoff_range(self, n: int) -> float:
        """Upper bound on the spread of agent ``n``'s deviation payoffs."""

    # -- geometry --------------------------------------------------------
    @abstractmethod
    def retract(self, w: np.ndarray) -> tuple:
        """Project ``w`` onto the strategy space; returns ``(sigma, signature)``."""

    @abstractmethod
    def retraction_jacobian(self, signature: SupportSignature) -> np.ndarray:
        """Jacobian of :meth:`retract` on the cell named by ``signature``."""

    @abstractmethod
    def support_distance(self, w: np.ndarray, dw: np.ndarray, horizon: float = DEFAULT_HORIZON) -> float:
        """Distance along ``dw`` to the next support-cell boundary."""

    @abstractmethod
    def is_affine_on(self, signature: SupportSignature) -> bool:
        """Whether ``V o R`` is affine on the given support cell."""

    @abstractmethod
    def random_profile(self, rng: np.random.Generator) -> np.ndarray:
        """Random valid profile."""


class MixedView(GameView):
    """Shared machinery for games over products of simplices."""

    kind = "mixed"
    lower_bound = 0.0

    def __init__(self, action_counts) -> None:
        self.indexing = AgentIndexing(tuple(action_counts))
        self._rj_cache: dict = {}

    @property
    def action_counts(self) -> tuple:
        return self.indexing.sizes

    def retract(self, w):
        sigma = project_product_simplex(w, self.indexing, 0.0)
        return sigma, signature_of(sigma, 0.0)

    def retraction_jacobian(self, signature):
        jac = self._rj_cache.get(signature)
        if jac is None:
            if len(self._rj_cache) > 4096:
                self._rj_cache.clear()
            jac = retraction_jacobian(signature, self.indexing)
            self._rj_cache[signature] = jac
        return jac

    def support_distance(self, w, dw, horizon=DEFAULT_HORIZON):
        return support_distance(w, dw, self.indexing, 0.0, horizon=horizon)

    def mixed_agents(self, signature: SupportSignature) -> np.ndarray:
        mask = signature.mask()
        return np.array([mask[self.indexing.slice(n)].sum() > 1 for n in range(self.n_agents)])

    def is_affine_on(self, signature):
        return self.n_agents <= 2 or int(self.mixed_agents(signature).sum()) <= 1

    def regret(self, sigma):
        v = self.deviation_vector(sigma)
        out = np.empty(self.n_agents)
        for n in range(self.n_agents):
            sl = self.indexing.slice(n)
            out[n] = max(0.0, float(v[sl].max() - sigma[sl] @ v[sl]))
        return out

    def random_profile(self, rng):
        return random_profile(self.indexing, rng)

    def uniform_profile(self) -> np.ndarray:
        return uniform_profile(self.indexing)

    def best_response(self, sigma: np.ndarray, n: int, bonus: Optional[np.ndarray] = None) -> int:
        """Lowest-index best pure response of agent ``n``."""
        v = self.deviation_vector(sigma)
        if bonus is not None:
            v = v + bonus
        return int(np.argmax(v[self.indexing.slice(n)]))
