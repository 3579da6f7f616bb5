"""Dense normal-form games.

Payoff tensors are stored one per agent with axes in agent order, so the flat
row-major layout has the last agent's action varying fastest.  This class is
the reference implementation against which the structured engines are
checked.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .views import MixedView


class NormalFormGame(MixedView):
    """Normal-form game given by one dense payoff tensor per agent.

    Parameters
    ----------
    action_counts : sequence of int
        Number of actions of each agent.
    payoffs : array_like
        Either shape ``(N, *action_counts)`` or ``(N, prod(action_counts))``.
    """

    def __init__(self, action_counts: Sequence[int], payoffs) -> None:
        super().__init__(action_counts)
        shape = tuple(self.indexing.sizes)
        arr = np.asarray(payoffs, dtype=float)
        n = self.indexing.agent_count
        if arr.size != n * int(np.prod(shape)):
            raise ValueError(f"payoff table has {arr.size} entries, expected {n * int(np.prod(shape))}")
        arr = arr.reshape((n,) + shape)
        if not np.all(np.isfinite(arr)):
            raise ValueError("payoffs must be finite")
        self.tensors = arr
        self.tensors.setflags(write=False)

    # -- payoffs ---------------------------------------------------------
    def _strategies(self, sigma):
        sigma = self.indexing.check(sigma)
        return self.indexing.split(sigma)

    def expected_payoff(self, sigma, n: int) -> float:
        """Expected payoff of agent ``n`` under the mixed profile ``sigma``."""
        t = self.tensors[n]
        for s in reversed(self._strategies(sigma)):
            t = t @ s
        return float(t)

    def payoffs(self, sigma):
        return np.array([self.expected_payoff(sigma, n) for n in range(self.n_agents)])

    def _contract_except(self, n: int, keep: tuple, strats) -> np.ndarray:
        ops = [self.tensors[n], list(range(self.n_agents))]
        for k in range(self.n_agents):
            if k not in keep:
                ops += [strats[k], [k]]
        return np.einsum(*ops, list(keep))

    def deviation_vector(self, sigma):
        strats = self._strategies(sigma)
        return np.concatenate([self._contract_except(n, (n,), strats) for n in range(self.n_agents)])

    def deviation_jacobian(self, sigma):
        strats = self._strategies(sigma)
        m = self.dim
        jac = np.zeros((m, m))
        for n in range(self.n_agents):
            rows = self.indexing.slice(n)
            for n2 in range(self.n_agents):
                if n2 == n:
                    continue
                jac[rows, self.indexing.slice(n2)] = self._contract_except(n, (n, n2), strats)
        return jac

    def payoff_range(self, n):
        t = self.tensors[n]
        return float(t.max() - t.min())

    def pure_payoff(self, actions: Sequence[int]) -> np.ndarray:
        return self.tensors[(slice(None),) + tuple(int(a) for a in actions)].copy()

    def flat_payoffs(self) -> list:
        return [self.tensors[n].ravel().tolist() for n in range(self.n_agents)]


def expected_payoff(game: NormalFormGame, sigma, n: int) -> float:
    return game.expected_payoff(sigma, n)


def deviation_vector(game, sigma) -> np.ndarray:
    return game.deviation_vector(sigma)


def deviation_jacobian(game, sigma) -> np.ndarray:
    return game.deviation_jacobian(sigma)


def bimatrix(a, b) -> NormalFormGame:
    """Two-agent game from the row player's and column player's matrices."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 2:
        raise ValueError("bimatrix payoffs must be equal-shaped matrices")
    return NormalFormGame(a.shape, np.stack([a, b]))


def random_game(action_counts: Sequence[int], rng: np.random.Generator) -> NormalFormGame:
    """Game with i.i.d. uniform [0, 1] payoffs."""
    shape = (len(action_counts),) + tuple(action_counts)
    return NormalFormGame(action_counts, rng.random(shape))
