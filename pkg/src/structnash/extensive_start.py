"""Pure starting point of the bonus-perturbed sequence-form game.

With large distinct bonuses on terminal sequences every agent has a dominant
pure plan, found bottom-up: at each information set the owner keeps the
action whose subtree collects the most bonus.  The plan is then clipped into
the epsilon-bounded polytope and the bonus adjusted once so that the path
equation holds exactly.
"""

from __future__ import annotations

from typing import Optional

import numpy as np

from .continuation import PathState, wobble
from .sequence_form import SequenceFormSpace, SequenceFormView


def bonus_choices(space: SequenceFormSpace, b: np.ndarray) -> list:
    """Action favoured at every information set under bonuses alone."""
    out = []
    for n in range(space.n_agents):
        _, _, choice = space.best_response(b[space.indexing.slice(n)], n, epsilon=0.0)
        out.append(choice)
    return out


def perturbed_pure_start(space: SequenceFormSpace, b: np.ndarray) -> np.ndarray:
    """Epsilon-clipped dominant plan of the game with bonus ``b``.

    Parameters
    ----------
    space : SequenceFormSpace
    b : ndarray
        Bonus per terminal sequence; entries should be distinct.

    Returns
    -------
    ndarray
        Plan with every coordinate at least ``space.epsilon``.
    """
    b = space.indexing.check(np.asarray(b, dtype=float))
    behavior = []
    for n, choice in enumerate(bonus_choices(space, b)):
        tp = space.agents[n]
        beh = []
        for i, iset in enumerate(tp.infosets):
            e = np.zeros(len(iset.actions))
            e[choice[i]] = 1.0
            beh.append(e)
        behavior.append(beh)
    plan = space.behavior_to_plan(behavior)
    return space.retract(plan)[0]


def random_bonus(space: SequenceFormSpace, rng: np.random.Generator) -> np.ndarray:
    """Distinct uniform bonuses, redrawn on the (measure-zero) event of a tie."""
    while True:
        b = rng.random(space.total_dim)
        if np.unique(b).size == b.size:
            return b


def _consistent(view: SequenceFormView, sigma, b) -> np.ndarray:
    """Per agent: does the epsilon best response to ``V + b`` keep the bonus choices?"""
    space = view.space
    v = view.deviation_vector(sigma) + b
    base = bonus_choices(space, b)
    ok = np.ones(space.n_agents, bool)
    for n in range(space.n_agents):
        sl = space.indexing.slice(n)
        _, _, ch = space.best_response(v[sl], n)
        ok[n] = ch == base[n]
    return ok


def initial_state_sequence(view: SequenceFormView, seed=None, bonus: Optional[np.ndarray] = None, max_doublings: int = 60) -> PathState:
    """Path start at ``lam = 1`` for a sequence-form game.

    The bonus of each agent is doubled until its epsilon best response
    against the start plan makes the same choices as the bonus alone.
    """
    space = view.space
    if bonus is None:
        b = random_bonus(space, np.random.default_rng(seed))
        for n in range(space.n_agents):
            b[space.indexing.slice(n)] *= 2.0 * (view.payoff_range(n) + 1e-3)
    else:
        b = space.indexing.check(np.asarray(bonus, dtype=float)).copy()
    for _ in range(max_doublings):
        sigma = perturbed_pure_start(space, b)
        ok = _consistent(view, sigma, b)
        if ok.all():
            break
        for n in np.nonzero(~ok)[0]:
            b[space.indexing.slice(int(n))] *= 2.0
    else:
        raise RuntimeError("bonus never dominated the payoffs")
    w = view.deviation_vector(sigma) + b + sigma
    state = PathState(w=w, lam=1.0, b=b, signature=view.retract(w)[1])
    return wobble(view, state)
