"""Random Bayesian networks shared by the inference tests."""

import numpy as np

from structnash.bayes import BayesNet, Factor


def random_network(rng, max_states=2**14, max_vars=10, max_parents=3):
    """DAG in id order with binary or ternary variables and Dirichlet CPDs.

    Returns the network and the ``(var, parents, table)`` list the brute-force
    oracle expects.
    """
    cards, parents, raw = [], [], []
    total = 1
    for v in range(max_vars):
        c = int(rng.integers(2, 4))
        if total * c > max_states:
            break
        total *= c
        k = int(rng.integers(0, min(v, max_parents) + 1))
        ps = sorted(rng.choice(v, size=k, replace=False).tolist()) if k else []
        shape = tuple(cards[p] for p in ps) + (c,)
        tab = rng.dirichlet(np.ones(c), size=int(np.prod(shape[:-1], dtype=int))).reshape(shape)
        cards.append(c)
        parents.append(ps)
        raw.append((v, ps, tab))
    cpds = [Factor(list(ps) + [v], [cards[p] for p in ps] + [cards[v]], tab) for v, ps, tab in raw]
    return BayesNet(cards, parents, cpds), raw
