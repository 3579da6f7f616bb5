import numpy as np
import pytest
from hypothesis import given, strategies as st

from structnash.graphical import GraphicalGame, flatten_to_normal_form

import oracles


def random_graphical(rng, n_max=5, d_max=3, p_max=3):
    n = int(rng.integers(1, n_max + 1))
    sizes = rng.integers(1, d_max + 1, size=n).tolist()
    parents = []
    for i in range(n):
        others = [j for j in range(n) if j != i]
        k = int(rng.integers(0, min(p_max, len(others)) + 1))
        parents.append(sorted(rng.choice(others, size=k, replace=False).tolist()) if k else [])
    tables = [rng.random((sizes[i],) + tuple(sizes[p] for p in parents[i])) for i in range(n)]
    return GraphicalGame(sizes, parents, tables)


@given(st.integers(0, 2**31))
def test_graphical_matches_flattened(seed):
    rng = np.random.default_rng(seed)
    g = random_graphical(rng)
    dense = flatten_to_normal_form(g)
    sigma = g.random_profile(rng)
    assert np.allclose(g.deviation_vector(sigma), dense.deviation_vector(sigma), atol=1e-12, rtol=0)
    assert np.allclose(g.deviation_jacobian(sigma), dense.deviation_jacobian(sigma), atol=1e-12, rtol=0)
    assert np.allclose(g.payoffs(sigma), dense.payoffs(sigma), atol=1e-12, rtol=0)


@pytest.mark.parametrize("seed", range(5))
def test_graphical_matches_enumeration(seed):
    rng = np.random.default_rng(seed)
    g = random_graphical(rng, n_max=4)
    sigma = g.random_profile(rng)
    sizes = g.indexing.sizes
    assert np.allclose(g.deviation_vector(sigma), oracles.deviation_vector(g.pure_payoff, sizes, sigma), atol=1e-12)
    assert np.allclose(g.deviation_jacobian(sigma), oracles.deviation_jacobian(g.pure_payoff, sizes, sigma), atol=1e-12)


@pytest.mark.parametrize("seed", range(5))
def test_jacobian_finite_differences(seed):
    rng = np.random.default_rng(seed)
    g = random_graphical(rng)
    sigma = g.random_profile(rng)
    fd = oracles.finite_difference(g.deviation_vector, sigma)
    t = oracles.tangent_projector(g.indexing.sizes)
    assert np.allclose(g.deviation_jacobian(sigma) @ t, fd @ t, atol=1e-5)


def test_op_count_respects_bound():
    rng = np.random.default_rng(0)
    for _ in range(10):
        g = random_graphical(rng)
        g.op_count = 0
        g.deviation_jacobian(g.random_profile(rng))
        assert g.op_count <= g.complexity_bound()


def test_flatten_cap():
    g = GraphicalGame([3] * 4, [[], [], [], []], [np.zeros(3)] * 4)
    with pytest.raises(ValueError):
        flatten_to_normal_form(g, cap=10)


@pytest.mark.parametrize(
    "parents, tables",
    [
        ([[0], []], [np.zeros((2, 2)), np.zeros(2)]),
        ([[1, 1], []], [np.zeros((2, 2, 2)), np.zeros(2)]),
        ([[2], []], [np.zeros((2, 2)), np.zeros(2)]),
        ([[1], []], [np.zeros(3), np.zeros(2)]),
    ],
)
def test_validation(parents, tables):
    with pytest.raises(ValueError):
        GraphicalGame([2, 2], parents, tables)


def test_undirected_requires_symmetry():
    with pytest.raises(ValueError):
        GraphicalGame.undirected([2, 2], [[1], []], [np.zeros((2, 2)), np.zeros(2)])


def test_affine_cells():
    # 0 and 2 both feed agent 1: mixing both makes the path non-affine
    g = GraphicalGame([2, 2, 2], [[], [0, 2], []], [np.zeros(2), np.zeros((2, 2, 2)), np.zeros(2)])
    _, sig_one = g.retract(np.array([0.6, 0.4, 1, 0, 1, 0]))
    _, sig_two = g.retract(np.array([0.6, 0.4, 1, 0, 0.6, 0.4]))
    assert g.is_affine_on(sig_one)
    assert not g.is_affine_on(sig_two)
