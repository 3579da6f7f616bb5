import numpy as np
import pytest
from hypothesis import given, strategies as st

from structnash.lcp import PolymatrixGame, RayTermination, lemke, lemke_howson, solve_polymatrix
from structnash.normal_form import bimatrix

import oracles


@given(st.integers(2, 4), st.integers(2, 4), st.integers(0, 2**31))
def test_lemke_howson_returns_enumerated_equilibrium(m, n, seed):
    rng = np.random.default_rng(seed)
    a, b = rng.random((m, n)), rng.random((m, n))
    eqs = oracles.bimatrix_equilibria(a, b)
    g = bimatrix(a, b)
    for k in range(m + n):
        x, y = lemke_howson(a, b, k)
        sigma = np.concatenate([x, y])
        assert g.regret(sigma).max() <= 1e-10
        assert min(np.abs(sigma - e).max() for e in eqs) <= 1e-8


def test_lemke_howson_pivot_count_and_label_check():
    a = np.array([[3.0, 0.0], [0.0, 1.0]])
    x, y, piv = lemke_howson(a, a, 0, return_pivots=True)
    assert piv >= 1
    assert np.allclose(x, [1, 0]) and np.allclose(y, [1, 0])
    with pytest.raises(ValueError):
        lemke_howson(a, a, 4)


@given(st.integers(1, 6), st.integers(0, 2**31))
def test_lemke_solves_positive_definite_lcps(k, seed):
    rng = np.random.default_rng(seed)
    r = rng.standard_normal((k, k))
    M = r @ r.T + 0.1 * np.eye(k)
    q = rng.standard_normal(k)
    z = lemke(M, q)
    w = q + M @ z
    assert z.min() >= -1e-10 and w.min() >= -1e-10
    assert abs(z @ w) <= 1e-9


def test_lemke_ray_termination():
    # w = -1 + 0*z can never be made non-negative
    with pytest.raises(RayTermination):
        lemke(np.zeros((1, 1)), np.array([-1.0]))


def _random_polymatrix(rng, sizes, unary=False):
    m = sum(sizes)
    return PolymatrixGame(sizes, rng.random((m, m)), rng.random(m) if unary else None)


@pytest.mark.parametrize("sizes", [(2, 2), (3, 2), (2, 2, 2), (3, 3, 2, 2)])
@pytest.mark.parametrize("unary", [False, True])
def test_solve_polymatrix(sizes, unary, rng):
    for _ in range(5):
        g = _random_polymatrix(rng, sizes, unary)
        sigma = solve_polymatrix(g)
        pay = lambda acts: np.array([sum(g.block(n, k)[acts[n], acts[k]] for k in range(len(sizes)) if k != n)
                                     + g.unary[g.indexing.offsets[n] + acts[n]] for n in range(len(sizes))])
        assert oracles.regret(pay, sizes, sigma).max() <= 1e-9


def test_solve_polymatrix_with_start(rng):
    g = _random_polymatrix(rng, (2, 3, 2))
    sigma = solve_polymatrix(g, start=g.uniform_profile())
    assert g.regret(sigma).max() <= 1e-9


def test_polymatrix_views(rng):
    g = _random_polymatrix(rng, (2, 3), unary=True)
    sigma = g.random_profile(rng)
    assert np.allclose(g.deviation_jacobian(sigma), oracles.finite_difference(g.deviation_vector, sigma), atol=1e-7)
    assert np.all(g.blocks[:2, :2] == 0)
    with pytest.raises(ValueError):
        PolymatrixGame((2, 2), np.zeros((3, 3)))
