import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, strategies as st

from structnash import kernels
from structnash._jit import backend_name
from structnash.generators import gen_ring
from structnash.strategy import AgentIndexing


@given(st.lists(st.integers(1, 6), min_size=1, max_size=6), st.integers(0, 2**31), st.sampled_from([0.0, 1e-4]))
def test_project_simplices_flavours_agree(sizes, seed, lower):
    idx = AgentIndexing(tuple(sizes))
    w = np.random.default_rng(seed).standard_normal(idx.total_dim) * 3
    a = kernels.project_simplices_loop(w, idx.offsets, idx.lengths, lower)
    b = kernels.project_simplices_numpy(w, idx.offsets, idx.lengths, lower)
    assert np.allclose(a, b, atol=1e-13)


@pytest.mark.parametrize("n", [3, 4, 7])
def test_family_contract_flavours_agree(n, rng):
    g = gen_ring(n, seed=n)
    sigma = g.random_profile(rng)
    for a in range(n):
        args = (g.tables[a].ravel(), g._cards[a], g._parent_probs(sigma, a), g._poffs[a])
        x = kernels.family_contract_loop(*args)
        y = kernels.family_contract_numpy(*args)
        for p, q in zip(x, y):
            assert np.allclose(p, q, atol=1e-13)


@given(st.integers(1, 40), st.integers(2, 4), st.integers(0, 2**31))
def test_leaf_accumulate_flavours_agree(n_leaves, n_agents, seed):
    r = np.random.default_rng(seed)
    m = 3 * n_agents
    seq = np.stack([r.integers(3 * k, 3 * k + 3, size=n_leaves) for k in range(n_agents)], axis=1)
    coef = r.random(n_leaves)
    pay = r.random((n_leaves, n_agents))
    sigma = r.random(m)
    v1, j1 = kernels.leaf_accumulate_loop(seq, coef, pay, sigma)
    v2, j2 = kernels.leaf_accumulate_numpy(seq, coef, pay, sigma)
    assert np.allclose(v1, v2, atol=1e-12)
    assert np.allclose(j1, j2, atol=1e-12)


@pytest.mark.parametrize("flag, expected", [("1", "numpy"), ("0", "numba")])
def test_environment_flag_selects_backend(flag, expected):
    env = dict(os.environ, STRUCTNASH_DISABLE_NUMBA=flag)
    code = "from structnash._jit import backend_name; print(backend_name())"
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == expected


def test_solver_runs_on_numpy_backend():
    env = dict(os.environ, STRUCTNASH_DISABLE_NUMBA="1")
    code = (
        "from structnash.generators import gen_ring\n"
        "from structnash.continuation import solve_continuation\n"
        "from structnash.kernels import project_simplices, project_simplices_numpy\n"
        "assert project_simplices is project_simplices_numpy\n"
        "g = gen_ring(4, seed=1)\n"
        "r = solve_continuation(g)\n"
        "print(float(g.regret(r.equilibria[0].profile).max()))\n"
    )
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert float(out.stdout.strip()) <= 1e-8


def test_backend_name_is_known():
    assert backend_name() in ("numba", "numpy")
