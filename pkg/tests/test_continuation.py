import io
import json

import numpy as np
import pytest

from structnash.continuation import (
    PathState,
    TraceConfig,
    initial_state,
    newton_polish,
    residual,
    solve_continuation,
    trace,
    wobble,
)
from structnash.generators import gen_ring, gen_road
from structnash.continuation import jsonl_writer
from structnash.normal_form import bimatrix, random_game

import oracles


def _independent_regret(game, sigma):
    return oracles.regret(game.pure_payoff, game.indexing.sizes, sigma).max()


@pytest.mark.parametrize("sizes", [(2, 2), (3, 3), (2, 2, 2), (3, 2, 2), (2, 2, 2, 2)])
@pytest.mark.parametrize("seed", range(4))
def test_equilibria_have_zero_regret(sizes, seed):
    g = random_game(sizes, np.random.default_rng(seed))
    res = solve_continuation(g, TraceConfig(seed=seed))
    assert res.equilibria, res.status
    for rec in res.equilibria:
        assert _independent_regret(g, rec.profile) <= 1e-8


def test_start_satisfies_path_equation(rng):
    g = random_game((3, 2, 2), rng)
    st = initial_state(g, seed=4)
    assert st.lam == 1.0
    assert np.abs(residual(g, st.w, st.lam, st.b)).max() <= 1e-12
    sigma, _ = g.retract(st.w)
    # the start is the pure equilibrium picked out by the bonus
    assert set(np.unique(sigma)) <= {0.0, 1.0}


def test_custom_bonus_must_dominate():
    # matching pennies has no pure equilibrium for a tiny bonus to select
    a = np.array([[1.0, -1.0], [-1.0, 1.0]])
    g = bimatrix(a, -a)
    with pytest.raises(ValueError):
        initial_state(g, bonus=np.array([0.0, 1e-3, 0.0, 0.0]))


def test_trace_records_odd_number_of_crossings_on_coordination_game():
    a = np.array([[2.0, 0.0], [0.0, 1.0]])
    g = bimatrix(a, a)
    res = trace(g, initial_state(g, seed=0), TraceConfig(lambda_threshold=-1.0))
    assert len(res.equilibria) % 2 == 1
    for rec in res.equilibria:
        assert g.regret(rec.profile).max() <= 1e-8


def test_wobble_zeroes_residual(rng):
    g = random_game((2, 3), rng)
    w = rng.standard_normal(g.dim)
    st = wobble(g, PathState(w=w, lam=0.3, b=np.zeros(g.dim)))
    assert np.abs(residual(g, st.w, st.lam, st.b)).max() <= 1e-12
    with pytest.raises(ValueError):
        wobble(g, PathState(w=w, lam=0.0, b=np.zeros(g.dim)))


def test_newton_polish_never_worsens(rng):
    g = random_game((2, 2, 2), rng)
    st = initial_state(g, seed=1)
    noisy = PathState(w=st.w + 1e-4 * rng.standard_normal(g.dim), lam=st.lam, b=st.b)
    before = np.abs(residual(g, noisy.w, noisy.lam, noisy.b)).max()
    out, ok = newton_polish(g, noisy)
    after = np.abs(residual(g, out.w, out.lam, out.b)).max()
    assert after <= before
    assert ok


@pytest.mark.parametrize("maker", [lambda: gen_ring(6, seed=2), lambda: gen_road(3, "random", seed=1)])
def test_graphical_benchmarks_solve(maker):
    g = maker()
    res = solve_continuation(g, TraceConfig(seed=0))
    assert res.equilibria and res.restarts <= 10
    assert g.regret(res.equilibria[0].profile).max() <= 1e-8


def test_log_records_are_json(rng):
    g = random_game((2, 2), rng)
    buf = io.StringIO()
    trace(g, initial_state(g, seed=0), TraceConfig(max_equilibria=1), log=jsonl_writer(buf))
    lines = [json.loads(x) for x in buf.getvalue().splitlines()]
    assert lines
    assert all("event" in x for x in lines)


@pytest.mark.parametrize("kwargs", [{"lambda_threshold": 0.1}, {"cycle_mode": "loop"}, {"error_budget": 0.0}])
def test_config_validation(kwargs):
    with pytest.raises(ValueError):
        TraceConfig(**kwargs)


def test_same_seed_same_path(rng):
    g = random_game((3, 3, 2), rng)
    a = solve_continuation(g, TraceConfig(seed=7))
    b = solve_continuation(g, TraceConfig(seed=7))
    assert a.iterations == b.iterations
    assert np.array_equal(a.equilibria[0].profile, b.equilibria[0].profile)


def test_degenerate_game_stalls_quickly():
    from structnash.bench import make_game

    g = make_game("sat-reduction", 3, 0)
    res = trace(g, initial_state(g, seed=0), TraceConfig(max_equilibria=1, max_stalled_wobbles=3))
    assert res.status == "stalled"
    assert res.wobbles == 4
    assert res.steps < 1000
