import io

import numpy as np
import pytest

from structnash.bench import (
    CSV_COLUMNS,
    FAMILIES,
    BenchmarkSpec,
    fit_cubic,
    iteration_cost,
    iteration_table,
    make_game,
    run_benchmark,
    to_csv,
)


@pytest.mark.parametrize("family", FAMILIES)
def test_every_family_builds(family):
    g = make_game(family, 2 if family not in ("ring-random", "sat-reduction") else 3, seed=0)
    assert g.dim > 0


def test_spec_validation():
    with pytest.raises(ValueError):
        BenchmarkSpec("moon", [2])
    with pytest.raises(ValueError):
        BenchmarkSpec("ring-random", [2], solver="magic")
    with pytest.raises(ValueError):
        BenchmarkSpec("ring-random", [0])
    spec = BenchmarkSpec.from_json({"family": "ring-random", "size": 4, "seed": 2})
    assert spec.sizes == [4] and spec.seeds == [2]


def test_csv_layout_and_determinism():
    spec = BenchmarkSpec("ring-random", [4, 5], trials=2, timing=False)
    a, b = io.StringIO(), io.StringIO()
    run_benchmark(spec, csv_out=a)
    run_benchmark(spec, csv_out=b)
    assert a.getvalue() == b.getvalue()
    rows = a.getvalue().splitlines()
    assert rows[0].split(",") == CSV_COLUMNS
    assert len(rows) == 5
    assert all(r.split(",")[5] == "" for r in rows[1:])


def test_equilibria_found_is_cumulative():
    recs = run_benchmark(BenchmarkSpec("ring-random", [4], trials=4, timing=False))
    counts = [r["equilibria_found"] for r in recs]
    assert counts == sorted(counts) and counts[0] == 1


def test_failures_are_recorded_not_raised():
    recs = run_benchmark(BenchmarkSpec("road2stage-maid", [2], solver="ipa+cont", timing=False))
    assert recs[0]["status"].startswith("error:")
    assert "road2stage-maid,2,0,0,ipa+cont,,0,0,,0" in to_csv(recs)


def test_iteration_table():
    recs = run_benchmark(BenchmarkSpec("ring-random", [3, 4], trials=2))
    tab = iteration_table(recs)
    assert [t["size"] for t in tab] == [3, 4]
    assert all(t["wall_ms"] > 0 for t in tab)


def test_cubic_fit_recovers_a_cubic():
    m = np.arange(5, 30, dtype=float)
    coef, r2 = fit_cubic(m, 2e-6 * m**3 + 1e-4 * m + 0.01)
    assert r2 == pytest.approx(1.0)
    assert coef[0] == pytest.approx(2e-6)
    with pytest.raises(ValueError):
        fit_cubic([1, 2, 3], [1, 2, 3])


def test_iteration_cost_is_positive():
    assert iteration_cost(make_game("ring-random", 4), reps=2, batch=2) > 0
