import json

import numpy as np
import pytest

from structnash.cli import main
from structnash.extensive import ExtensiveGame, example_tree
from structnash.generators import gen_ring, gen_road2stage_maid
from structnash.io import game_from_json, game_kind, game_to_json, profile_from_json, profile_to_json
from structnash.maid import MaidGame
from structnash.normal_form import random_game


def _views():
    rng = np.random.default_rng(0)
    return [random_game((2, 3), rng), gen_ring(4, seed=0), ExtensiveGame(example_tree()), MaidGame(gen_road2stage_maid(2))]


@pytest.mark.parametrize("view", _views(), ids=["normal", "graphical", "extensive", "maid"])
def test_game_round_trip(view):
    data = json.loads(json.dumps(game_to_json(view)))
    again = game_from_json(data)
    assert type(again) is type(view)
    sigma = view.random_profile(np.random.default_rng(1))
    assert np.allclose(again.deviation_vector(sigma), view.deviation_vector(sigma), atol=1e-14)


@pytest.mark.parametrize("view", _views(), ids=["normal", "graphical", "extensive", "maid"])
def test_profile_round_trip(view):
    sigma = view.random_profile(np.random.default_rng(2))
    rec = json.loads(json.dumps(profile_to_json(view, sigma)))
    assert np.allclose(profile_from_json(view, rec), sigma)
    keyed = {"agents": rec["agents"]}
    assert np.allclose(profile_from_json(view, keyed), sigma)
    assert np.allclose(profile_from_json(view, rec["vector"]), sigma)


def test_maid_profile_labels():
    g = MaidGame(gen_road2stage_maid(2))
    rec = profile_to_json(g, g.space.uniform_plan())
    assert "P1=house,B1=house" in rec["agents"][0]["strategy"]


def test_unknown_json():
    with pytest.raises(ValueError):
        game_kind({"foo": 1})


def _write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.mark.parametrize("family, size, solver", [("ring-random", 4, "cont"), ("road-rps", 2, "cont"),
                                                  ("road2stage-maid", 2, "cont"), ("sat-reduction", 3, "ipa+cont")])
def test_cli_generate_solve_verify(tmp_path, family, size, solver):
    game = tmp_path / "g.json"
    prof = tmp_path / "p.json"
    assert main(["generate", family, "--size", str(size), "--out", str(game)]) == 0
    assert main(["solve", str(game), "--solver", solver, "--out", str(prof)]) == 0
    rec = json.loads(prof.read_text())
    assert rec["regret"] <= 1e-8
    report = tmp_path / "r.json"
    assert main(["verify", str(game), str(prof), "--out", str(report)]) == 0
    assert json.loads(report.read_text())["equilibrium"] is True


def test_cli_solve_reports_stalled_path(tmp_path, capsys):
    game = tmp_path / "g.json"
    assert main(["generate", "sat-reduction", "--size", "3", "--out", str(game)]) == 0
    assert main(["solve", str(game), "--max-restarts", "1"]) == 1
    assert "stalled" in capsys.readouterr().err


def test_cli_verify_rejects_non_equilibrium(tmp_path):
    g = random_game((2, 2), np.random.default_rng(5))
    a = np.array([[1.0, 0.0], [0.0, 1.0]])
    from structnash.normal_form import bimatrix

    g = bimatrix(a, a)
    game = _write(tmp_path / "g.json", game_to_json(g))
    prof = _write(tmp_path / "p.json", [1.0, 0.0, 0.0, 1.0])
    assert main(["verify", game, prof, "--out", str(tmp_path / "r.json")]) == 1


def test_cli_solve_ipa(tmp_path, capsys):
    game = tmp_path / "g.json"
    main(["generate", "road-rps", "--size", "3", "--out", str(game)])
    assert main(["solve", str(game), "--solver", "ipa+cont"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["iterations"] == 0 and out["regret"] <= 1e-8


def test_cli_bench(tmp_path, capsys):
    spec = _write(tmp_path / "s.json", {"family": "ring-random", "sizes": [4], "trials": 2, "timing": False})
    jsonl = tmp_path / "d.jsonl"
    assert main(["bench", spec, "--jsonl", str(jsonl)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines[0].startswith("family,size,seed,trial")
    assert len(lines) == 3
    assert len(jsonl.read_text().splitlines()) == 2


def test_cli_requires_command():
    with pytest.raises(SystemExit):
        main([])
