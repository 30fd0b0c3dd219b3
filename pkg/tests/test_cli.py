import json

import pytest

from conftest import build_maze, small_grid
from exermaze.cli import main, spearman_rank_correlation
from exermaze.grid import default_grid
from exermaze.maze import to_json


@pytest.fixture()
def small_grid_file(tmp_path):
    path = tmp_path / "grid.json"
    path.write_text(small_grid().to_json())
    return str(path)


def test_validate_grid_default_ok(capsys):
    assert main(["validate-grid", "default"]) == 0
    assert capsys.readouterr().out.strip() == "OK"


def test_validate_grid_reports_violations(tmp_path, capsys):
    doc = json.loads(default_grid().to_json())
    doc["rooms"][1]["pos"] = doc["rooms"][0]["pos"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc))
    assert main(["validate-grid", str(path)]) == 1
    out = capsys.readouterr().out
    assert "duplicate_position" in out


def test_render_prints_maze(tmp_path, capsys):
    maze = build_maze(default_grid(), [3, 0])
    path = tmp_path / "maze.json"
    path.write_text(to_json(maze))
    assert main(["render", str(path)]) == 0
    art = capsys.readouterr().out
    assert "S" in art and "E" in art and "#" in art


def test_render_missing_file_fails(capsys):
    assert main(["render", "/nonexistent/maze.json"]) == 2


def test_pretrain_zero_episodes(tmp_path, small_grid_file, capsys):
    ckpt = tmp_path / "agent.ckpt.json"
    metrics = tmp_path / "metrics.csv"
    code = main(
        [
            "pretrain",
            "--grid", small_grid_file,
            "--profile", "average",
            "--episodes", "0",
            "--seed", "3",
            "--out", str(ckpt),
            "--metrics", str(metrics),
            "--eval-mazes", "5",
        ]
    )
    assert code == 0
    assert ckpt.exists()
    assert metrics.read_text().strip() == "episode,rating,abs_error,epsilon,loss"
    assert "greedy mean |rating - 3|" in capsys.readouterr().out


def test_pretrain_same_seed_identical_metrics(tmp_path, small_grid_file):
    outputs = []
    for tag in ("a", "b"):
        ckpt = tmp_path / f"{tag}.ckpt.json"
        metrics = tmp_path / f"{tag}.csv"
        code = main(
            [
                "pretrain",
                "--grid", small_grid_file,
                "--profile", "average",
                "--episodes", "25",
                "--seed", "11",
                "--out", str(ckpt),
                "--metrics", str(metrics),
                "--eval-mazes", "3",
            ]
        )
        assert code == 0
        outputs.append(metrics.read_bytes())
    assert outputs[0] == outputs[1]


def test_pretrain_metrics_schema(tmp_path, small_grid_file):
    metrics = tmp_path / "metrics.csv"
    main(
        [
            "pretrain",
            "--grid", small_grid_file,
            "--profile", "average",
            "--episodes", "10",
            "--seed", "1",
            "--out", str(tmp_path / "c.ckpt.json"),
            "--metrics", str(metrics),
            "--eval-mazes", "2",
        ]
    )
    lines = metrics.read_text().strip().split("\n")
    assert lines[0] == "episode,rating,abs_error,epsilon,loss"
    assert len(lines) == 11
    first = lines[1].split(",")
    assert first[0] == "0"
    assert first[1] in {"1", "2", "3", "4", "5"}


def test_experiment_smoke(tmp_path, small_grid_file, capsys):
    ckpt = tmp_path / "agent.ckpt.json"
    main(
        [
            "pretrain",
            "--grid", small_grid_file,
            "--profile", "average",
            "--episodes", "40",
            "--seed", "5",
            "--out", str(ckpt),
            "--eval-mazes", "2",
        ]
    )
    capsys.readouterr()
    out_csv = tmp_path / "exp.csv"
    code = main(
        [
            "experiment",
            "--ckpt", str(ckpt),
            "--first-profile", "average",
            "--second-profile", "novice",
            "--ratings", "3",
            "--seed", "2",
            "--out", str(out_csv),
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "spearman(round, difficulty):" in out
    assert "rounds within |rating - 3| <= 1:" in out
    lines = out_csv.read_text().strip().split("\n")
    assert lines[0] == "round,rating,rooms,mean_effort,mean_steps,difficulty,rating_offset"
    assert len(lines) == 4


def test_experiment_profile_mismatch(tmp_path, small_grid_file, capsys):
    ckpt = tmp_path / "agent.ckpt.json"
    main(
        [
            "pretrain",
            "--grid", small_grid_file,
            "--profile", "average",
            "--episodes", "0",
            "--seed", "5",
            "--out", str(ckpt),
            "--eval-mazes", "2",
        ]
    )
    capsys.readouterr()
    code = main(
        [
            "experiment",
            "--ckpt", str(ckpt),
            "--first-profile", "athlete",
            "--second-profile", "novice",
            "--ratings", "2",
        ]
    )
    assert code == 2
    assert "pretrained on profile" in capsys.readouterr().err


def test_custom_profile_config(tmp_path, small_grid_file):
    profile_path = tmp_path / "custom.json"
    profile_path.write_text(
        json.dumps({"name": "tester", "e_cap": 20, "s_cap": 150, "beta": 0.5})
    )
    code = main(
        [
            "pretrain",
            "--grid", small_grid_file,
            "--profile", str(profile_path),
            "--episodes", "5",
            "--seed", "1",
            "--out", str(tmp_path / "d.ckpt.json"),
            "--eval-mazes", "2",
        ]
    )
    assert code == 0


def test_spearman_matches_scipy():
    scipy_stats = pytest.importorskip("scipy.stats")
    xs = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10]
    ys = [3.0, 1.0, 4.0, 4.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0]
    ours = spearman_rank_correlation(xs, ys)
    theirs = scipy_stats.spearmanr(xs, ys).statistic
    assert ours == pytest.approx(theirs, abs=1e-12)


def test_spearman_rejects_short_input():
    with pytest.raises(ValueError):
        spearman_rank_correlation([1], [2])
