"""Command-line interface contracts."""
import json

import numpy as np
import pytest
from click.testing import CliRunner

from mvdt.cli import main

from conftest import make_blobs_views


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def blob_csvs(tmp_path):
    data = make_blobs_views(n_per=10, k=3, n_views=2, seed=51)
    paths = []
    for i, view in enumerate(data.views):
        p = tmp_path / f"v{i}.csv"
        np.savetxt(p, view.points, delimiter=",")
        paths.append(str(p))
    lab = tmp_path / "labels.csv"
    np.savetxt(lab, data.labels[:, None], delimiter=",")
    return paths, str(lab)


def test_gen_helix(runner, tmp_path):
    out = tmp_path / "gen"
    result = runner.invoke(main, ["gen", "helix-a", "--n", "60",
                                  "--out", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "view1.csv").exists()
    assert (out / "view2.csv").exists()
    meta = json.loads((out / "meta.json").read_text())
    assert meta["generator"] == "helix-a"
    assert (out / "latent.csv").exists()
    manifest = json.loads((out / "manifest.json").read_text())
    assert manifest["command"] == "gen"
    for path in manifest["outputs"]:
        assert (tmp_path / path).exists() or __import__("os").path.exists(path)


def test_gen_missing_out_is_usage_error(runner):
    result = runner.invoke(main, ["gen", "helix-a"])
    assert result.exit_code == 2


def test_gen_unknown_generator(runner, tmp_path):
    result = runner.invoke(main, ["gen", "spiral", "--out", str(tmp_path)])
    assert result.exit_code == 2
    assert "helix-a" in result.output


def test_embed_deterministic(runner, blob_csvs, tmp_path):
    views, _ = blob_csvs
    args = ["embed", "--view", views[0], "--view", views[1],
            "--method", "mdt-rand", "--t", "3", "--k", "3", "--seed", "9"]
    r1 = runner.invoke(main, args + ["--out", str(tmp_path / "e1")])
    r2 = runner.invoke(main, args + ["--out", str(tmp_path / "e2")])
    assert r1.exit_code == 0, r1.output
    assert r2.exit_code == 0, r2.output
    a = (tmp_path / "e1" / "embedding.csv").read_bytes()
    b = (tmp_path / "e2" / "embedding.csv").read_bytes()
    assert a == b
    traj = json.loads((tmp_path / "e1" / "trajectory.json").read_text())
    assert traj["resolved_t"] == 3


def test_embed_comdiff_three_views_fails(runner, blob_csvs, tmp_path):
    views, _ = blob_csvs
    result = runner.invoke(main, [
        "embed", "--view", views[0], "--view", views[1], "--view", views[0],
        "--method", "comdiff", "--out", str(tmp_path / "e3"),
    ])
    assert result.exit_code == 1
    assert "two-view method" in result.output


def test_embed_resolved_t_recorded(runner, blob_csvs, tmp_path):
    views, _ = blob_csvs
    result = runner.invoke(main, [
        "embed", "--view", views[0], "--view", views[1],
        "--method", "mdt-rand", "--k", "3", "--out", str(tmp_path / "e4"),
    ])
    assert result.exit_code == 0, result.output
    traj = json.loads((tmp_path / "e4" / "trajectory.json").read_text())
    assert traj["resolved_t"] >= 1


def test_entropy_rows(runner, blob_csvs, tmp_path):
    views, _ = blob_csvs
    result = runner.invoke(main, [
        "entropy", "--view", views[0], "--view", views[1],
        "--t-max", "10", "--out", str(tmp_path / "ent"),
    ])
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "ent" / "entropy.csv").read_text().strip().split("\n")
    assert lines[0] == "t,entropy,is_elbow"
    assert len(lines) == 11
    assert sum(line.endswith("true") for line in lines[1:]) == 1


def test_learn_result_json(runner, blob_csvs, tmp_path):
    views, _ = blob_csvs
    result = runner.invoke(main, [
        "learn", "--view", views[0], "--view", views[1],
        "--strategy", "rand", "--t", "2", "--k", "3", "--seed", "3",
        "--out", str(tmp_path / "lr"),
    ])
    assert result.exit_code == 0, result.output
    payload = json.loads((tmp_path / "lr" / "result.json").read_text())
    assert payload["resolved_t"] == 2
    assert len(payload["trajectory"]["steps"]) == 2


def test_cluster_report(runner, blob_csvs, tmp_path):
    views, labels = blob_csvs
    result = runner.invoke(main, [
        "cluster", "--view", views[0], "--view", views[1],
        "--labels", labels, "--method", "ad", "--k", "3", "--runs", "2",
        "--out", str(tmp_path / "cl"),
    ])
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "cl" / "report.json").read_text())
    assert report["runs"] == 2
    per_run = (tmp_path / "cl" / "per_run_ami.csv").read_text().strip()
    assert len(per_run.split("\n")) == 3


def test_benchmark_prr_self_ratio(runner, blob_csvs, tmp_path):
    views, labels = blob_csvs
    result = runner.invoke(main, [
        "benchmark", "--view", views[0], "--view", views[1],
        "--labels", labels, "--method", "mdt-rand", "--k", "3",
        "--runs", "2", "--t", "2", "--out", str(tmp_path / "bm"),
    ])
    assert result.exit_code == 0, result.output
    report = json.loads((tmp_path / "bm" / "report.json").read_text())
    assert report["mdt-rand"]["prr"] == pytest.approx(1.0)
    table = (tmp_path / "bm" / "table.csv").read_text().split("\n")
    assert table[0] == "method,ami_mean,ami_std,prr,resolved_t"


def test_benchmark_deterministic(runner, blob_csvs, tmp_path):
    views, labels = blob_csvs
    args = ["benchmark", "--view", views[0], "--view", views[1],
            "--labels", labels, "--method", "mdt-rand", "--method", "ad",
            "--k", "3", "--runs", "2", "--t", "2", "--seed", "4"]
    r1 = runner.invoke(main, args + ["--out", str(tmp_path / "b1")])
    r2 = runner.invoke(main, args + ["--out", str(tmp_path / "b2")])
    assert r1.exit_code == 0, r1.output
    assert r2.exit_code == 0, r2.output
    a = (tmp_path / "b1" / "table.csv").read_bytes()
    b = (tmp_path / "b2" / "table.csv").read_bytes()
    assert a == b


def test_tree_row_count(runner, blob_csvs, tmp_path):
    views, labels = blob_csvs
    result = runner.invoke(main, [
        "tree", "--view", views[0], "--view", views[1], "--labels", labels,
        "--depth", "3", "--k", "3", "--out", str(tmp_path / "tr"),
    ])
    assert result.exit_code == 0, result.output
    lines = (tmp_path / "tr" / "tree.csv").read_text().strip().split("\n")
    # V=2: 2 + 4 + 8 = 14 trajectories plus header
    assert len(lines) == 15


def test_tree_guard(runner, blob_csvs, tmp_path):
    views, labels = blob_csvs
    result = runner.invoke(main, [
        "tree", "--view", views[0], "--view", views[1],
        "--depth", "30", "--k", "3", "--out", str(tmp_path / "tg"),
    ])
    assert result.exit_code == 1
    assert "reduce depth" in result.output


def test_config_file_merged_under_flags(runner, blob_csvs, tmp_path):
    views, _ = blob_csvs
    conf = tmp_path / "conf.json"
    conf.write_text(json.dumps({"t": 2, "k": 3}))
    result = runner.invoke(main, [
        "embed", "--view", views[0], "--view", views[1],
        "--method", "mdt-rand", "--config", str(conf),
        "--out", str(tmp_path / "cf"),
    ])
    assert result.exit_code == 0, result.output
    traj = json.loads((tmp_path / "cf" / "trajectory.json").read_text())
    assert traj["resolved_t"] == 2


def test_threads_flag_accepted(runner, blob_csvs, tmp_path):
    views, _ = blob_csvs
    result = runner.invoke(main, [
        "--threads", "4", "entropy", "--view", views[0], "--view", views[1],
        "--t-max", "5", "--out", str(tmp_path / "th"),
    ])
    assert result.exit_code == 0, result.output
