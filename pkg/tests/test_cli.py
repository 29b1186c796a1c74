"""Command-line client behavior and exit codes."""
import json
from pathlib import Path

import pytest

from corridorsim.cli import main

RUN_CONFIG = {
    "scenario": {"network": "one_intersection", "x_a": 1.0, "d": 16.0,
                 "inflow_vph": 1000.0, "seed": 0, "horizon_steps": 240},
    "controller": "model_based",
    "w": 10.0,
}


def write_config(tmp_path, data, name="config.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def test_run_writes_outputs_and_exits_zero(tmp_path):
    config = write_config(tmp_path, RUN_CONFIG)
    out = tmp_path / "out"
    assert main(["run", "--config", config, "--out", str(out)]) == 0
    assert (out / "episode_seed0.csv").exists()
    assert (out / "time_space_seed0.csv").exists()
    assert (out / "metrics_seed0.json").exists()
    metrics = json.loads((out / "metrics.json").read_text())
    assert metrics["0"]["complete"]


def test_run_same_config_twice_is_byte_identical(tmp_path):
    config = write_config(tmp_path, RUN_CONFIG)
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    assert main(["run", "--config", config, "--out", str(out_a)]) == 0
    assert main(["run", "--config", config, "--out", str(out_b)]) == 0
    for name in ("episode_seed0.csv", "time_space_seed0.csv", "metrics.json"):
        assert (out_a / name).read_bytes() == (out_b / name).read_bytes()


def test_missing_config_exits_2(tmp_path):
    assert main(["run", "--config", str(tmp_path / "nope.json"),
                 "--out", str(tmp_path / "out")]) == 2


def test_malformed_config_exits_2(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text("{not json")
    assert main(["run", "--config", str(path),
                 "--out", str(tmp_path / "out")]) == 2


def test_policy_without_checkpoint_exits_2(tmp_path):
    config = write_config(tmp_path, {**RUN_CONFIG, "controller": "policy"})
    assert main(["run", "--config", config,
                 "--out", str(tmp_path / "out")]) == 2


def test_infeasible_scenario_exits_3(tmp_path):
    bad = {**RUN_CONFIG,
           "scenario": {**RUN_CONFIG["scenario"], "x_a": -30.0}}
    config = write_config(tmp_path, bad)
    assert main(["run", "--config", config,
                 "--out", str(tmp_path / "out")]) == 3


def test_invalid_controller_exits_2(tmp_path):
    config = write_config(tmp_path, {**RUN_CONFIG, "controller": "bogus"})
    assert main(["run", "--config", config,
                 "--out", str(tmp_path / "out")]) == 2


SWEEP_CONFIG = {
    "network": "one_intersection",
    "x_a_values": [1.0, 30.0],
    "d_values": [8.5, 16.0],
    "controllers": ["model_based", "idm_baseline"],
    "seeds": [0],
    "horizon_steps": 240,
    "diff_metrics": ["t_ev"],
}


def test_sweep_writes_grids_and_cells(tmp_path):
    config = write_config(tmp_path, SWEEP_CONFIG)
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", config, "--out", str(out)]) == 0
    cells = sorted(p.name for p in (out / "cells").glob("*.json"))
    assert len(cells) == 8
    assert (out / "sweep_model_based.json").exists()
    assert (out / "heatmap_model_based_t_ev.csv").exists()
    assert (out / "diff_model_based_vs_idm_baseline_t_ev.csv").exists()
    result = json.loads((out / "sweep_model_based.json").read_text())
    assert len(result["cells"]) == 4


def test_sweep_resume_completes_remaining_cells_only(tmp_path):
    config = write_config(tmp_path, SWEEP_CONFIG)
    out = tmp_path / "sweep"
    assert main(["sweep", "--config", config, "--out", str(out)]) == 0
    cell_files = sorted((out / "cells").glob("*.json"))
    kept_payload = {p: p.read_bytes() for p in cell_files}
    removed = cell_files[0]
    removed_content = removed.read_bytes()
    removed.unlink()
    stamps = {p: p.stat().st_mtime_ns for p in cell_files if p != removed}

    assert main(["sweep", "--config", config, "--out", str(out)]) == 0
    for p, stamp in stamps.items():
        assert p.stat().st_mtime_ns == stamp, "finished cell was rerun"
        assert p.read_bytes() == kept_payload[p]
    assert removed.exists()
    assert removed.read_bytes() == removed_content  # deterministic redo


def test_train_writes_checkpoint_and_curve(tmp_path):
    config = write_config(tmp_path, {
        "episodes": 4, "batch_episodes": 2, "horizon_steps": 60,
        "hidden": [8, 8], "eval_episodes": 1, "seed": 3})
    out = tmp_path / "train"
    assert main(["train", "--config", config, "--out", str(out)]) == 0
    checkpoint = json.loads((out / "checkpoint.json").read_text())
    assert checkpoint["hidden"] == [8, 8]
    curve = (out / "learning_curve.csv").read_text().splitlines()
    assert curve[0] == "iteration,mean_return,ems_travel_time,cav_travel_time"
    assert len(curve) == 3


def test_eval_uses_checkpoint(tmp_path):
    train_config = write_config(tmp_path, {
        "episodes": 0, "hidden": [8, 8]}, name="train.json")
    train_out = tmp_path / "train"
    assert main(["train", "--config", train_config, "--out",
                 str(train_out)]) == 0
    eval_config = write_config(tmp_path, {
        "network": "one_intersection", "x_a_values": [1.0],
        "d_values": [8.5], "horizon_steps": 240}, name="eval.json")
    out = tmp_path / "eval"
    assert main(["eval", "--config", eval_config, "--out", str(out),
                 "--checkpoint", str(train_out / "checkpoint.json")]) == 0
    result = json.loads((out / "eval_policy.json").read_text())
    assert len(result["cells"]) == 1


def test_eval_without_checkpoint_exits_2(tmp_path):
    eval_config = write_config(tmp_path, {
        "network": "one_intersection", "x_a_values": [1.0],
        "d_values": [8.5]})
    assert main(["eval", "--config", eval_config,
                 "--out", str(tmp_path / "out")]) == 2
