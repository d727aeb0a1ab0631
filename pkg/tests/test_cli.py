"""
Tests for the survkan command-line interface and its exit codes.
"""

import json
import os

import pytest

from src.cli import main
from src.config import EXIT_CODES

SMALL_CONFIG = {"steps": 40, "hidden": [], "G": 3, "prune_threshold": 0.01, "learning_rate": 0.05}


@pytest.fixture
def synthetic_dir(tmp_path):
    out = tmp_path / "data"
    code = main(["generate", "--formula", "linear", "--beta", "1.5,-1", "--noise-features", "1",
                 "--n-train", "300", "--n-test", "100", "--seed", "4", "--out", str(out)])
    assert code == EXIT_CODES["ok"]
    return out


@pytest.fixture
def trained_run(tmp_path, synthetic_dir):
    config = tmp_path / "config.json"
    config.write_text(json.dumps(SMALL_CONFIG))
    run = tmp_path / "run"
    code = main(["train", "--data", str(synthetic_dir), "--config", str(config), "--out", str(run), "--quiet"])
    assert code == EXIT_CODES["ok"]
    return run


def test_generate_writes_requested_rows(synthetic_dir):
    with open(synthetic_dir / "train.csv") as handle:
        assert sum(1 for _ in handle) == 301
    with open(synthetic_dir / "test.csv") as handle:
        assert sum(1 for _ in handle) == 101
    meta = json.loads((synthetic_dir / "meta.json").read_text())
    assert [c["name"] for c in meta["columns"]] == ["x1", "x2", "x3"]


def test_generate_is_reproducible(tmp_path):
    args = ["generate", "--formula", "shallow", "--n-train", "200", "--n-test", "50", "--seed", "9"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    for name in ("train.csv", "test.csv", "meta.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_bad_expression_is_a_usage_error(tmp_path, capsys):
    out = tmp_path / "bad"
    code = main(["generate", "--formula", "custom:x1+bad(", "--out", str(out)])
    assert code == EXIT_CODES["usage"]
    assert not out.exists() or not os.listdir(out)
    assert "❌" in capsys.readouterr().err


def test_unknown_command_is_a_usage_error():
    assert main(["fly"]) == EXIT_CODES["usage"]


def test_symbolic_before_train(tmp_path, synthetic_dir, capsys):
    code = main(["symbolic", "--data", str(synthetic_dir), "--out", str(tmp_path / "empty"), "--quiet"])
    assert code == EXIT_CODES["usage"]
    assert "survkan train" in capsys.readouterr().err


def test_missing_data_file(tmp_path):
    code = main(["train", "--train", str(tmp_path / "nowhere.csv"), "--out", str(tmp_path / "run"), "--quiet"])
    assert code == EXIT_CODES["data"]


def test_invalid_config_is_a_usage_error(tmp_path, synthetic_dir):
    config = tmp_path / "bad.json"
    config.write_text(json.dumps({"steps": 0}))
    code = main(["train", "--data", str(synthetic_dir), "--config", str(config), "--out", str(tmp_path / "run")])
    assert code == EXIT_CODES["usage"]


def test_schema_error_is_a_data_error(tmp_path):
    path = tmp_path / "raw.csv"
    path.write_text("x1,duration,event\n0.5,1.0,1\n0.2,-3.0,0\n")
    code = main(["train", "--train", str(path), "--out", str(tmp_path / "run"), "--quiet"])
    assert code == EXIT_CODES["data"]


def test_train_writes_stage_models(trained_run):
    for name in ("model.json", "model_trained.json", "model_pruned.json", "history.csv", "config.json"):
        assert (trained_run / name).exists()


def test_symbolic_then_evaluate_is_deterministic(trained_run, synthetic_dir):
    data = ["--data", str(synthetic_dir), "--out", str(trained_run), "--quiet"]
    assert main(["symbolic", "--finetune-steps", "5"] + data) == 0
    assert (trained_run / "formula.txt").read_text().strip()

    assert main(["evaluate", "--bootstrap", "30", "--seed", "2"] + data) == 0
    first = json.loads((trained_run / "report.json").read_text())
    assert main(["evaluate", "--bootstrap", "30", "--seed", "2"] + data) == 0
    second = json.loads((trained_run / "report.json").read_text())
    assert first["stages"] == second["stages"]
    assert {"coxph", "true_formula", "trained", "pruned", "symbolic"} <= set(first["stages"])
    assert first["formula"] == (trained_run / "formula.txt").read_text().strip()
