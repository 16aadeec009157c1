import numpy as np
import pandas as pd
import pytest
from typer.testing import CliRunner

from config.experiment import dump_config
from main import app

runner = CliRunner()


@pytest.fixture
def config_file(quick_config, tmp_path):
    return dump_config(quick_config, tmp_path / "quick.yaml")


def test_show_config(config_file):
    result = runner.invoke(app, ["show-config", str(config_file)])
    assert result.exit_code == 0
    assert "vbts" in result.output
    assert "K=3" in result.output


def test_bad_config_exits_with_two(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("horizon: 10\npolicies:\n  - policy: vbts\n    lambda: 2\n")
    result = runner.invoke(app, ["run", str(path)])
    assert result.exit_code == 2
    assert runner.invoke(app, ["run", str(tmp_path / "missing.yaml")]).exit_code == 2


def test_run_then_plot(config_file, tmp_path):
    out = tmp_path / "cli-run"
    result = runner.invoke(app, ["run", str(config_file), "--output-dir", str(out)])
    assert result.exit_code == 0, result.output
    assert (out / "summary.csv").exists()

    target = tmp_path / "again.svg"
    result = runner.invoke(app, ["plot", str(out / "summary.csv"), "--output", str(target)])
    assert result.exit_code == 0
    assert target.read_text().startswith("<?xml")


def test_plot_missing_summary(tmp_path):
    assert runner.invoke(app, ["plot", str(tmp_path / "none.csv")]).exit_code == 2


def test_ingest(tmp_path):
    rng = np.random.default_rng(0)
    labels = np.repeat([0, 1], 20)
    frame = pd.DataFrame({"x1": labels * 2.0 + rng.standard_normal(40), "x2": rng.standard_normal(40), "y": labels})
    csv = tmp_path / "toy.csv"
    frame.to_csv(csv, index=False)
    result = runner.invoke(app, ["ingest", str(csv), "--label-col", "y", "--folds", "4"])
    assert result.exit_code == 0, result.output
    assert csv.with_suffix(".npz").exists()
    assert "features: 2" in result.output

    targeted = runner.invoke(app, ["ingest", str(csv), "--label-col", "y", "--sparsity", "1", "-o", str(tmp_path / "one.npz")])
    assert targeted.exit_code == 0, targeted.output
    assert "reference sparsity: 1" in targeted.output

    bad = runner.invoke(app, ["ingest", str(csv), "--label-col", "missing"])
    assert bad.exit_code == 2
    assert "column=missing" in bad.output


def test_diagnose(config_file):
    result = runner.invoke(app, ["diagnose", str(config_file), "--rounds", "100"])
    assert result.exit_code == 0, result.output
    assert "phi_min" in result.output


def test_sweep(config_file):
    result = runner.invoke(app, ["sweep", str(config_file), "--param", "horizon", "--values", "5,8"])
    assert result.exit_code == 0, result.output
    assert "Sweep over horizon" in result.output


def test_mimic(tmp_path, monkeypatch):
    calls = {}

    def fake_generate(path, seed=0):
        calls["args"] = (path, seed)
        return path

    monkeypatch.setattr("main.generate_mimic", fake_generate)
    result = runner.invoke(app, ["mimic", str(tmp_path / "m.csv"), "--seed", "4"])
    assert result.exit_code == 0
    assert calls["args"][1] == 4
