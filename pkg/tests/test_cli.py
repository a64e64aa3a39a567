"""Command line interface: subcommand behavior and exit codes."""

import json

import numpy as np
import pytest

from kmahal.cli import main
from kmahal.clustering import FitResult
from kmahal.data import Dataset, read_dataset_csv, write_dataset_csv
from kmahal.harness import ExperimentConfig, config_to_json
from kmahal.datagen import MissingnessPlan, MixtureSpec


@pytest.fixture()
def complete_csv(tmp_path):
    rng = np.random.default_rng(21)
    values = np.vstack([rng.normal(0, 1, (15, 3)), rng.normal(6, 1, (15, 3))])
    labels = np.repeat([1, 2], 15)
    path = tmp_path / "data.csv"
    write_dataset_csv(Dataset(values=values, labels=labels), str(path))
    return path


def test_gen_writes_dataset_and_metadata(tmp_path, capsys):
    out = tmp_path / "mix.csv"
    meta = tmp_path / "mix.json"
    rc = main(
        [
            "gen",
            "--n-clusters", "2",
            "--n-coords", "2",
            "--n-rows", "30",
            "--target-overlap", "0.05",
            "--seed", "3",
            "--mc-samples", "4000",
            "--out", str(out),
            "--metadata", str(meta),
        ]
    )
    assert rc == 0
    assert "achieved overlap" in capsys.readouterr().out
    ds = read_dataset_csv(str(out))
    assert ds.n == 30 and ds.p == 2 and ds.complete
    assert set(ds.labels) == {1, 2}
    payload = json.loads(meta.read_text())
    assert abs(payload["achieved_overlap"] - 0.05) <= 0.1 * 0.05
    assert payload["seed"] == 3


def test_gen_requires_flags(capsys):
    rc = main(["gen", "--n-clusters", "2"])
    assert rc == 1
    assert capsys.readouterr().err.startswith("error:")


def test_inject_masks_requested_fraction(tmp_path, complete_csv):
    out = tmp_path / "masked.csv"
    rc = main(
        ["inject", "--data", str(complete_csv), "--coords", "1",
         "--d-percent", "20", "--seed", "4", "--out", str(out)]
    )
    assert rc == 0
    ds = read_dataset_csv(str(out))
    assert (~ds.mask[:, 0]).sum() == 6  # 20% of 30
    assert ds.mask[:, 1:].all()


def test_inject_shared_rows(tmp_path, complete_csv):
    out = tmp_path / "masked.csv"
    rc = main(
        ["inject", "--data", str(complete_csv), "--coords", "1", "--coords", "2",
         "--shared-rows", "--d-percent", "10", "--out", str(out)]
    )
    assert rc == 0
    ds = read_dataset_csv(str(out))
    assert np.array_equal(ds.mask[:, 0], ds.mask[:, 1])
    assert (~ds.mask[:, 0]).sum() == 3


def test_inject_rejects_out_of_range_coordinate(tmp_path, complete_csv, capsys):
    rc = main(
        ["inject", "--data", str(complete_csv), "--coords", "5",
         "--d-percent", "10", "--out", str(tmp_path / "x.csv")]
    )
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_fit_incomplete_data_writes_document(tmp_path, complete_csv):
    masked = tmp_path / "masked.csv"
    assert main(
        ["inject", "--data", str(complete_csv), "--coords", "2",
         "--d-percent", "20", "--out", str(masked)]
    ) == 0
    out = tmp_path / "fit.json"
    rc = main(
        ["fit", "--data", str(masked), "--algorithm", "kmahal", "--n-clusters", "2",
         "--restarts", "2", "--imputation", "knn", "--out", str(out)]
    )
    assert rc == 0
    result = FitResult.from_document(out.read_text())
    assert result.assignment.assignment.shape == (30,)
    assert np.isfinite(result.completed.values).all()
    assert result.completed.complete


def test_fit_defaults_to_bundled_iris(tmp_path):
    out = tmp_path / "fit.json"
    rc = main(["fit", "--algorithm", "kmeans", "--n-clusters", "3",
               "--restarts", "5", "--out", str(out)])
    assert rc == 0
    result = FitResult.from_document(out.read_text())
    assert result.assignment.assignment.shape == (150,)
    assert len(set(result.assignment.assignment)) == 3


def test_fit_missing_input_file(tmp_path, capsys):
    rc = main(["fit", "--data", str(tmp_path / "nope.csv"), "--n-clusters", "2",
               "--out", str(tmp_path / "fit.json")])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_run_then_summarize_pipeline(tmp_path, capsys):
    cfg = ExperimentConfig(
        dataset=MixtureSpec(2, 2, 40, 0.05, seed=3, mc_samples=4000),
        plans=(MissingnessPlan(coords=(1,), d_percent=15.0),),
        imputations=("mean",),
        algorithms=("kmeans", "kmahal"),
        replicates=2,
        restarts=2,
        base_seed=7,
    )
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(config_to_json(cfg))
    out_dir = tmp_path / "results"
    rc = main(["run", "--config", str(cfg_path), "--output-dir", str(out_dir),
               "--log-restarts"])
    assert rc == 0
    assert "0 failures" in capsys.readouterr().out
    produced = {p.name for p in out_dir.iterdir()}
    assert {"records.csv", "restarts.csv", "summary.csv", "metadata.json"} <= produced

    summary2 = tmp_path / "summary2.csv"
    rc = main(["summarize", "--records", str(out_dir / "records.csv"),
               "--out", str(summary2)])
    assert rc == 0
    assert summary2.read_text() == (out_dir / "summary.csv").read_text()


def test_run_rejects_unknown_config_fields(tmp_path, capsys):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text('{"dataset": "iris", "plans": [{"coords": [3], "d_percent": 10.0}], "bogus": 1}')
    rc = main(["run", "--config", str(cfg_path)])
    assert rc == 1
    assert "unknown config fields" in capsys.readouterr().err


def test_run_missing_config_file(tmp_path):
    assert main(["run", "--config", str(tmp_path / "none.json")]) == 1


def test_unexpected_failures_exit_2(tmp_path, monkeypatch, capsys):
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text('{"dataset": "iris", "plans": [{"coords": [3], "d_percent": 10.0}]}')

    def boom(*args, **kwargs):
        raise RuntimeError("worker crashed")

    monkeypatch.setattr("kmahal.cli.run_experiment", boom)
    rc = main(["run", "--config", str(cfg_path)])
    assert rc == 2
    assert "failed: RuntimeError" in capsys.readouterr().err


def test_unknown_subcommand_is_a_usage_error(capsys):
    assert main(["frobnicate"]) == 1
    assert "error:" in capsys.readouterr().err


def test_demo_fig1_writes_bundle(tmp_path, capsys):
    out_dir = tmp_path / "fig1"
    rc = main(["demo-fig1", "--output-dir", str(out_dir)])
    assert rc == 0
    assert "masked cells 3" in capsys.readouterr().out
    names = {p.name for p in out_dir.iterdir()}
    assert names == {
        "points_kmeans.csv",
        "points_unified_kmeans.csv",
        "points_kmahal.csv",
        "incomplete.csv",
    }
