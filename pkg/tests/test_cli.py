"""End-to-end CLI behavior: workflows, exit codes, determinism."""

import json

import numpy as np
import pytest

from crclassify.cli import main
from crclassify.data import load_csv


@pytest.fixture()
def dataset_csv(tmp_path):
    path = tmp_path / "toy.csv"
    code = main(
        [
            "synth",
            "--classes", "4",
            "--n-per-class", "10",
            "--m", "16",
            "--dim", "3",
            "--sigma", "0.05",
            "--seed", "7",
            "--out", str(path),
            "--manifest",
        ]
    )
    assert code == 0
    return path


def test_synth_writes_loadable_csv_and_manifest(dataset_csv):
    ds = load_csv(dataset_csv)
    assert ds.sample_count == 40
    assert ds.feature_dim == 16
    manifest = json.loads(
        dataset_csv.with_suffix(".manifest.json").read_text()
    )
    assert manifest["sample_count"] == 40
    assert manifest["classes"] == {f"c{i}": 10 for i in range(4)}


def test_eval_writes_reports_and_plots(dataset_csv, tmp_path, capsys):
    outdir = tmp_path / "run"
    code = main(
        [
            "eval",
            "--data", str(dataset_csv),
            "--classifiers", "crc-rls,sa-crc",
            "--ridge-lambda", "0.01",
            "--k", "4",
            "--train-per-class", "6",
            "--trials", "2",
            "--seed", "3",
            "--delta-grid", "1e-5,1e-3",
            "--outdir", str(outdir),
        ]
    )
    assert code == 0
    report = json.loads((outdir / "report.json").read_text())
    assert report["kind"] == "evaluation"
    assert set(report["results"]) == {"crc-rls", "sa-crc"}
    timing = json.loads((outdir / "timing.json").read_text())
    assert timing["kind"] == "timing"
    assert (outdir / "sparsity_curves.csv").exists()
    table = capsys.readouterr().out
    assert "sa-crc" in table and "crc-rls" in table


def test_eval_reruns_are_byte_identical(dataset_csv, tmp_path):
    args = [
        "eval",
        "--data", str(dataset_csv),
        "--classifiers", "sa-crc",
        "--k", "4",
        "--train-per-class", "6",
        "--seed", "11",
    ]
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(args + ["--outdir", str(a)]) == 0
    assert main(args + ["--outdir", str(b)]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


def test_eval_config_file_with_flag_overrides(dataset_csv, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(
        json.dumps(
            {
                "dataset": str(dataset_csv),
                "classifiers": ["sa-crc"],
                "sparsity": 4,
                "per_class_train": 6,
                "trials": 2,
                "seed": 1,
            }
        )
    )
    outdir = tmp_path / "cfg"
    code = main(
        [
            "eval",
            "--config", str(config),
            "--trials", "1",  # explicit flag beats the config value
            "--seed", "1",
            "--outdir", str(outdir),
        ]
    )
    assert code == 0
    report = json.loads((outdir / "report.json").read_text())
    assert report["config"]["trials"] == 1
    assert report["config"]["sparsity"] == 4


def test_sweep_emits_recommendation(dataset_csv, tmp_path, capsys):
    outdir = tmp_path / "sweep"
    code = main(
        [
            "sweep",
            "--data", str(dataset_csv),
            "--train-per-class", "6",
            "--seed", "5",
            "--lambda-grid", "1e-3,1e-2",
            "--k-grid", "2,4",
            "--outdir", str(outdir),
        ]
    )
    assert code == 0
    report = json.loads((outdir / "sweep.json").read_text())
    assert report["kind"] == "sweep"
    assert {"ridge_lambda", "sparsity", "mean_accuracy"} <= set(
        report["recommended"]
    )
    assert (outdir / "sweep_tables.csv").exists()
    assert "recommended" in capsys.readouterr().out


def test_bench_runs_on_synthetic_data(capsys):
    code = main(
        [
            "bench",
            "--classes", "3",
            "--n-per-class", "8",
            "--m", "12",
            "--dim", "2",
            "--train-per-class", "5",
            "--k", "3",
            "--repetitions", "2",
            "--seed", "1",
        ]
    )
    assert code == 0
    out = capsys.readouterr().out
    assert "median" in out and "sa-crc" in out


def test_analyze_tie_prints_report_json(capsys):
    code = main(["analyze", "tie", "--m", "5", "--seed", "3"])
    assert code == 0
    report = json.loads(capsys.readouterr().out)
    assert report["fewer_atom_class"] == "single"
    assert report["atoms_to_match_residual"] == [2, 1]
    assert report["residual_gap"] < 1e-9


def test_analyze_curves_writes_plot_data(dataset_csv, tmp_path):
    outdir = tmp_path / "curves"
    code = main(
        [
            "analyze", "curves",
            "--data", str(dataset_csv),
            "--k", "4",
            "--train-per-class", "6",
            "--seed", "2",
            "--delta-grid", "1e-6,1e-4,1e-2",
            "--outdir", str(outdir),
        ]
    )
    assert code == 0
    assert (outdir / "sparsity_curves.csv").exists()
    assert (outdir / "coefficient_traces.csv").exists()


def test_fit_summarizes_and_saves_model(dataset_csv, tmp_path, capsys):
    out = tmp_path / "model.npz"
    code = main(
        [
            "fit",
            "--data", str(dataset_csv),
            "--ridge-lambda", "0.01",
            "--k", "4",
            "--out", str(out),
        ]
    )
    assert code == 0
    stored = np.load(out, allow_pickle=False)
    assert stored["projection"].shape == (40, 16)
    summary = json.loads(capsys.readouterr().out)
    assert summary["atom_count"] == 40
    assert summary["class_count"] == 4


def test_exit_codes(tmp_path, dataset_csv, capsys):
    # usage: eval without any dataset source
    assert main(["eval", "--seed", "1"]) == 1
    # usage: argparse-level failures (missing --seed, bad value) return 1
    with pytest.raises(SystemExit) as info:
        main(["eval", "--data", str(dataset_csv)])
    assert info.value.code == 1
    with pytest.raises(SystemExit) as info:
        main(["eval", "--data", str(dataset_csv), "--seed", "1", "--trials", "0"])
    assert info.value.code == 1
    # data error: nonexistent file
    assert main(["eval", "--data", str(tmp_path / "nope.csv"), "--seed", "1"]) == 2
    # data error: malformed CSV
    bad = tmp_path / "bad.csv"
    bad.write_text("label,f0\na,not_a_number\n")
    assert main(["eval", "--data", str(bad), "--seed", "1"]) == 2
    # numerical failure: tie geometry needs 3 ambient dimensions
    assert main(["analyze", "tie", "--m", "2", "--seed", "0"]) == 3
    capsys.readouterr()  # swallow the accumulated error prints


def test_version_flag(capsys):
    with pytest.raises(SystemExit) as info:
        main(["--version"])
    assert info.value.code == 0
    assert capsys.readouterr().out.strip() == "0.1.0"
