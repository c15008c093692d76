"""Dataset ingestion, the selection filter, and the command-line surface."""

import json

import numpy as np
import pytest

from hiertsc import ClassifierSpec, load_dataset, save_dataset
from hiertsc.cli import main
from hiertsc.dataset import collinear_superclusters
from hiertsc.io import (
    DatasetFormatError,
    filter_datasets,
    scan_catalog,
)

from conftest import orthogonal_dataset, peek_dataset, separable_dataset


# -- loaders -------------------------------------------------------------------


def test_load_tsv(tmp_path):
    path = tmp_path / "toy.tsv"
    path.write_text("1\t0.1\t0.2\n2\t0.3\t0.4\n1\t0.5\t0.6\n")
    data = load_dataset(path)
    assert data.n_instances == 3
    assert data.series_length == 2
    assert list(data.labels) == [0, 1, 0]
    assert data.label_names == {0: "1", 1: "2"}


def test_load_comma_separated(tmp_path):
    path = tmp_path / "toy.csv"
    path.write_text("a,0.5,1.5\nb,2.5,3.5\n")
    data = load_dataset(path)
    assert data.label_names == {0: "a", 1: "b"}


def test_load_ts_format(tmp_path):
    path = tmp_path / "toy.ts"
    path.write_text(
        "# comment\n"
        "@problemName toy\n"
        "@classLabel true classA classB\n"
        "@data\n"
        "0.1,0.2,0.3:classA\n"
        "0.4,0.5,0.6:classB\n"
        "0.7,0.8,0.9:classA\n"
    )
    data = load_dataset(path)
    assert data.n_instances == 3
    assert data.series_length == 3
    assert data.label_names == {0: "classA", 1: "classB"}


def test_ragged_row_reports_line(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("1\t0.1\t0.2\t0.3\t0.4\n2\t0.1\t0.2\t0.3\n")
    with pytest.raises(DatasetFormatError) as err:
        load_dataset(path)
    assert "line 2" in str(err.value)


def test_non_finite_value_rejected(tmp_path):
    path = tmp_path / "bad.tsv"
    path.write_text("1\t0.1\tnan\n2\t0.3\t0.4\n")
    with pytest.raises(DatasetFormatError):
        load_dataset(path)


def test_missing_ts_label_rejected(tmp_path):
    path = tmp_path / "bad.ts"
    path.write_text("@data\n0.1,0.2:\n")
    with pytest.raises(DatasetFormatError):
        load_dataset(path)


def test_save_load_round_trip(tmp_path):
    data = separable_dataset(n_per_class=4, n_classes=3, seed=0)
    path = tmp_path / "round.tsv"
    save_dataset(data, path)
    again = load_dataset(path)
    assert np.array_equal(again.values, data.values)
    assert np.array_equal(again.labels, data.labels)


# -- catalog filter ----------------------------------------------------------------


def write_dataset_dir(root, name, data):
    # halve within each class so both parts keep every class, as UCR pairs do
    d = root / name
    d.mkdir(parents=True)
    train_mask = np.zeros(data.n_instances, dtype=bool)
    for cls in np.unique(data.labels):
        idx = np.flatnonzero(data.labels == cls)
        train_mask[idx[::2]] = True
    save_dataset(data.subset(np.flatnonzero(train_mask)), d / f"{name}_TRAIN.tsv")
    save_dataset(data.subset(np.flatnonzero(~train_mask)), d / f"{name}_TEST.tsv")


def test_filter_rule(tmp_path):
    root = tmp_path / "catalog"
    # interleave labels so both halves keep every class
    binary = peek_dataset([0, 1] * 12)
    easy3 = orthogonal_dataset(n_per_class=12, n_classes=3, seed=0)
    hard3 = separable_dataset(n_per_class=12, n_classes=3, spread=0.05, noise=2.0, seed=1)
    write_dataset_dir(root, "BinaryToy", binary)
    write_dataset_dir(root, "EasyToy", easy3)
    write_dataset_dir(root, "HardToy", hard3)
    (root / "Broken").mkdir()
    (root / "Broken" / "Broken_TRAIN.tsv").write_text("1\t0.1\n1\t0.2\n")
    (root / "Broken" / "Broken_TEST.tsv").write_text("1\t0.3\n1\t0.4\n")

    entries = scan_catalog(root)
    assert [e.name for e in entries] == ["BinaryToy", "Broken", "EasyToy", "HardToy"]
    specs = (ClassifierSpec(kind="linear"), ClassifierSpec(kind="linear", ridge_lambda=1.0))
    decisions = {d.name: d for d in filter_datasets(entries, specs)}

    assert not decisions["BinaryToy"].kept  # two classes only
    assert not decisions["EasyToy"].kept  # near-ceiling for both classifiers
    assert decisions["HardToy"].kept
    assert not decisions["Broken"].kept
    assert "unusable" in decisions["Broken"].reason or "unreadable" in decisions["Broken"].reason


def test_filter_keeps_dataset_hard_for_one_classifier(tmp_path):
    # excluded only when BOTH classifiers are near ceiling
    root = tmp_path / "catalog"
    easy3 = orthogonal_dataset(n_per_class=12, n_classes=3, seed=0)
    write_dataset_dir(root, "OneSided", easy3)
    specs = (ClassifierSpec(kind="linear"), ClassifierSpec(kind="test-const-min"))
    decisions = filter_datasets(scan_catalog(root), specs)
    assert decisions[0].kept


# -- CLI ----------------------------------------------------------------------------


def write_synth(tmp_path, n_per_class=12):
    data = collinear_superclusters(n_per_class=n_per_class, seed=0)
    path = tmp_path / "synth.tsv"
    save_dataset(data, path)
    return path


def test_cli_trees_counts(capsys):
    assert main(["trees", "--classes", "6"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["distinct_trees"] == 945
    assert doc["diagnostics"]["one_sided_recurrence"] == 885


def test_cli_trees_rejects_bad_classes(capsys):
    assert main(["trees", "--classes", "1"]) == 2
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["exit_code"] == 2


def test_cli_bench_chain(capsys):
    assert main(["bench", "--tree", "chain", "--classes", "4", "--instances", "96"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["exact_datapoints_processed"] == 950
    assert doc["mean_depth"] == pytest.approx(2.25)
    assert doc["diagnostics"]["chain_closed_form_disagrees"] is True


def test_cli_bench_balanced(capsys):
    assert main(["bench", "--tree", "balanced", "--classes", "4", "--instances", "96"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["exact_datapoints_processed"] == 576.0
    assert doc["mean_depth"] == 2.0


def test_cli_cv_reproducible_bytes(tmp_path, capsys):
    data_path = write_synth(tmp_path)
    args = [
        "cv",
        "--mode",
        "nested",
        "--data",
        str(data_path),
        "--splitter",
        "potr",
        "--iters",
        "2",
        "--seed",
        "0",
    ]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    capsys.readouterr()
    report_a = (tmp_path / "a" / "report.json").read_bytes()
    report_b = (tmp_path / "b" / "report.json").read_bytes()
    assert report_a == report_b
    folds_a = (tmp_path / "a" / "folds.csv").read_text()
    assert folds_a == (tmp_path / "b" / "folds.csv").read_text()
    assert folds_a.count("\n") == 6  # header + five folds


def test_cli_flat_mode_runs(tmp_path, capsys):
    data_path = write_synth(tmp_path)
    out = tmp_path / "flat"
    code = main(
        ["cv", "--mode", "flat", "--data", str(data_path), "--iters", "2", "--out", str(out)]
    )
    assert code == 0
    doc = json.loads((out / "report.json").read_text())
    assert doc["scheme"] == "flat"
    assert doc["n_inner"] is None


def test_cli_fit_predict_round_trip(tmp_path, capsys):
    data_path = write_synth(tmp_path)
    out = tmp_path / "fitout"
    assert main(["fit", "--data", str(data_path), "--iters", "2", "--out", str(out)]) == 0
    fit_doc = json.loads(capsys.readouterr().out)
    assert (out / "model.json").exists()
    assert main(
        [
            "predict",
            "--model",
            str(out / "model.json"),
            "--data",
            str(data_path),
            "--out",
            str(out),
        ]
    ) == 0
    pred_doc = json.loads(capsys.readouterr().out)
    assert pred_doc["n_instances"] == 48
    assert pred_doc["f1_macro"] > 0.9
    lines = (out / "predictions.csv").read_text().strip().splitlines()
    assert lines[0] == "index,predicted_id,predicted,depth"
    assert len(lines) == 49


def test_cli_analyze(tmp_path, capsys):
    data_path = write_synth(tmp_path)
    out_a = tmp_path / "r1"
    out_b = tmp_path / "r2"
    main(["cv", "--mode", "nested", "--data", str(data_path), "--iters", "2", "--out", str(out_a)])
    main(
        [
            "cv",
            "--mode",
            "nested",
            "--data",
            str(data_path),
            "--splitter",
            "lsoo",
            "--iters",
            "2",
            "--out",
            str(out_b),
        ]
    )
    capsys.readouterr()
    out = tmp_path / "analysis"
    code = main(
        [
            "analyze",
            "--reports",
            str(out_a / "report.json"),
            str(out_b / "report.json"),
            "--out",
            str(out),
        ]
    )
    assert code == 0
    assert (out / "features.csv").exists()
    assert (out / "correlations.csv").exists()
    assert (out / "correlations.json").exists()
    assert (out / "improvements_by_iteration.csv").exists()
    assert (out / "improvements_by_class_count.csv").exists()
    corr = (out / "correlations.csv").read_text().splitlines()
    assert corr[0] == "scheme,classifier_kind,splitter,feature,r,p"
    # the lsoo group's class-balance cell is blank (constant feature)
    lsoo_rows = [l for l in corr if ",lsoo,class_balance," in l]
    assert lsoo_rows and lsoo_rows[0].endswith(",,")


def test_cli_missing_data_exits_3(tmp_path, capsys):
    code = main(["cv", "--data", str(tmp_path / "nope.tsv")])
    assert code == 3
    err = json.loads(capsys.readouterr().err)
    assert err["error"]["exit_code"] == 3


def test_cli_env_var_data_dir(tmp_path, capsys, monkeypatch):
    data_path = write_synth(tmp_path)
    monkeypatch.setenv("HIERTSC_DATA", str(tmp_path))
    assert main(["trees", "--classes", "3"]) == 0  # sanity: env var not required
    code = main(
        ["cv", "--data", "synth.tsv", "--iters", "1", "--out", str(tmp_path / "env")]
    )
    assert code == 0


def test_cli_filter(tmp_path, capsys):
    root = tmp_path / "catalog"
    hard3 = separable_dataset(n_per_class=12, n_classes=3, spread=0.05, noise=2.0, seed=1)
    write_dataset_dir(root, "HardToy", hard3)
    out = tmp_path / "fout"
    code = main(["filter", "--data-root", str(root), "--out", str(out)])
    assert code == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["total"] == 1
    decisions = json.loads((out / "filter.json").read_text())
    assert decisions[0]["name"] == "HardToy"
