"""Dataset ingestion: delimited label-first rows and the '@data' text format.

Original label tokens are kept in a side map; class ids are densified to
0..|C|-1 in sorted token order (numeric when every token parses as a number).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .classifiers import ClassifierSpec, fit_classifier
from .dataset import DataValidationError, TimeSeriesDataset
from .evaluation import split_data
from .metrics import accuracy

ACCURACY_EXCLUSION_THRESHOLD = 0.995


class DatasetFormatError(ValueError):
    """Raised on malformed dataset files; carries the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"{message} (line {line})" if line is not None else message)


def _token_sort_key(token: str):
    try:
        return (0, float(token), token)
    except ValueError:
        return (1, 0.0, token)


def _densify(raw_labels: list[str], rows: list[list[float]]):
    names = sorted(set(raw_labels), key=_token_sort_key)
    to_id = {name: i for i, name in enumerate(names)}
    labels = np.asarray([to_id[t] for t in raw_labels], dtype=np.int64)
    values = np.asarray(rows, dtype=np.float64)
    return TimeSeriesDataset(values, labels, {i: n for n, i in to_id.items()})


def _parse_value(token: str, line_no: int) -> float:
    try:
        value = float(token)
    except ValueError:
        raise DatasetFormatError(f"cannot parse value '{token}'", line_no) from None
    if not np.isfinite(value):
        raise DatasetFormatError(f"non-finite value '{token}'", line_no)
    return value


def _split_row(line: str) -> list[str]:
    if "\t" in line:
        return line.split("\t")
    if "," in line:
        return line.split(",")
    return line.split()


def _load_delimited(lines: Iterable[str]) -> TimeSeriesDataset:
    raw_labels: list[str] = []
    rows: list[list[float]] = []
    width: int | None = None
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in _split_row(line) if p.strip() != ""]
        if len(parts) < 2:
            raise DatasetFormatError("row needs a label and at least one value", line_no)
        label, values = parts[0], parts[1:]
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise DatasetFormatError(
                f"ragged row: {len(values)} values where {width} expected", line_no
            )
        raw_labels.append(label)
        rows.append([_parse_value(v, line_no) for v in values])
    if not rows:
        raise DatasetFormatError("no data rows found")
    return _densify(raw_labels, rows)


def _load_ts_text(lines: Iterable[str]) -> TimeSeriesDataset:
    raw_labels: list[str] = []
    rows: list[list[float]] = []
    width: int | None = None
    in_data = False
    for line_no, line in enumerate(lines, start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("@"):
            if line.lower() == "@data":
                in_data = True
            continue
        if not in_data:
            raise DatasetFormatError("data row before the '@data' marker", line_no)
        segments = line.split(":")
        if len(segments) != 2:
            raise DatasetFormatError(
                "expected 'v1,v2,...:label' (univariate series only)", line_no
            )
        series_text, label = segments[0], segments[1].strip()
        if not label:
            raise DatasetFormatError("missing label after ':'", line_no)
        values = [
            _parse_value(v.strip(), line_no)
            for v in series_text.split(",")
            if v.strip() != ""
        ]
        if not values:
            raise DatasetFormatError("empty series", line_no)
        if width is None:
            width = len(values)
        elif len(values) != width:
            raise DatasetFormatError(
                f"ragged row: {len(values)} values where {width} expected", line_no
            )
        raw_labels.append(label)
        rows.append(values)
    if not rows:
        raise DatasetFormatError("no data rows found")
    return _densify(raw_labels, rows)


def load_dataset(path: str | Path) -> TimeSeriesDataset:
    """Load a labelled time-series file.

    Files whose suffix is ``.ts`` (or whose header starts with '@') use the
    text format with ``series:label`` rows after ``@data``; anything else is
    treated as delimited rows with the class label in the first column.
    """
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise DatasetFormatError(f"cannot read {path}: {exc}") from exc
    lines = text.splitlines()
    first_real = next((l.strip() for l in lines if l.strip()), "")
    try:
        if path.suffix.lower() == ".ts" or first_real.startswith("@"):
            return _load_ts_text(lines)
        return _load_delimited(lines)
    except DataValidationError as exc:
        raise DatasetFormatError(f"{path}: {exc}") from exc


def save_dataset(data: TimeSeriesDataset, path: str | Path) -> None:
    """Write tab-separated label-first rows; floats keep full precision so a
    reload reproduces values and labels exactly."""
    path = Path(path)
    names = data.label_names or {}
    with open(path, "w") as fh:
        for row, label in zip(data.values, data.labels):
            token = names.get(int(label), str(int(label)))
            fh.write("\t".join([token, *[repr(float(v)) for v in row]]) + "\n")


# -- dataset catalogs and the selection filter --------------------------------


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    train_path: Path
    test_path: Path


@dataclass(frozen=True)
class FilterDecision:
    name: str
    kept: bool
    reason: str
    n_classes: int | None = None
    accuracies: tuple[float, ...] | None = None


def scan_catalog(root: str | Path) -> list[CatalogEntry]:
    """Find <root>/<Name>/<Name>_TRAIN.* plus matching _TEST.* pairs."""
    root = Path(root)
    entries = []
    if not root.is_dir():
        return entries
    for child in sorted(root.iterdir()):
        if not child.is_dir():
            continue
        train = _find_part(child, "_TRAIN")
        test = _find_part(child, "_TEST")
        if train is not None and test is not None:
            entries.append(CatalogEntry(child.name, train, test))
    return entries


def _find_part(directory: Path, marker: str) -> Path | None:
    for candidate in sorted(directory.iterdir()):
        if candidate.is_file() and marker in candidate.stem:
            return candidate
    return None


def merge_datasets(a: TimeSeriesDataset, b: TimeSeriesDataset) -> TimeSeriesDataset:
    """Stack two datasets, reconciling class ids through their label tokens.

    Each loaded file densifies its own labels, so the same original token can
    map to different ids in different files; merging goes back to tokens.
    """
    if a.series_length != b.series_length:
        raise DataValidationError(
            f"series lengths differ: {a.series_length} vs {b.series_length}"
        )

    def tokens(ds: TimeSeriesDataset) -> list[str]:
        names = ds.label_names or {}
        return [names.get(int(l), str(int(l))) for l in ds.labels]

    raw = tokens(a) + tokens(b)
    names = sorted(set(raw), key=_token_sort_key)
    to_id = {name: i for i, name in enumerate(names)}
    labels = np.asarray([to_id[t] for t in raw], dtype=np.int64)
    values = np.vstack([a.values, b.values])
    return TimeSeriesDataset(values, labels, {i: n for n, i in to_id.items()})


def filter_datasets(
    entries: Iterable[CatalogEntry],
    specs: tuple[ClassifierSpec, ClassifierSpec],
    k: int = 5,
) -> list[FilterDecision]:
    """Apply the dataset-selection rule to a catalog.

    A dataset is kept when it has more than two classes and is not near
    ceiling: entries whose fixed unshuffled k-fold accuracy exceeds 99.5%
    under BOTH configured classifiers are excluded.  Unreadable entries are
    listed with their error, never fatal.
    """
    decisions = []
    for entry in entries:
        try:
            train = load_dataset(entry.train_path)
            test = load_dataset(entry.test_path)
        except (DatasetFormatError, DataValidationError) as exc:
            decisions.append(FilterDecision(entry.name, False, f"unreadable: {exc}"))
            continue
        try:
            merged = merge_datasets(train, test)
        except DataValidationError as exc:
            decisions.append(FilterDecision(entry.name, False, f"unusable: {exc}"))
            continue
        if merged.n_classes <= 2:
            decisions.append(
                FilterDecision(
                    entry.name,
                    False,
                    f"only {merged.n_classes} classes",
                    n_classes=merged.n_classes,
                )
            )
            continue
        try:
            accuracies = tuple(
                _cv_accuracy(merged, spec, k) for spec in specs
            )
        except (ValueError, ArithmeticError) as exc:
            decisions.append(FilterDecision(entry.name, False, f"unusable: {exc}"))
            continue
        if all(a > ACCURACY_EXCLUSION_THRESHOLD for a in accuracies):
            decisions.append(
                FilterDecision(
                    entry.name,
                    False,
                    "near-ceiling accuracy under every classifier",
                    n_classes=merged.n_classes,
                    accuracies=accuracies,
                )
            )
        else:
            decisions.append(
                FilterDecision(
                    entry.name,
                    True,
                    "kept",
                    n_classes=merged.n_classes,
                    accuracies=accuracies,
                )
            )
    return decisions


def _cv_accuracy(data: TimeSeriesDataset, spec: ClassifierSpec, k: int) -> float:
    plan = split_data(data, k, shuffle=False)
    scores = []
    for fold in range(k):
        model = fit_classifier(spec, data.subset(plan.train_indices(fold)))
        test = data.subset(plan.test_indices(fold))
        scores.append(accuracy(test.labels, model.predict(test.values)))
    return float(np.mean(scores))


def default_data_dir() -> Path | None:
    value = os.environ.get("HIERTSC_DATA")
    return Path(value) if value else None
