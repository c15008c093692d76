"""Stratified folds, the flat baseline, and the nested / flat CV procedures.

Nested CV selects, per outer fold, the candidate hierarchy with the best
inner-fold mean score and reports both that selection score and the held-out
test score of the refitted model.  Flat CV deliberately selects on the test
fold itself, reproducing the optimistic bias it is meant to exhibit.  Every
reported number is a pure function of (data, spec, splitter, n_iter, seeds)
and is independent of worker count.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .classifiers import ClassifierSpec, fit_classifier
from .dataset import TimeSeriesDataset
from .lcpn import fit_lcpn, predict_lcpn
from .metrics import f1_macro
from .splitting import SplitContext, resolve_splitter
from .tree import (
    HierarchyTree,
    class_balance_factor,
    datapoint_balance_factor,
    tree_to_text,
)
from .treegen import (
    CheckResult,
    TreeSearchState,
    check_duplicates_and_limit,
    default_tree_limit,
    grow_tree,
)

#: fold count of the shuffled split that feeds tree generation; one fold is
#: the split scorer's validation part, the rest its training part.
GENERATION_FOLDS = 4

REPORT_SCHEMA_VERSION = 1

CSV_COLUMNS = [
    "dataset_id",
    "scheme",
    "classifier_kind",
    "splitter",
    "n_iter",
    "seed",
    "fold",
    "n_classes",
    "fc_score",
    "hc_score",
    "inner_mean_score",
    "class_balance",
    "data_balance",
    "delta_g",
    "improved",
    "distinct_trees",
    "iterations_run",
    "selected_tree",
]


class FoldFeasibilityError(ValueError):
    """Raised when a class has too few instances for the requested fold count."""


@dataclass(frozen=True)
class FoldPlan:
    """A stratified k-fold assignment of instances to folds.

    Per class, fold sizes differ by at most one.  Unshuffled plans depend
    only on the labels and k, so they are identical across calls.
    """

    k: int
    assignments: np.ndarray
    shuffled: bool
    seed: int

    def test_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == fold)

    def train_indices(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.assignments != fold)


def split_data(
    data: TimeSeriesDataset, k: int, shuffle: bool = False, seed: int = 0
) -> FoldPlan:
    """Build a stratified k-fold plan over `data`.

    Instances of each class (ascending class id) are dealt round-robin into
    folds, after an optional seeded within-class permutation.  A class with
    fewer than k instances makes the plan infeasible.
    """
    if k < 2:
        raise FoldFeasibilityError("at least two folds are required")
    labels = data.labels
    assignments = np.empty(labels.shape[0], dtype=np.int64)
    rng = np.random.default_rng(seed) if shuffle else None
    for cls, count in data.class_counts().items():
        idx = np.flatnonzero(labels == cls)
        if count < k:
            raise FoldFeasibilityError(
                f"class {cls} has {count} instances, fewer than {k} folds"
            )
        if rng is not None:
            idx = idx[rng.permutation(idx.size)]
        assignments[idx] = np.arange(idx.size) % k
    return FoldPlan(k=k, assignments=assignments, shuffled=shuffle, seed=seed)


def flat_baseline(
    data: TimeSeriesDataset, plan: FoldPlan, spec: ClassifierSpec
) -> list[float]:
    """Per-fold macro-F1 of the flat classifier: fit on train, score on test."""
    scores = []
    for fold in range(plan.k):
        train = data.subset(plan.train_indices(fold))
        test = data.subset(plan.test_indices(fold))
        model = fit_classifier(spec, train)
        scores.append(f1_macro(test.labels, model.predict(test.values)))
    return scores


# -- per-fold records and reports -------------------------------------------


@dataclass(frozen=True)
class FoldRecord:
    fold: int
    selected_tree: HierarchyTree
    inner_mean_score: float | None
    outer_test_score: float
    fc_score: float
    class_balance: float
    data_balance: float
    delta_g: float
    distinct_trees: int
    iterations_run: int

    @property
    def improved(self) -> bool:
        return self.delta_g > 0

    def to_dict(self) -> dict:
        return {
            "fold": self.fold,
            "selected_tree": tree_to_text(self.selected_tree),
            "inner_mean_score": self.inner_mean_score,
            "outer_test_score": self.outer_test_score,
            "fc_score": self.fc_score,
            "class_balance": self.class_balance,
            "data_balance": self.data_balance,
            "delta_g": self.delta_g,
            "improved": self.improved,
            "distinct_trees": self.distinct_trees,
            "iterations_run": self.iterations_run,
        }


@dataclass(frozen=True)
class CvReport:
    """Everything one CV run produced, serialisable to JSON and CSV rows."""

    scheme: str
    dataset_id: str
    spec: ClassifierSpec
    splitter_name: str
    n_iter: int
    n_outer: int
    n_inner: int | None
    seed: int
    n_classes: int
    n_instances: int
    folds: tuple[FoldRecord, ...]

    @property
    def hc_score(self) -> float:
        return float(np.mean([f.outer_test_score for f in self.folds]))

    @property
    def fc_score(self) -> float:
        return float(np.mean([f.fc_score for f in self.folds]))

    @property
    def delta_g(self) -> float:
        return float(np.mean([f.delta_g for f in self.folds]))

    @property
    def inner_selection_score(self) -> float | None:
        if any(f.inner_mean_score is None for f in self.folds):
            return None
        return float(np.mean([f.inner_mean_score for f in self.folds]))

    def aggregates(self) -> dict:
        return {
            "hc_score": self.hc_score,
            "hc_inner_selection_score": self.inner_selection_score,
            "fc_score": self.fc_score,
            "delta_g": self.delta_g,
            "improvements": sum(1 for f in self.folds if f.improved),
        }

    def to_json_dict(self) -> dict:
        return {
            "schema_version": REPORT_SCHEMA_VERSION,
            "scheme": self.scheme,
            "dataset_id": self.dataset_id,
            "classifier": self.spec.to_dict(),
            "splitter": self.splitter_name,
            "n_iter": self.n_iter,
            "n_outer": self.n_outer,
            "n_inner": self.n_inner,
            "seed": self.seed,
            "n_classes": self.n_classes,
            "n_instances": self.n_instances,
            "folds": [f.to_dict() for f in self.folds],
            "aggregates": self.aggregates(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2) + "\n"

    def to_csv_rows(self) -> list[list[str]]:
        rows = []
        for f in self.folds:
            rows.append(
                [
                    self.dataset_id,
                    self.scheme,
                    self.spec.kind,
                    self.splitter_name,
                    str(self.n_iter),
                    str(self.seed),
                    str(f.fold),
                    str(self.n_classes),
                    repr(f.fc_score),
                    repr(f.outer_test_score),
                    "" if f.inner_mean_score is None else repr(f.inner_mean_score),
                    repr(f.class_balance),
                    repr(f.data_balance),
                    repr(f.delta_g),
                    str(int(f.improved)),
                    str(f.distinct_trees),
                    str(f.iterations_run),
                    tree_to_text(f.selected_tree),
                ]
            )
        return rows

    @staticmethod
    def from_json(text: str) -> "CvReport":
        doc = json.loads(text)
        from .tree import parse_tree_text

        folds = []
        for f in doc["folds"]:
            tree, _ = parse_tree_text(f["selected_tree"])
            folds.append(
                FoldRecord(
                    fold=f["fold"],
                    selected_tree=tree,
                    inner_mean_score=f["inner_mean_score"],
                    outer_test_score=f["outer_test_score"],
                    fc_score=f["fc_score"],
                    class_balance=f["class_balance"],
                    data_balance=f["data_balance"],
                    delta_g=f["delta_g"],
                    distinct_trees=f["distinct_trees"],
                    iterations_run=f["iterations_run"],
                )
            )
        return CvReport(
            scheme=doc["scheme"],
            dataset_id=doc["dataset_id"],
            spec=ClassifierSpec.from_dict(doc["classifier"]),
            splitter_name=doc["splitter"],
            n_iter=doc["n_iter"],
            n_outer=doc["n_outer"],
            n_inner=doc["n_inner"],
            seed=doc["seed"],
            n_classes=doc["n_classes"],
            n_instances=doc["n_instances"],
            folds=tuple(folds),
        )


# -- candidate generation ----------------------------------------------------


def _iteration_context(
    outer_train: TimeSeriesDataset, spec: ClassifierSpec, seed: int, ko: int, i: int
) -> SplitContext:
    """Fresh shuffled generation split and RNG stream for (seed, fold, iter)."""
    root = np.random.SeedSequence(entropy=(seed, ko, i))
    fold_seq, splitter_seq = root.spawn(2)
    gen_seed = int(fold_seq.generate_state(1)[0])
    plan = split_data(outer_train, GENERATION_FOLDS, shuffle=True, seed=gen_seed)
    return SplitContext(
        train=outer_train.subset(plan.train_indices(0)),
        val=outer_train.subset(plan.test_indices(0)),
        spec=spec,
        rng=np.random.default_rng(splitter_seq),
    )


def _candidate_trees(
    outer_train: TimeSeriesDataset,
    spec: ClassifierSpec,
    splitter_fn: Callable,
    n_iter: int,
    seed: int,
    ko: int,
) -> tuple[list[HierarchyTree], int, int]:
    """Generate up to n_iter candidate trees, skipping similarity duplicates
    and stopping once every distinct tree has been seen.

    Returns (fresh trees, iterations run, distinct count).  The stream is a
    pure function of (outer_train, spec, splitter, n_iter, seed, ko), which
    is what lets nested and flat CV share it.
    """
    state = TreeSearchState(limit=default_tree_limit(outer_train.n_classes))
    fresh: list[HierarchyTree] = []
    iterations = 0
    for i in range(n_iter):
        if state.at_limit:
            break
        iterations += 1
        ctx = _iteration_context(outer_train, spec, seed, ko, i)
        tree = grow_tree(ctx, splitter_fn)
        result = check_duplicates_and_limit(state, tree)
        if result is CheckResult.FRESH:
            fresh.append(tree)
        elif result is CheckResult.LIMIT_REACHED:
            break
    return fresh, iterations, state.distinct_count


def _inner_fold_score(
    tree: HierarchyTree,
    outer_train: TimeSeriesDataset,
    plan: FoldPlan,
    ki: int,
    spec: ClassifierSpec,
) -> float:
    model = fit_lcpn(tree, outer_train.subset(plan.train_indices(ki)), spec)
    val = outer_train.subset(plan.test_indices(ki))
    predicted, _ = predict_lcpn(model, val.values)
    return f1_macro(val.labels, predicted)


def _mean_inner_score(
    tree: HierarchyTree,
    outer_train: TimeSeriesDataset,
    plan: FoldPlan,
    spec: ClassifierSpec,
    max_workers: int,
) -> float:
    if max_workers > 1:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            scores = list(
                pool.map(
                    lambda ki: _inner_fold_score(tree, outer_train, plan, ki, spec),
                    range(plan.k),
                )
            )
    else:
        scores = [
            _inner_fold_score(tree, outer_train, plan, ki, spec) for ki in range(plan.k)
        ]
    return float(np.mean(scores))


def _test_score(
    tree: HierarchyTree,
    train: TimeSeriesDataset,
    test: TimeSeriesDataset,
    spec: ClassifierSpec,
    max_workers: int,
) -> float:
    model = fit_lcpn(tree, train, spec, max_workers=max_workers)
    predicted, _ = predict_lcpn(model, test.values)
    return f1_macro(test.labels, predicted)


def _fold_record(
    fold: int,
    tree: HierarchyTree,
    inner_mean: float | None,
    outer_score: float,
    fc_score: float,
    train: TimeSeriesDataset,
    distinct: int,
    iterations: int,
) -> FoldRecord:
    return FoldRecord(
        fold=fold,
        selected_tree=tree,
        inner_mean_score=inner_mean,
        outer_test_score=outer_score,
        fc_score=fc_score,
        class_balance=class_balance_factor(tree),
        data_balance=datapoint_balance_factor(tree, train),
        delta_g=outer_score - fc_score,
        distinct_trees=distinct,
        iterations_run=iterations,
    )


def _splitter_label(splitter) -> str:
    if isinstance(splitter, str):
        return splitter
    return getattr(splitter, "__name__", "custom")


def nested_cv(
    data: TimeSeriesDataset,
    spec: ClassifierSpec,
    splitter,
    n_iter: int,
    n_outer: int = 5,
    n_inner: int = 4,
    seed: int = 0,
    dataset_id: str = "",
    max_workers: int = 1,
) -> CvReport:
    """Nested cross-validation: inner-fold means select the tree, the held-out
    outer fold measures it.

    Per outer fold, up to n_iter candidate trees are generated from fresh
    shuffled splits of the outer-train set (duplicates skipped, generation
    stopping once every distinct tree has been seen).  Each fresh tree is
    scored by the mean macro-F1 over the unshuffled inner folds; the best is
    refit on the whole outer-train set and scored on the outer test fold,
    next to the flat baseline on the same folds.
    """
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    splitter_fn = resolve_splitter(splitter)
    outer_plan = split_data(data, n_outer, shuffle=False)
    records = []
    for ko in range(n_outer):
        train = data.subset(outer_plan.train_indices(ko))
        test = data.subset(outer_plan.test_indices(ko))
        fresh, iterations, distinct = _candidate_trees(
            train, spec, splitter_fn, n_iter, seed, ko
        )
        inner_plan = split_data(train, n_inner, shuffle=False)
        best_tree: HierarchyTree | None = None
        best_mean = 0.0
        first: tuple[HierarchyTree, float] | None = None
        for tree in fresh:
            mean_score = _mean_inner_score(tree, train, inner_plan, spec, max_workers)
            if first is None:
                first = (tree, mean_score)
            if mean_score > best_mean:
                best_mean = mean_score
                best_tree = tree
        if best_tree is None:
            best_tree, best_mean = first  # all candidates scored 0.0
        outer_score = _test_score(best_tree, train, test, spec, max_workers)
        fc_model = fit_classifier(spec, train)
        fc_score = f1_macro(test.labels, fc_model.predict(test.values))
        records.append(
            _fold_record(
                ko, best_tree, best_mean, outer_score, fc_score, train, distinct, iterations
            )
        )
    return CvReport(
        scheme="nested",
        dataset_id=dataset_id,
        spec=spec,
        splitter_name=_splitter_label(splitter),
        n_iter=n_iter,
        n_outer=n_outer,
        n_inner=n_inner,
        seed=seed,
        n_classes=data.n_classes,
        n_instances=data.n_instances,
        folds=tuple(records),
    )


def flat_cv(
    data: TimeSeriesDataset,
    spec: ClassifierSpec,
    splitter,
    n_iter: int,
    n_outer: int = 5,
    seed: int = 0,
    dataset_id: str = "",
    max_workers: int = 1,
) -> CvReport:
    """Flat cross-validation: candidates are selected directly on the test
    fold, reproducing the scheme's intentional optimism.

    The candidate stream per fold is identical to :func:`nested_cv`'s for the
    same (data, spec, splitter, n_iter, seed), so per fold the flat best is
    never below the test score of the nested-selected tree.
    """
    if n_iter < 1:
        raise ValueError("n_iter must be >= 1")
    splitter_fn = resolve_splitter(splitter)
    outer_plan = split_data(data, n_outer, shuffle=False)
    records = []
    for ko in range(n_outer):
        train = data.subset(outer_plan.train_indices(ko))
        test = data.subset(outer_plan.test_indices(ko))
        fresh, iterations, distinct = _candidate_trees(
            train, spec, splitter_fn, n_iter, seed, ko
        )
        best_tree: HierarchyTree | None = None
        best_score = 0.0
        first: tuple[HierarchyTree, float] | None = None
        for tree in fresh:
            score = _test_score(tree, train, test, spec, max_workers)
            if first is None:
                first = (tree, score)
            if score > best_score:
                best_score = score
                best_tree = tree
        if best_tree is None:
            best_tree, best_score = first  # all candidates scored 0.0
        fc_model = fit_classifier(spec, train)
        fc_score = f1_macro(test.labels, fc_model.predict(test.values))
        records.append(
            _fold_record(
                ko, best_tree, None, best_score, fc_score, train, distinct, iterations
            )
        )
    return CvReport(
        scheme="flat",
        dataset_id=dataset_id,
        spec=spec,
        splitter_name=_splitter_label(splitter),
        n_iter=n_iter,
        n_outer=n_outer,
        n_inner=None,
        seed=seed,
        n_classes=data.n_classes,
        n_instances=data.n_instances,
        folds=tuple(records),
    )
