"""Base classifiers used at split evaluation and at hierarchy nodes.

Two kinds are built in:

``linear``
    L2-regularised least squares on the raw series, one-vs-rest with +/-1
    targets.  A deliberately plain stand-in for a linear-kernel margin
    classifier.

``kernel-ridge``
    A random convolutional kernel transform (lengths 7/9/11, mean-centred
    normal weights, uniform bias, dyadic dilations, optional zero padding)
    producing (proportion-of-positives, max) per kernel, standardised and
    fed to the same closed-form ridge.

Both are deterministic functions of (spec, data); predictions break argmax
ties toward the smallest class id.  New kinds can be plugged in through
:func:`register_classifier_kind`.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .dataset import TimeSeriesDataset

_KERNEL_LENGTHS = (7, 9, 11)
_BLOB_VERSION = 1


class TrainingDataError(ValueError):
    """Raised when training data cannot support the requested classifier."""


@dataclass(frozen=True)
class ClassifierSpec:
    """Configuration of a base classifier.

    kind is ``linear`` or ``kernel-ridge`` (or a registered custom kind);
    num_kernels and seed only matter for the kernel transform.
    """

    kind: str = "linear"
    num_kernels: int = 512
    ridge_lambda: float = 1e-2
    seed: int = 0

    def __post_init__(self) -> None:
        if self.num_kernels < 1:
            raise ValueError("num_kernels must be >= 1")
        if not self.ridge_lambda > 0:
            raise ValueError("ridge_lambda must be positive")
        if self.seed < 0:
            raise ValueError("seed must be a non-negative integer")

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "num_kernels": self.num_kernels,
            "ridge_lambda": self.ridge_lambda,
            "seed": self.seed,
        }

    @staticmethod
    def from_dict(doc: dict) -> "ClassifierSpec":
        return ClassifierSpec(
            kind=doc["kind"],
            num_kernels=doc["num_kernels"],
            ridge_lambda=doc["ridge_lambda"],
            seed=doc["seed"],
        )


@dataclass(frozen=True)
class KernelBank:
    """Random convolutional kernels drawn once per (seed, series length).

    Weights of each kernel are mean-centred; dilations are sampled as
    floor(2**u) with u uniform over [0, log2((M-1)/(len-1))] so the dilated
    kernel always fits inside an unpadded series.  Padding, when on, is
    ((len-1)*dilation)//2 zeros on both ends.
    """

    series_length: int
    lengths: np.ndarray
    weights: np.ndarray  # flat, concatenated per kernel
    biases: np.ndarray
    dilations: np.ndarray
    paddings: np.ndarray

    @property
    def n_kernels(self) -> int:
        return int(self.lengths.size)

    @staticmethod
    def generate(series_length: int, num_kernels: int, seed: int) -> "KernelBank":
        usable = [l for l in _KERNEL_LENGTHS if l <= series_length]
        if not usable:
            raise TrainingDataError(
                f"series of length {series_length} are too short for the kernel "
                f"transform (minimum kernel length is {min(_KERNEL_LENGTHS)})"
            )
        rng = np.random.default_rng(seed)
        lengths = rng.choice(np.asarray(usable, dtype=np.int64), size=num_kernels)
        weights = np.empty(int(lengths.sum()), dtype=np.float64)
        biases = np.empty(num_kernels)
        dilations = np.empty(num_kernels, dtype=np.int64)
        paddings = np.empty(num_kernels, dtype=np.int64)
        at = 0
        for i in range(num_kernels):
            length = int(lengths[i])
            w = rng.normal(0.0, 1.0, length)
            weights[at : at + length] = w - w.mean()
            at += length
            biases[i] = rng.uniform(-1.0, 1.0)
            max_exp = np.log2((series_length - 1) / (length - 1))
            dilations[i] = max(1, int(2 ** rng.uniform(0.0, max_exp)))
            pad_on = rng.integers(0, 2) == 1
            paddings[i] = ((length - 1) * dilations[i]) // 2 if pad_on else 0
        return KernelBank(series_length, lengths, weights, biases, dilations, paddings)

    def transform(self, values: np.ndarray) -> np.ndarray:
        """(n, M) series -> (n, 2*n_kernels) features: per kernel the share of
        positive convolution outputs and the maximum output."""
        values = np.asarray(values, dtype=np.float64)
        n = values.shape[0]
        feats = np.empty((n, 2 * self.n_kernels))
        at = 0
        for i in range(self.n_kernels):
            length = int(self.lengths[i])
            w = self.weights[at : at + length]
            at += length
            conv = _convolve_dilated(
                values, w, int(self.dilations[i]), int(self.paddings[i])
            )
            conv += self.biases[i]
            feats[:, 2 * i] = np.mean(conv > 0, axis=1)
            feats[:, 2 * i + 1] = conv.max(axis=1)
        return feats

    def to_dict(self) -> dict:
        return {
            "series_length": self.series_length,
            "lengths": self.lengths.tolist(),
            "weights": self.weights.tolist(),
            "biases": self.biases.tolist(),
            "dilations": self.dilations.tolist(),
            "paddings": self.paddings.tolist(),
        }

    @staticmethod
    def from_dict(doc: dict) -> "KernelBank":
        return KernelBank(
            series_length=doc["series_length"],
            lengths=np.asarray(doc["lengths"], dtype=np.int64),
            weights=np.asarray(doc["weights"], dtype=np.float64),
            biases=np.asarray(doc["biases"], dtype=np.float64),
            dilations=np.asarray(doc["dilations"], dtype=np.int64),
            paddings=np.asarray(doc["paddings"], dtype=np.int64),
        )


def _convolve_dilated(
    values: np.ndarray, weights: np.ndarray, dilation: int, padding: int
) -> np.ndarray:
    """Dilated cross-correlation of every row with one kernel."""
    n, m = values.shape
    length = weights.size
    if padding:
        padded = np.zeros((n, m + 2 * padding))
        padded[:, padding : padding + m] = values
    else:
        padded = values
    out_len = padded.shape[1] - (length - 1) * dilation
    if out_len < 1:
        raise TrainingDataError("kernel does not fit the series even when padded")
    idx = np.arange(out_len)[:, None] + np.arange(length)[None, :] * dilation
    # (n, out_len, length) gather then contract against the kernel
    return padded[:, idx] @ weights


def ridge_solve(features: np.ndarray, targets: np.ndarray, lam: float) -> np.ndarray:
    """Solve (F^T F + lam*I) W = F^T Y for W; targets may have many columns."""
    f = features.shape[1]
    gram = features.T @ features + lam * np.eye(f)
    return np.linalg.solve(gram, features.T @ targets)


@dataclass(frozen=True)
class TrainedClassifier:
    """Fitted multi-class model: per-class weight vector plus intercept.

    For ``linear`` the features are the raw series; for ``kernel-ridge`` the
    standardised kernel features (weight dimension 2 * num_kernels).
    """

    spec: ClassifierSpec
    class_ids: tuple[int, ...]
    weights: np.ndarray  # (n_classes, n_features)
    intercepts: np.ndarray  # (n_classes,)
    series_length: int
    kernels: KernelBank | None = None
    feature_mean: np.ndarray | None = None
    feature_scale: np.ndarray | None = None

    def _features(self, values: np.ndarray) -> np.ndarray:
        if self.kernels is not None:
            feats = self.kernels.transform(values)
        else:
            feats = np.asarray(values, dtype=np.float64)
        if self.feature_mean is not None:
            feats = (feats - self.feature_mean) / self.feature_scale
        return feats

    def decision_scores(self, values: np.ndarray) -> np.ndarray:
        values = np.asarray(values, dtype=np.float64)
        if values.ndim != 2 or values.shape[1] != self.series_length:
            raise ValueError(
                f"expected (n, {self.series_length}) input, got {values.shape}"
            )
        return self._features(values) @ self.weights.T + self.intercepts

    def predict(self, values: np.ndarray) -> np.ndarray:
        """Argmax over per-class scores; ties go to the smallest class id."""
        scores = self.decision_scores(values)
        ids = np.asarray(self.class_ids, dtype=np.int64)
        return ids[np.argmax(scores, axis=1)]

    # -- serialization -----------------------------------------------------

    def to_blob(self) -> str:
        doc = {
            "version": _BLOB_VERSION,
            "spec": self.spec.to_dict(),
            "class_ids": list(self.class_ids),
            "weights": self.weights.tolist(),
            "intercepts": self.intercepts.tolist(),
            "series_length": self.series_length,
            "kernels": self.kernels.to_dict() if self.kernels is not None else None,
            "feature_mean": None
            if self.feature_mean is None
            else self.feature_mean.tolist(),
            "feature_scale": None
            if self.feature_scale is None
            else self.feature_scale.tolist(),
        }
        return json.dumps(doc, sort_keys=True)

    @staticmethod
    def from_blob(blob: str) -> "TrainedClassifier":
        doc = json.loads(blob)
        if doc.get("version") != _BLOB_VERSION:
            raise ValueError(f"unsupported classifier blob version {doc.get('version')}")
        return TrainedClassifier(
            spec=ClassifierSpec.from_dict(doc["spec"]),
            class_ids=tuple(doc["class_ids"]),
            weights=np.asarray(doc["weights"], dtype=np.float64),
            intercepts=np.asarray(doc["intercepts"], dtype=np.float64),
            series_length=doc["series_length"],
            kernels=None if doc["kernels"] is None else KernelBank.from_dict(doc["kernels"]),
            feature_mean=None
            if doc["feature_mean"] is None
            else np.asarray(doc["feature_mean"], dtype=np.float64),
            feature_scale=None
            if doc["feature_scale"] is None
            else np.asarray(doc["feature_scale"], dtype=np.float64),
        )


def _one_vs_rest_targets(labels: np.ndarray, class_ids: np.ndarray) -> np.ndarray:
    return np.where(labels[:, None] == class_ids[None, :], 1.0, -1.0)


def _check_trainable(data: TimeSeriesDataset) -> np.ndarray:
    class_ids = np.unique(data.labels)
    if class_ids.size < 2:
        raise TrainingDataError("training data must contain at least two classes")
    return class_ids


def _fit_on_features(
    spec: ClassifierSpec,
    data: TimeSeriesDataset,
    feats: np.ndarray,
    kernels: KernelBank | None,
    standardise: bool,
) -> TrainedClassifier:
    class_ids = _check_trainable(data)
    if standardise:
        mean = feats.mean(axis=0)
        scale = feats.std(axis=0)
        scale = np.where(scale == 0.0, 1.0, scale)
        feats = (feats - mean) / scale
    else:
        mean = scale = None
    targets = _one_vs_rest_targets(data.labels, class_ids)
    centered = feats - feats.mean(axis=0)
    t_mean = targets.mean(axis=0)
    w = ridge_solve(centered, targets - t_mean, spec.ridge_lambda)
    intercepts = t_mean - feats.mean(axis=0) @ w
    return TrainedClassifier(
        spec=spec,
        class_ids=tuple(int(c) for c in class_ids),
        weights=w.T,
        intercepts=intercepts,
        series_length=data.series_length,
        kernels=kernels,
        feature_mean=mean,
        feature_scale=scale,
    )


def _fit_linear(spec: ClassifierSpec, data: TimeSeriesDataset) -> TrainedClassifier:
    return _fit_on_features(spec, data, data.values, kernels=None, standardise=False)


def _fit_kernel_ridge(spec: ClassifierSpec, data: TimeSeriesDataset) -> TrainedClassifier:
    bank = KernelBank.generate(data.series_length, spec.num_kernels, spec.seed)
    feats = bank.transform(data.values)
    return _fit_on_features(spec, data, feats, kernels=bank, standardise=True)


_FITTERS: dict[str, Callable[[ClassifierSpec, TimeSeriesDataset], TrainedClassifier]] = {
    "linear": _fit_linear,
    "kernel-ridge": _fit_kernel_ridge,
}


def register_classifier_kind(
    kind: str, fitter: Callable[[ClassifierSpec, TimeSeriesDataset], TrainedClassifier]
) -> None:
    """Install a custom classifier kind (used by tests to inject stubs)."""
    _FITTERS[kind] = fitter


def fit_classifier(spec: ClassifierSpec, data: TimeSeriesDataset) -> TrainedClassifier:
    """Fit the classifier described by `spec`; deterministic for fixed inputs."""
    try:
        fitter = _FITTERS[spec.kind]
    except KeyError:
        raise ValueError(f"unknown classifier kind '{spec.kind}'") from None
    return fitter(spec, data)
