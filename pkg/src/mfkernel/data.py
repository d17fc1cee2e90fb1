"""Datasets: synthetic Gaussian classes, CSV ingestion, projections and splits."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ValidationError


@dataclass(frozen=True)
class SyntheticSpec:
    """Two zero-mean Gaussian classes with covariances ``(1 + lam) I`` and ``(1 - lam) I``.

    Attributes
    ----------
    dim : int
        Ambient dimension ``d``.
    lam : float
        Separation parameter in ``[0, 1)``.
    seed : int
        Seed for every draw made from this spec.
    projection_dim : int, optional
        Embedding dimension ``d0`` used by downstream projections.
    """

    dim: int
    lam: float
    seed: int = 0
    projection_dim: int | None = None

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ValidationError(f"dim must be a positive integer, got {self.dim!r}")
        if not (0.0 <= self.lam < 1.0):
            raise ValidationError(f"lambda must lie in [0, 1), got {self.lam!r}")
        if self.projection_dim is not None and not (1 <= self.projection_dim <= self.dim):
            raise ValidationError(
                f"projection_dim must satisfy 1 <= d0 <= d={self.dim}, got {self.projection_dim!r}"
            )

    @property
    def embedded_dim(self) -> int:
        return self.projection_dim if self.projection_dim is not None else self.dim


@dataclass
class LabeledDataset:
    """Feature matrix with labels in ``{-1, +1}``."""

    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.features, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        y = np.asarray(self.labels)
        if X.ndim != 2:
            raise ValidationError("features must be a 2-D matrix")
        if y.ndim != 1 or y.shape[0] != X.shape[0]:
            raise ValidationError(
                f"label count {y.shape} does not match row count {X.shape[0]}"
            )
        if not np.all(np.isin(y, (-1, 1))):
            raise ValidationError("every label must be exactly -1 or +1")
        if not np.all(np.isfinite(X)):
            raise ValidationError("features contain NaN or Inf")
        self.features = X
        self.labels = y.astype(np.int64)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]

    def class_counts(self) -> dict[str, int]:
        return {"+1": int(np.sum(self.labels == 1)), "-1": int(np.sum(self.labels == -1))}

    def subset(self, index) -> "LabeledDataset":
        return LabeledDataset(self.features[index], self.labels[index])

    def summary(self) -> dict:
        """Metadata echoed as JSON on load."""
        return {"n": self.n, "d": self.dim, "class_counts": self.class_counts()}


@dataclass
class ProjectionMap:
    """Affine embedding ``x -> matrix @ x + bias``, optionally followed by a sigmoid."""

    matrix: np.ndarray
    bias: np.ndarray | None = None
    nonlinear: bool = False
    projection_dim: int | None = field(default=None)

    def __post_init__(self):
        S = np.atleast_2d(np.asarray(self.matrix, dtype=float))
        if not np.all(np.isfinite(S)):
            raise ValidationError("projection matrix has non-finite entries")
        if self.projection_dim is not None and S.shape[0] != self.projection_dim:
            raise ValidationError(
                f"projection output dimension {S.shape[0]} != declared {self.projection_dim}"
            )
        if self.bias is not None:
            b = np.asarray(self.bias, dtype=float).ravel()
            if b.shape[0] != S.shape[0] or not np.all(np.isfinite(b)):
                raise ValidationError("projection bias must be finite with length d0")
            self.bias = b
        self.matrix = S

    @property
    def in_dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def out_dim(self) -> int:
        return self.matrix.shape[0]

    def apply(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.in_dim:
            raise ValidationError(
                f"projection expects {self.in_dim} input columns, got {X.shape[1]}"
            )
        Z = X @ self.matrix.T
        if self.bias is not None:
            Z = Z + self.bias
        if self.nonlinear:
            Z = 1.0 / (1.0 + np.exp(-Z))
        return Z


def random_projection(d0: int, d: int, seed: int = 0) -> ProjectionMap:
    """Gaussian projection with ``N(0, 1/d)`` entries, so ``E[Sigma Sigma^T] = I``."""
    rng = np.random.default_rng(seed)
    return ProjectionMap(rng.standard_normal((d0, d)) / math.sqrt(d), projection_dim=d0)


def sample_class_pair(spec: SyntheticSpec, m: int, n: int, rng: np.random.Generator):
    """Draw ``m`` rows from ``P_V`` and ``n`` rows from ``P_W`` using ``rng``."""
    v = rng.standard_normal((m, spec.dim)) * math.sqrt(1.0 + spec.lam)
    w = rng.standard_normal((n, spec.dim)) * math.sqrt(1.0 - spec.lam)
    return v, w


def sample_synthetic(spec: SyntheticSpec, n_pos: int, n_neg: int) -> LabeledDataset:
    """Balanced-by-count synthetic dataset.

    Rows labelled +1 are i.i.d. ``N(0, (1 + lam) I)``, rows labelled -1 are
    ``N(0, (1 - lam) I)``. Row order is shuffled deterministically by ``spec.seed``.
    """
    if n_pos < 1 or n_neg < 1:
        raise ValidationError("n_pos and n_neg must both be >= 1")
    rng = np.random.default_rng(spec.seed)
    v, w = sample_class_pair(spec, n_pos, n_neg, rng)
    X = np.vstack([v, w])
    y = np.concatenate([np.ones(n_pos, dtype=np.int64), -np.ones(n_neg, dtype=np.int64)])
    order = rng.permutation(n_pos + n_neg)
    return LabeledDataset(X[order], y[order])


def sample_norm_threshold(d: int, n: int, seed: int = 0) -> LabeledDataset:
    """``x ~ N(0, I_d)`` labelled by ``sign(||x|| - sqrt(d))`` (ties go to +1)."""
    if d < 1 or n < 1:
        raise ValidationError("d and n must be positive")
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, d))
    y = np.where(np.linalg.norm(X, axis=1) - math.sqrt(d) >= 0.0, 1, -1)
    return LabeledDataset(X, y)


def kl_gaussian_classes(spec: SyntheticSpec) -> float:
    """Closed-form class divergence as printed for the synthetic task.

    ``0.5 * [log((1 - lam)/(1 + lam)) - d0 + d0 (1 - lam^2)]`` evaluated verbatim;
    the value can be negative and is not clamped.
    """
    lam = spec.lam
    if lam >= 1.0 or lam < 0.0:
        raise ValidationError(f"lambda must lie in [0, 1), got {lam!r}")
    d0 = spec.embedded_dim
    return 0.5 * (math.log((1.0 - lam) / (1.0 + lam)) - d0 + d0 * (1.0 - lam**2))


def project(ds: LabeledDataset, proj: ProjectionMap) -> LabeledDataset:
    if proj.in_dim != ds.dim:
        raise ValidationError(
            f"projection has {proj.in_dim} columns but dataset has dimension {ds.dim}"
        )
    return LabeledDataset(proj.apply(ds.features), ds.labels.copy())


def train_test_split(ds: LabeledDataset, n_train: int, seed: int = 0):
    """Random split into ``n_train`` and ``n - n_train`` rows."""
    if not (1 <= n_train < ds.n):
        raise ValidationError(f"n_train must be in [1, {ds.n}), got {n_train}")
    order = np.random.default_rng(seed).permutation(ds.n)
    return ds.subset(order[:n_train]), ds.subset(order[n_train:])


def standardize(X: np.ndarray) -> np.ndarray:
    """Zero mean, unit variance per column; constant columns are only centred."""
    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0.0] = 1.0
    return (X - mu) / sd


def _parse_float(cell: str) -> float:
    value = float(cell)
    if not math.isfinite(value):
        raise ValueError(f"non-finite value {cell!r}")
    return value


def _default_label_map(values) -> dict[str, int]:
    distinct = sorted(set(values))
    if len(distinct) != 2:
        raise ValidationError(
            f"label column must contain exactly two classes, found {len(distinct)}: {distinct[:5]}"
        )
    try:
        numeric = sorted(distinct, key=float)
    except ValueError:
        numeric = None
    if numeric is not None:
        return {numeric[0]: -1, numeric[1]: 1}
    return {distinct[0]: -1, distinct[1]: 1}


def load_csv(
    path,
    label_column=-1,
    label_map: dict | None = None,
    header: bool | None = None,
    standardize_features: bool = True,
    expected_dim: int | None = None,
    delimiter: str = ",",
) -> LabeledDataset:
    """Read a binary-labelled CSV file.

    Parameters
    ----------
    path : path-like
        RFC-4180 file with decimal-point floats.
    label_column : int or str
        Column index (negative allowed) or header name holding the labels.
    label_map : dict, optional
        Maps raw label strings to -1/+1. Without it the two distinct values
        are sorted (numerically when possible) and mapped to -1, +1.
    header : bool, optional
        Whether the first row is a header. ``None`` detects it: the first row
        is a header when one of its feature cells is not a number.
    standardize_features : bool
        Standardize each feature column to zero mean and unit variance.
    expected_dim : int, optional
        Declared feature count; a mismatch raises.
    """
    if not os.path.isfile(path):
        raise ValidationError(f"CSV file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = [r for r in csv.reader(fh, delimiter=delimiter) if r and any(c.strip() for c in r)]
    if not rows:
        raise ValidationError(f"CSV file is empty: {path}")

    width = len(rows[0])
    names = None
    if isinstance(label_column, str):
        names = [c.strip() for c in rows[0]]
        if label_column not in names:
            raise ValidationError(f"label column {label_column!r} not in header {names}")
        label_idx = names.index(label_column)
        header = True
    else:
        label_idx = label_column if label_column >= 0 else width + label_column
        if not (0 <= label_idx < width):
            raise ValidationError(f"label column index {label_column} out of range for width {width}")

    if header is None:
        header = False
        for j, cell in enumerate(rows[0]):
            if j == label_idx:
                continue
            try:
                float(cell)
            except ValueError:
                header = True
                break
    body = rows[1:] if header else rows
    offset = 2 if header else 1  # 1-based file line numbers in messages

    feats, raw_labels = [], []
    for r, row in enumerate(body):
        if len(row) != width:
            raise ValidationError(
                f"ragged row at line {r + offset}: expected {width} cells, got {len(row)}"
            )
        try:
            feats.append([_parse_float(c) for j, c in enumerate(row) if j != label_idx])
        except ValueError as exc:
            raise ValidationError(f"unparseable cell at line {r + offset}: {exc}") from None
        raw_labels.append(row[label_idx].strip())

    if label_map is None:
        label_map = _default_label_map(raw_labels)
    label_map = {str(k): int(v) for k, v in label_map.items()}
    if sorted(set(label_map.values())) != [-1, 1]:
        raise ValidationError("label_map must map onto both -1 and +1")
    try:
        y = np.array([label_map[v] for v in raw_labels], dtype=np.int64)
    except KeyError as exc:
        raise ValidationError(f"label {exc.args[0]!r} not covered by label_map") from None

    X = np.array(feats, dtype=float).reshape(len(feats), width - 1)
    if expected_dim is not None and X.shape[1] != expected_dim:
        raise ValidationError(f"expected {expected_dim} feature columns, found {X.shape[1]}")
    if standardize_features and X.shape[0] > 0:
        X = standardize(X)
    return LabeledDataset(X, y)
