"""Comparison methods: chi-square importance weights over fixed particles, and
Gaussian bandwidth selection from k-nearest-neighbour distances."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .align import per_particle_alignment
from .data import LabeledDataset
from .exceptions import ValidationError
from .features import ParticleEnsemble


@dataclass
class ImportanceWeights:
    w: np.ndarray
    radius: float

    @property
    def chi2(self) -> float:
        return chi2_to_uniform(self.w)

    def scaled_ensemble_weights(self) -> np.ndarray:
        """Column scaling ``sqrt(N w_k)`` that turns the weighted kernel into the
        plain ``1/N`` average used everywhere else."""
        return np.sqrt(len(self.w) * self.w)


@dataclass
class BandwidthRule:
    k: int
    sigma2: float

    @property
    def sigma(self) -> float:
        return float(np.sqrt(self.sigma2))


def chi2_to_uniform(w) -> float:
    """``N * sum_k (w_k - 1/N)^2``."""
    w = np.asarray(w, dtype=float)
    N = len(w)
    return float(N * np.sum((w - 1.0 / N) ** 2))


def project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-based)."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, len(v) + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def maximize_linear_chi2(a, radius: float, tol: float = 1e-13) -> np.ndarray:
    """Maximise ``<w, a>`` over the simplex intersected with ``chi2(w || 1/N) <= radius``.

    For a multiplier ``t >= 0`` the stationary point is the simplex projection
    of ``1/N + t a / N``; its divergence grows with ``t``, so ``t`` is found by
    bisection when the ball constraint is active.
    """
    a = np.asarray(a, dtype=float)
    N = len(a)
    if N < 2:
        raise ValidationError("at least two particles are required")
    if not radius > 0:
        raise ValidationError(f"chi-square radius must be positive, got {radius}")
    spread = a.max() - a.min()
    uniform = np.full(N, 1.0 / N)
    if spread == 0.0:
        return uniform
    a = (a - a.mean()) / spread

    top = a >= a.max()
    vertex = top / top.sum()
    if chi2_to_uniform(vertex) <= radius:
        return vertex

    def weights(t):
        return project_simplex(uniform + t * a / N)

    lo, hi = 0.0, 1.0
    while chi2_to_uniform(weights(hi)) < radius:
        hi *= 2.0
    while hi - lo > tol * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        if chi2_to_uniform(weights(mid)) <= radius:
            lo = mid
        else:
            hi = mid
    return weights(lo)


def optimize_weights(ds: LabeledDataset, ens: ParticleEnsemble, radius: float) -> ImportanceWeights:
    """Importance weights maximising the weighted alignment inside the chi-square ball."""
    if ens.n_particles < 2:
        raise ValidationError("at least two particles are required")
    if not radius > 0:
        raise ValidationError(f"chi-square radius must be positive, got {radius}")
    a = per_particle_alignment(ds, ens)
    return ImportanceWeights(maximize_linear_chi2(a, radius), float(radius))


def weighted_alignment(ds: LabeledDataset, ens: ParticleEnsemble, w) -> float:
    """Alignment under the weighted kernel ``sum_k w_k phi phi``."""
    return float(np.dot(w, per_particle_alignment(ds, ens)))


def reweighted_ensemble_features(phi: np.ndarray, weights: ImportanceWeights) -> np.ndarray:
    return phi * weights.scaled_ensemble_weights()


def knn_bandwidth(data, k: int = 3, cap: int = 2000, seed: int = 0) -> BandwidthRule:
    """``sigma^2 = mean_i ||x_i - x_i^(k)||^2`` with ``x_i^(k)`` the k-th nearest
    neighbour at non-zero distance (exact duplicates of ``x_i`` are skipped).

    Beyond ``cap`` rows, the mean runs over ``cap`` query rows sampled with
    ``seed``; neighbours are still searched among all rows.
    """
    X = data.features if hasattr(data, "features") else np.atleast_2d(np.asarray(data, dtype=float))
    n = X.shape[0]
    if k < 1:
        raise ValidationError("k must be >= 1")
    if n < k + 1:
        raise ValidationError(f"need at least k+1={k + 1} points, got {n}")
    queries = np.arange(n)
    if n > cap:
        queries = np.sort(np.random.default_rng(seed).choice(n, cap, replace=False))
    total = 0.0
    for start in range(0, len(queries), 512):
        q = queries[start:start + 512]
        d2 = cdist(X[q], X, "sqeuclidean")
        d2[d2 <= 0.0] = np.inf
        kth = np.partition(d2, k - 1, axis=1)[:, k - 1]
        if not np.all(np.isfinite(kth)):
            raise ValidationError(f"fewer than {k} distinct neighbours for some point")
        total += kth.sum()
    sigma2 = total / len(queries)
    return BandwidthRule(k, float(sigma2))
