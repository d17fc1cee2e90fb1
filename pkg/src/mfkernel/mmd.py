"""Unbiased MMD from random features and the thresholded two-sample test."""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass

import numpy as np

from .data import ProjectionMap, SyntheticSpec
from .exceptions import ValidationError
from .features import ParticleEnsemble, feature_matrix


@dataclass(frozen=True)
class MmdStatistic:
    """``value = within_pos + within_neg - 2 * cross``; may be negative."""

    value: float
    within_pos: float
    within_neg: float
    cross: float


@dataclass(frozen=True)
class TestConfig:
    __test__ = False  # not a pytest class

    tau: float = 0.0
    trials: int = 100
    seed: int = 0

    def __post_init__(self):
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")


class Decision(str, enum.Enum):
    H0 = "H0"
    H1 = "H1"


def _embed(X, proj: ProjectionMap | None):
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return proj.apply(X) if proj is not None else X


def mmd_from_features(phi_v: np.ndarray, phi_w: np.ndarray) -> MmdStatistic:
    """Estimator from precomputed feature matrices (rows = samples)."""
    m, n = phi_v.shape[0], phi_w.shape[0]
    if m < 2 or n < 2:
        raise ValidationError("each sample needs at least two rows")
    N = phi_v.shape[1]
    sv, sw = phi_v.sum(axis=0), phi_w.sum(axis=0)
    qv = np.einsum("ik,ik->", phi_v, phi_v)
    qw = np.einsum("ik,ik->", phi_w, phi_w)
    within_pos = (sv @ sv - qv) / (m * (m - 1) * N)
    within_neg = (sw @ sw - qw) / (n * (n - 1) * N)
    cross = (sv @ sw) / (m * n * N)
    return MmdStatistic(float(within_pos + within_neg - 2.0 * cross),
                        float(within_pos), float(within_neg), float(cross))


def mmd_unbiased(v_samples, w_samples, ens: ParticleEnsemble,
                 proj: ProjectionMap | None = None) -> MmdStatistic:
    """U-statistic MMD under the kernel ``(1/N) sum_k phi phi``, in ``O((m + n) N)``."""
    phi_v = feature_matrix(_embed(v_samples, proj), ens)
    phi_w = feature_matrix(_embed(w_samples, proj), ens)
    return mmd_from_features(phi_v, phi_w)


def two_sample_test(v_samples, w_samples, ens: ParticleEnsemble,
                    proj: ProjectionMap | None, cfg: TestConfig) -> Decision:
    """Reject ``H0`` exactly when the estimator exceeds ``cfg.tau``."""
    stat = mmd_unbiased(v_samples, w_samples, ens, proj)
    return Decision.H1 if stat.value > cfg.tau else Decision.H0


@dataclass
class PowerCurve:
    taus: np.ndarray
    power: np.ndarray
    type1: np.ndarray
    trials: int
    lam: float
    n_particles: int
    m: int
    n: int
    statistics_h1: np.ndarray
    statistics_h0: np.ndarray

    def largest_tau_with_power(self, level: float = 0.95) -> float:
        """Largest swept threshold whose power is at least ``level`` (``-inf`` if none)."""
        ok = self.taus[self.power >= level]
        return float(ok.max()) if ok.size else float("-inf")

    def rows(self):
        for t, p, e in zip(self.taus, self.power, self.type1):
            yield [float(t), float(p), float(e), self.trials, self.lam, self.n_particles, self.m, self.n]

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["tau", "power", "type1", "trials", "lambda", "N", "m", "n"])
            for r in self.rows():
                w.writerow([f"{r[0]:.17g}", f"{r[1]:.17g}", f"{r[2]:.17g}", r[3],
                            f"{r[4]:.17g}", r[5], r[6], r[7]])


def simulate_statistics(spec: SyntheticSpec, ens: ParticleEnsemble, proj: ProjectionMap | None,
                        m: int, n: int, trials: int, seed: int = 0):
    """MMD values over ``trials`` fresh draws under ``H1`` (``spec.lam``) and ``H0`` (``lam = 0``).

    Each trial draws one set of standard normals and scales it by
    ``sqrt(1 +/- lam)`` for ``H1`` and by 1 for ``H0``, so ``lam = 0`` gives
    identical statistics under both hypotheses.
    """
    rng = np.random.default_rng(seed)
    h1 = np.empty(trials)
    h0 = np.empty(trials)
    sp, sn = np.sqrt(1.0 + spec.lam), np.sqrt(1.0 - spec.lam)
    for t in range(trials):
        zv = rng.standard_normal((m, spec.dim))
        zw = rng.standard_normal((n, spec.dim))
        h1[t] = mmd_unbiased(zv * sp, zw * sn, ens, proj).value
        h0[t] = mmd_unbiased(zv, zw, ens, proj).value
    return h1, h0


def power_curve(spec: SyntheticSpec, ens: ParticleEnsemble, proj: ProjectionMap | None,
                taus, m: int, n: int, trials: int, seed: int = 0) -> PowerCurve:
    """Power and type-I rate per threshold; the same trial statistics serve every ``tau``."""
    taus = np.asarray(taus, dtype=float).ravel()
    if taus.size == 0:
        raise ValidationError("taus must be non-empty")
    if trials < 10:
        raise ValidationError("power_curve needs at least 10 trials")
    h1, h0 = simulate_statistics(spec, ens, proj, m, n, trials, seed)
    power = (h1[None, :] > taus[:, None]).mean(axis=1)
    type1 = (h0[None, :] > taus[:, None]).mean(axis=1)
    return PowerCurve(taus, power, type1, trials, spec.lam, ens.n_particles, m, n, h1, h0)


def parse_tau_range(text: str) -> np.ndarray:
    """``"start:stop:count"`` (inclusive, like ``linspace``) or a comma-separated list."""
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValidationError(f"tau range must be start:stop:count, got {text!r}")
        start, stop, count = float(parts[0]), float(parts[1]), int(parts[2])
        if count < 1:
            raise ValidationError("tau count must be >= 1")
        return np.linspace(start, stop, count)
    return np.array([float(t) for t in text.split(",") if t.strip()])
