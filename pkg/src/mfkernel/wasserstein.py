"""Exact Wasserstein distances between equal-size empirical measures."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.distance import cdist

from .exceptions import BudgetError, ValidationError

DEFAULT_CAP = 2048


@dataclass(frozen=True)
class BallSpec:
    """Wasserstein ball of ``radius`` around the initial particle measure."""

    radius: float
    order: int = 2

    def __post_init__(self):
        if not self.radius > 0:
            raise ValidationError(f"ball radius must be positive, got {self.radius}")
        if self.order not in (1, 2):
            raise ValidationError(f"ball order must be 1 or 2, got {self.order}")


class BallCheck(NamedTuple):
    inside: bool
    distance: float


def wasserstein_empirical(a, b, p: float = 2, cap: int = DEFAULT_CAP) -> float:
    """``W_p`` between two uniform empirical measures with the same atom count.

    The optimal coupling of two uniform measures on ``N`` atoms is a permutation,
    so the distance is found exactly by a linear assignment on the ``N x N``
    matrix of ``||a_k - b_l||^p``.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim == 1:
        a = a[:, None]
    if b.ndim == 1:
        b = b[:, None]
    if a.shape != b.shape:
        raise ValidationError(f"atom sets differ in shape: {a.shape} vs {b.shape}")
    if p < 1:
        raise ValidationError(f"order p must be >= 1, got {p}")
    n = a.shape[0]
    if n > cap:
        raise BudgetError(f"{n} atoms exceed the assignment cap of {cap}")
    if a.tobytes() > b.tobytes():
        a, b = b, a  # fixed argument order keeps the result bitwise symmetric
    cost = cdist(a, b) ** p
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].mean() ** (1.0 / p))


def in_ball(ens, ball: BallSpec, cap: int = DEFAULT_CAP) -> BallCheck:
    """Distance of the current particles from their initial snapshot, and membership."""
    dist = wasserstein_empirical(ens.particles, ens.initial_particles, ball.order, cap)
    return BallCheck(dist <= ball.radius, dist)


def corollary_learning_rate(radius: float, order: int, n_particles: int, steps: int,
                            delta: float = 0.05, scale: float = 1.0) -> float:
    """Step size ``scale * R^p / (T sqrt(N T) log(2/delta))`` with ``T = steps / N``.

    ``T`` is the time horizon in the scaled clock where ``N`` iterations make
    one time unit.
    """
    if steps < 1 or n_particles < 1:
        raise ValidationError("steps and n_particles must be positive")
    if not (0 < delta < 1):
        raise ValidationError("delta must lie in (0, 1)")
    horizon = max(steps / n_particles, 1.0 / n_particles)
    return scale * radius**order / (horizon * np.sqrt(n_particles * horizon) * np.log(2.0 / delta))
