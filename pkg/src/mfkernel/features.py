"""Random Fourier features over a movable ensemble of frequency particles.

The feature map is ``phi(x; xi, b) = sqrt(2) cos(<x, xi> + b)`` and every
kernel estimate is normalised by ``1/N`` at aggregation time, so that
``E[phi(x) phi(y)]`` over ``xi ~ N(0, I/sigma^2)`` and uniform phases equals the
Gaussian kernel ``exp(-||x - y||^2 / (2 sigma^2))``.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ValidationError

SQRT2 = math.sqrt(2.0)


class ParticleEnsemble:
    """``N`` frequency particles in ``R^D`` with fixed phases.

    ``particles`` is mutated in place by the trainer. ``initial_particles`` is
    a read-only snapshot taken at construction.
    """

    def __init__(self, particles, phases, seed: int = 0, initial_particles=None):
        xi = np.array(particles, dtype=float, ndmin=2)
        b = np.array(phases, dtype=float).ravel()
        if xi.ndim != 2 or xi.shape[0] < 1 or xi.shape[1] < 1:
            raise ValidationError("particles must be an N x D matrix with N, D >= 1")
        if b.shape[0] != xi.shape[0]:
            raise ValidationError(f"got {b.shape[0]} phases for {xi.shape[0]} particles")
        if not (np.all(np.isfinite(xi)) and np.all(np.isfinite(b))):
            raise ValidationError("particles and phases must be finite")
        if np.any(b < -math.pi) or np.any(b >= math.pi):
            raise ValidationError("phases must lie in [-pi, pi)")
        self.particles = xi
        self.phases = b
        self.seed = int(seed)
        init = xi.copy() if initial_particles is None else np.array(initial_particles, dtype=float)
        if init.shape != xi.shape:
            raise ValidationError("initial snapshot shape does not match particles")
        init.setflags(write=False)
        self._initial = init

    @classmethod
    def gaussian(cls, n_particles: int, dim: int, sigma: float = 1.0, seed: int = 0):
        """Draw ``xi ~ N(0, I/sigma^2)`` and ``b ~ Unif[-pi, pi)``."""
        if n_particles < 1 or dim < 1:
            raise ValidationError("n_particles and dim must be >= 1")
        if not sigma > 0:
            raise ValidationError(f"sigma must be positive, got {sigma}")
        rng = np.random.default_rng(seed)
        xi = rng.standard_normal((n_particles, dim)) / sigma
        b = rng.uniform(-math.pi, math.pi, size=n_particles)
        return cls(xi, b, seed=seed)

    @property
    def initial_particles(self) -> np.ndarray:
        return self._initial

    @property
    def n_particles(self) -> int:
        return self.particles.shape[0]

    @property
    def dim(self) -> int:
        return self.particles.shape[1]

    def copy(self) -> "ParticleEnsemble":
        return ParticleEnsemble(
            self.particles.copy(), self.phases.copy(), self.seed, self._initial.copy()
        )

    def to_dict(self) -> dict:
        return {
            "N": self.n_particles,
            "D": self.dim,
            "seed": self.seed,
            "particles": self.particles.ravel().tolist(),
            "phases": self.phases.tolist(),
            "initial_particles": self._initial.ravel().tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "ParticleEnsemble":
        N, D = int(data["N"]), int(data["D"])
        xi = np.asarray(data["particles"], dtype=float).reshape(N, D)
        init = data.get("initial_particles")
        if init is not None:
            init = np.asarray(init, dtype=float).reshape(N, D)
        return cls(xi, data["phases"], seed=data.get("seed", 0), initial_particles=init)

    def fingerprint(self) -> str:
        """Content hash of the current particles and phases."""
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.particles).tobytes())
        h.update(np.ascontiguousarray(self.phases).tobytes())
        return h.hexdigest()[:16]

    def __repr__(self):
        return f"ParticleEnsemble(N={self.n_particles}, D={self.dim}, seed={self.seed})"


def save_ensemble(ens: ParticleEnsemble, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(ens.to_dict(), fh)


def load_ensemble(path) -> ParticleEnsemble:
    with open(path, encoding="utf-8") as fh:
        return ParticleEnsemble.from_dict(json.load(fh))


def _check_dim(x: np.ndarray, D: int, what: str = "x"):
    if x.shape[-1] != D:
        raise ValidationError(f"{what} has dimension {x.shape[-1]}, expected {D}")


def feature(x, particle, phase: float) -> float:
    """``sqrt(2) cos(<x, xi> + b)`` for a single point and particle."""
    x = np.asarray(x, dtype=float).ravel()
    xi = np.asarray(particle, dtype=float).ravel()
    _check_dim(x, xi.shape[0])
    return SQRT2 * math.cos(float(x @ xi) + phase)


def feature_matrix(X, ens: ParticleEnsemble) -> np.ndarray:
    """``Phi[i, k] = phi(x_i; xi^k, b^k)`` for the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    _check_dim(X, ens.dim, "data")
    return SQRT2 * np.cos(X @ ens.particles.T + ens.phases)


def kernel_estimate(x, y, ens: ParticleEnsemble) -> float:
    """Monte Carlo kernel ``(1/N) sum_k phi(x; xi^k) phi(y; xi^k)``."""
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    _check_dim(x, ens.dim)
    _check_dim(y, ens.dim, "y")
    fx = np.cos(ens.particles @ x + ens.phases)
    fy = np.cos(ens.particles @ y + ens.phases)
    return 2.0 * float(np.mean(fx * fy))


@dataclass
class GramEstimate:
    """Raw feature matrix and the ``1/N``-normalised kernel approximation."""

    phi: np.ndarray
    n_particles: int

    def gram(self) -> np.ndarray:
        K = self.phi @ self.phi.T / self.n_particles
        return 0.5 * (K + K.T)

    def cross(self, other_phi: np.ndarray) -> np.ndarray:
        return self.phi @ other_phi.T / self.n_particles


def _rows(data) -> np.ndarray:
    return data.features if hasattr(data, "features") else np.atleast_2d(np.asarray(data, dtype=float))


def gram(data, ens: ParticleEnsemble) -> GramEstimate:
    """Feature matrix for a dataset (or raw matrix) under ``ens``."""
    return GramEstimate(feature_matrix(_rows(data), ens), ens.n_particles)


def pair_gradient(x, x_tilde, particle, phase: float) -> np.ndarray:
    """Gradient in ``xi`` of ``phi(x; xi, b) phi(x_tilde; xi, b)``."""
    x = np.asarray(x, dtype=float).ravel()
    xt = np.asarray(x_tilde, dtype=float).ravel()
    xi = np.asarray(particle, dtype=float).ravel()
    _check_dim(x, xi.shape[0])
    _check_dim(xt, xi.shape[0], "x_tilde")
    u = float(x @ xi) + phase
    v = float(xt @ xi) + phase
    return -2.0 * math.sin(u) * math.cos(v) * x - 2.0 * math.cos(u) * math.sin(v) * xt


def pair_gradients(x, x_tilde, ens: ParticleEnsemble) -> np.ndarray:
    """Row ``k`` is :func:`pair_gradient` at particle ``k`` (shape ``N x D``)."""
    x = np.asarray(x, dtype=float).ravel()
    xt = np.asarray(x_tilde, dtype=float).ravel()
    u = ens.particles @ x + ens.phases
    v = ens.particles @ xt + ens.phases
    a = -2.0 * np.sin(u) * np.cos(v)
    c = -2.0 * np.cos(u) * np.sin(v)
    return a[:, None] * x + c[:, None] * xt


def gaussian_kernel(X, Y, sigma: float = 1.0) -> np.ndarray:
    """Exact ``exp(-||x - y||^2 / (2 sigma^2))`` between the rows of ``X`` and ``Y``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Y = np.atleast_2d(np.asarray(Y, dtype=float))
    sq = (X**2).sum(1)[:, None] + (Y**2).sum(1)[None, :] - 2.0 * X @ Y.T
    return np.exp(-np.maximum(sq, 0.0) / (2.0 * sigma**2))
