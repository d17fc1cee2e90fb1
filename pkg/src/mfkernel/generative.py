"""Affine generator trained against a learned random-feature kernel.

Each outer step runs a few particle SGD steps on a minibatch in which target
rows carry label +1 and generated rows label -1, then moves the generator
``G(z) = A z + b`` by one RMSprop step that increases the empirical risk of
that minibatch: the kernel separates the two samples, the generator undoes
the separation.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

import numpy as np

from .align import PairSampler, TrainConfig, sgd_step
from .data import LabeledDataset, SyntheticSpec
from .exceptions import NumericalError, ValidationError
from .features import SQRT2, ParticleEnsemble, feature_matrix
from .mmd import mmd_unbiased


@dataclass
class GeneratorModel:
    A: np.ndarray
    b: np.ndarray
    lr: float = 5e-5
    decay: float = 0.9
    epsilon: float = 1e-8
    rms_A: np.ndarray | None = None
    rms_b: np.ndarray | None = None

    def __post_init__(self):
        self.A = np.array(self.A, dtype=float, ndmin=2)
        self.b = np.array(self.b, dtype=float).ravel()
        if self.A.shape[0] != self.b.shape[0]:
            raise ValidationError(f"A has {self.A.shape[0]} rows but b has length {self.b.shape[0]}")
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise ValidationError("generator parameters must be finite")
        if not self.lr > 0 or not 0 <= self.decay < 1 or not self.epsilon > 0:
            raise ValidationError("need lr > 0, 0 <= decay < 1 and epsilon > 0")
        if self.rms_A is None:
            self.rms_A = np.zeros_like(self.A)
        if self.rms_b is None:
            self.rms_b = np.zeros_like(self.b)

    @classmethod
    def identity(cls, d: int, **kw) -> "GeneratorModel":
        return cls(np.eye(d), np.zeros(d), **kw)

    @property
    def dim(self) -> int:
        return self.A.shape[0]

    @property
    def z_dim(self) -> int:
        return self.A.shape[1]

    def covariance(self) -> np.ndarray:
        return self.A @ self.A.T

    def rmsprop_step(self, grad_A: np.ndarray, grad_b: np.ndarray) -> None:
        """Descent step on the loss whose gradient is given."""
        self.rms_A = self.decay * self.rms_A + (1 - self.decay) * grad_A**2
        self.rms_b = self.decay * self.rms_b + (1 - self.decay) * grad_b**2
        self.A = self.A - self.lr * grad_A / (np.sqrt(self.rms_A) + self.epsilon)
        self.b = self.b - self.lr * grad_b / (np.sqrt(self.rms_b) + self.epsilon)
        if not (np.all(np.isfinite(self.A)) and np.all(np.isfinite(self.b))):
            raise NumericalError("non-finite generator parameters")

    def to_dict(self) -> dict:
        return {"A": self.A.tolist(), "b": self.b.tolist(), "lr": self.lr,
                "decay": self.decay, "epsilon": self.epsilon}


def generate(gen: GeneratorModel, count: int, seed=0) -> np.ndarray:
    """``count`` rows ``A z + b`` with ``z ~ N(0, I)``; ``seed`` may also be a Generator."""
    if count < 1:
        raise ValidationError("count must be >= 1")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    z = rng.standard_normal((count, gen.z_dim))
    return z @ gen.A.T + gen.b


def risk_and_input_gradient(X: np.ndarray, y: np.ndarray, ens: ParticleEnsemble, alpha: float):
    """Empirical risk of the labelled rows and its gradient with respect to every row of ``X``."""
    n = len(y)
    N = ens.n_particles
    U = X @ ens.particles.T + ens.phases
    phi = SQRT2 * np.cos(U)
    dphi = -SQRT2 * np.sin(U)  # d phi / d u
    K = phi @ phi.T / N
    c = 8.0 / (n * (n - 1) * alpha)
    resid = alpha * np.outer(y, y) - K
    np.fill_diagonal(resid, 0.0)
    risk = 0.5 * c * float(np.sum(resid**2))
    # d risk / d K_ij over i != j, both orderings
    E = -2.0 * c * resid
    grad = ((dphi * (E @ phi)) @ ens.particles) / N
    return risk, grad


def generator_loss_and_grad(gen: GeneratorModel, real: np.ndarray, z: np.ndarray,
                            ens: ParticleEnsemble, alpha: float):
    """Loss ``-risk`` of the minibatch ``[real (+1); A z + b (-1)]`` and its gradient in ``(A, b)``."""
    fake = z @ gen.A.T + gen.b
    X = np.vstack([real, fake])
    y = np.concatenate([np.ones(len(real)), -np.ones(len(fake))])
    risk, gx = risk_and_input_gradient(X, y, ens, alpha)
    g_fake = -gx[len(real):]
    return -risk, g_fake.T @ z, g_fake.sum(axis=0)


@dataclass
class GeneratorConfig:
    outer_steps: int = 5000
    inner_steps: int = 5
    batch: int = 64
    eta: float = 1.0
    alpha: float = 1.0
    check_every: int = 10
    mmd_rows: int = 256
    seed: int = 0
    guard_factor: float = 10.0
    guard_patience: int = 100

    def __post_init__(self):
        for name in ("outer_steps", "inner_steps", "batch", "check_every", "guard_patience"):
            if getattr(self, name) < 1:
                raise ValidationError(f"{name} must be >= 1")
        if self.batch < 2 or self.mmd_rows < 2:
            raise ValidationError("batch and mmd_rows must be >= 2")
        if not self.eta > 0 or not self.alpha > 0:
            raise ValidationError("eta and alpha must be positive")


@dataclass
class GeneratorReport:
    mmd_trace: list = field(default_factory=list)  # (outer step, MMD estimate)
    steps: int = 0
    aborted: bool = False
    A: np.ndarray | None = None
    b: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {"mmd_trace": [[int(i), float(v)] for i, v in self.mmd_trace],
                "steps": self.steps, "aborted": self.aborted,
                "A": None if self.A is None else self.A.tolist(),
                "b": None if self.b is None else self.b.tolist()}

    def write_trace_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["step", "mmd"])
            for i, v in self.mmd_trace:
                w.writerow([int(i), f"{float(v):.17g}"])

    def write_params_json(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump({"A": self.A.tolist(), "b": self.b.tolist()}, fh)


def _target_sampler(target):
    """Normalise the target into ``f(rng, count) -> rows``."""
    if callable(target):
        return target
    if isinstance(target, SyntheticSpec):
        if target.projection_dim is not None:
            raise ValidationError("projected targets are not supported")
        scale = np.sqrt(1.0 + target.lam)
        return lambda rng, k: scale * rng.standard_normal((k, target.dim))
    rows = target.features if isinstance(target, LabeledDataset) else np.atleast_2d(np.asarray(target, dtype=float))
    if rows.shape[0] < 2:
        raise ValidationError("target needs at least two rows")
    return lambda rng, k: rows[rng.integers(0, rows.shape[0], size=k)]


def train_generator(target, gen: GeneratorModel, ens: ParticleEnsemble,
                    cfg: GeneratorConfig | None = None) -> GeneratorReport:
    """Alternate ``cfg.inner_steps`` particle steps with one generator step.

    ``target`` is a :class:`SyntheticSpec` (samples its positive class), a
    dataset or array of rows (resampled with replacement), or a callable
    ``(rng, count) -> rows``. ``gen`` and ``ens`` are updated in place. The
    MMD between fresh target and generated samples is recorded every
    ``cfg.check_every`` outer steps; the run stops early once it has stayed
    above ``guard_factor`` times its first value for ``guard_patience``
    consecutive checks.
    """
    cfg = cfg or GeneratorConfig()
    if ens.dim != gen.dim:
        raise ValidationError(f"particle dimension {ens.dim} != generator output dimension {gen.dim}")
    sample_target = _target_sampler(target)
    rng = np.random.default_rng(cfg.seed)
    mon_rng = np.random.default_rng([cfg.seed, 1])
    kcfg = TrainConfig(eta=cfg.eta, alpha=cfg.alpha, iterations=1)
    y_batch = np.concatenate([np.ones(cfg.batch, dtype=np.int64), -np.ones(cfg.batch, dtype=np.int64)])
    report = GeneratorReport()
    over = 0
    threshold = None

    def check(step):
        nonlocal over, threshold
        real = sample_target(mon_rng, cfg.mmd_rows)
        fake = generate(gen, cfg.mmd_rows, mon_rng)
        value = mmd_unbiased(real, fake, ens).value
        report.mmd_trace.append((step, value))
        if threshold is None:
            threshold = cfg.guard_factor * max(abs(value), 1e-12)
            return False
        over = over + 1 if value > threshold else 0
        return over >= cfg.guard_patience

    check(0)
    for step in range(1, cfg.outer_steps + 1):
        real = sample_target(rng, cfg.batch)
        if real.shape[1] != gen.dim:
            raise ValidationError(f"target rows have {real.shape[1]} columns, generator {gen.dim}")
        fake = generate(gen, cfg.batch, rng)
        sampler = PairSampler(LabeledDataset(np.vstack([real, fake]), y_batch), rng)
        labels, idx = sampler.draw(cfg.inner_steps)
        X = sampler.X
        for s in range(cfg.inner_steps):
            i, j = idx[s]
            sgd_step(ens, ((labels[s, 0], X[i]), (labels[s, 1], X[j])), kcfg)
        z = rng.standard_normal((cfg.batch, gen.z_dim))
        _, gA, gb = generator_loss_and_grad(gen, real, z, ens, cfg.alpha)
        gen.rmsprop_step(gA, gb)
        report.steps = step
        if step % cfg.check_every == 0 and check(step):
            report.aborted = True
            break
    report.A, report.b = gen.A.copy(), gen.b.copy()
    return report


def covariance_error(gen: GeneratorModel, target_cov) -> float:
    """``||A A^T - Sigma||_F / ||Sigma||_F``."""
    S = np.asarray(target_cov, dtype=float)
    return float(np.linalg.norm(gen.covariance() - S) / np.linalg.norm(S))
