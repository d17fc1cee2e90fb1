"""Kernel-target alignment objectives and the particle SGD trainer."""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from .data import LabeledDataset
from .exceptions import NumericalError, ValidationError
from .features import ParticleEnsemble, feature_matrix
from .wasserstein import BallSpec, in_ball

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    """Particle SGD settings.

    ``eta`` already absorbs the ``16/(n(n-1))`` gradient normalisation. One
    iteration samples ``batch_pairs`` label/feature pairs (one by default).
    ``checkpoint_every=None`` records risk and energy every
    ``max(1, iterations // 200)`` steps; ``0`` records only the endpoints.
    """

    eta: float = 1.0
    alpha: float = 1.0
    iterations: int = 1000
    batch_pairs: int = 1
    seed: int = 0
    ball: BallSpec | None = None
    feasibility_check_every: int = 100
    checkpoint_every: int | None = None
    monitor_rows: int = 200

    def __post_init__(self):
        if not self.eta > 0:
            raise ValidationError(f"eta must be positive, got {self.eta}")
        if not self.alpha > 0:
            raise ValidationError(f"alpha must be positive, got {self.alpha}")
        if self.iterations < 1:
            raise ValidationError("iterations must be >= 1")
        if self.batch_pairs < 1:
            raise ValidationError("batch_pairs must be >= 1")
        if self.feasibility_check_every < 1:
            raise ValidationError("feasibility_check_every must be >= 1")

    @property
    def cadence(self) -> int:
        if self.checkpoint_every is None:
            return max(1, self.iterations // 200)
        return self.checkpoint_every


@dataclass
class TrainReport:
    objective_trace: list = field(default_factory=list)  # (iteration, empirical risk)
    energy_trace: list = field(default_factory=list)  # (iteration, energy)
    feasibility_trace: list = field(default_factory=list)  # (iteration, W_p distance)
    violations: int = 0
    final_ensemble: ParticleEnsemble | None = None

    def to_dict(self, include_ensemble: bool = True) -> dict:
        out = {
            "objective_trace": [[int(i), float(v)] for i, v in self.objective_trace],
            "energy_trace": [[int(i), float(v)] for i, v in self.energy_trace],
            "feasibility_trace": [[int(i), float(v)] for i, v in self.feasibility_trace],
            "violations": self.violations,
        }
        if include_ensemble and self.final_ensemble is not None:
            out["final_ensemble"] = self.final_ensemble.to_dict()
        return out

    def write_trace_csv(self, path, which: str = "objective") -> None:
        trace = getattr(self, f"{which}_trace")
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["iteration", "value"])
            for i, v in trace:
                w.writerow([int(i), f"{float(v):.17g}"])


def _check_pairs(ds: LabeledDataset, ens: ParticleEnsemble):
    if ds.n < 2:
        raise ValidationError("at least two samples are required")
    if ds.dim != ens.dim:
        raise ValidationError(f"dataset dimension {ds.dim} != particle dimension {ens.dim}")


def per_particle_alignment(ds: LabeledDataset, ens: ParticleEnsemble) -> np.ndarray:
    """``a_k = 8/(n(n-1)) sum_{i<j} y_i y_j phi_ik phi_jk`` via feature sums."""
    _check_pairs(ds, ens)
    phi = feature_matrix(ds.features, ens)
    s = ds.labels @ phi
    q = np.einsum("ik,ik->k", phi, phi)
    n = ds.n
    return 8.0 / (n * (n - 1)) * 0.5 * (s**2 - q)


def alignment_statistic(ds: LabeledDataset, ens: ParticleEnsemble) -> float:
    """``8/(n(n-1)) sum_{i<j} y_i y_j K(x_i, x_j)`` in ``O(nN)``."""
    return float(per_particle_alignment(ds, ens).mean())


def empirical_risk(ds: LabeledDataset, ens: ParticleEnsemble, alpha: float) -> float:
    """``8/(n(n-1) alpha) sum_{i<j} (alpha y_i y_j - K(x_i, x_j))^2``."""
    _check_pairs(ds, ens)
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    phi = feature_matrix(ds.features, ens)
    K = phi @ phi.T / ens.n_particles
    y = ds.labels.astype(float)
    iu = np.triu_indices(ds.n, k=1)
    resid = alpha * np.outer(y, y)[iu] - K[iu]
    n = ds.n
    return float(8.0 / (n * (n - 1) * alpha) * np.dot(resid, resid))


def sgd_step(ens: ParticleEnsemble, pair, cfg: TrainConfig) -> ParticleEnsemble:
    """One simultaneous particle update, in place.

    ``pair`` is ``((y, x), (y_tilde, x_tilde))``. The residual
    ``y y_tilde - K(x, x_tilde)/alpha`` is computed once from the pre-update
    particles and shared by all of them; each particle then moves by
    ``(eta/N) * residual * grad_xi(phi(x) phi(x_tilde))``, a descent step on
    the empirical risk.
    """
    (y, x), (yt, xt) = pair
    x = np.asarray(x, dtype=float).ravel()
    xt = np.asarray(xt, dtype=float).ravel()
    xi = ens.particles
    u = xi @ x + ens.phases
    v = xi @ xt + ens.phases
    cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
    k_hat = 2.0 * np.mean(cu * cv)
    resid = y * yt - k_hat / cfg.alpha
    scale = cfg.eta / ens.n_particles * resid
    xi += np.outer(scale * (-2.0 * su * cv), x) + np.outer(scale * (-2.0 * cu * sv), xt)
    if not np.all(np.isfinite(xi)):
        raise NumericalError("non-finite particle after SGD step")
    return ens


def _batch_step(ens: ParticleEnsemble, ys, xs, yts, xts, cfg: TrainConfig):
    """Average of ``len(ys)`` pair updates, all evaluated at the same particles."""
    xi = ens.particles
    U = xs @ xi.T + ens.phases  # (B, N)
    V = xts @ xi.T + ens.phases
    cu, su, cv, sv = np.cos(U), np.sin(U), np.cos(V), np.sin(V)
    k_hat = 2.0 * np.mean(cu * cv, axis=1)
    resid = ys * yts - k_hat / cfg.alpha  # (B,)
    a = -2.0 * su * cv * resid[:, None]
    c = -2.0 * cu * sv * resid[:, None]
    grad = a.T @ xs + c.T @ xts  # (N, D)
    xi += cfg.eta / (ens.n_particles * len(ys)) * grad
    if not np.all(np.isfinite(xi)):
        raise NumericalError("non-finite particle after SGD step")


class PairSampler:
    """Draws ``(y, x), (y~, x~)`` pairs: labels uniform on {-1, +1}, then a uniform
    row of that class from the fixed training set."""

    def __init__(self, ds: LabeledDataset, rng: np.random.Generator):
        self.pos = np.flatnonzero(ds.labels == 1)
        self.neg = np.flatnonzero(ds.labels == -1)
        if len(self.pos) == 0 or len(self.neg) == 0:
            raise ValidationError("training requires both labels to be present")
        self.X = ds.features
        self.rng = rng

    def draw(self, count: int):
        """Return ``(labels, row_indices)`` arrays of shape ``(count, 2)``."""
        labels = self.rng.choice(np.array([-1, 1]), size=(count, 2))
        u = self.rng.random((count, 2))
        pos_pick = self.pos[(u * len(self.pos)).astype(np.int64)]
        neg_pick = self.neg[(u * len(self.neg)).astype(np.int64)]
        return labels, np.where(labels == 1, pos_pick, neg_pick)


def train(ds: LabeledDataset, ens: ParticleEnsemble, cfg: TrainConfig,
          monitor: LabeledDataset | None = None) -> TrainReport:
    """Run ``cfg.iterations`` particle SGD steps on ``ens`` (in place).

    Risk and energy are recorded on ``monitor`` (default: a fixed subsample
    of at most ``cfg.monitor_rows`` rows of ``ds``). With ``cfg.ball`` set,
    the ``W_p`` distance to the initial particles is checked every
    ``cfg.feasibility_check_every`` steps; violations are logged and counted,
    never projected away.
    """
    from .meanfield import energy

    if ds.dim != ens.dim:
        raise ValidationError(f"dataset dimension {ds.dim} != particle dimension {ens.dim}")
    rng = np.random.default_rng(cfg.seed)
    sampler = PairSampler(ds, rng)
    if monitor is None:
        if ds.n > cfg.monitor_rows:
            pick = np.random.default_rng(cfg.seed + 1).choice(ds.n, cfg.monitor_rows, replace=False)
            monitor = ds.subset(np.sort(pick))
        else:
            monitor = ds

    report = TrainReport()
    cadence = cfg.cadence

    def checkpoint(it):
        report.objective_trace.append((it, empirical_risk(monitor, ens, cfg.alpha)))
        report.energy_trace.append((it, energy(monitor, ens, cfg.alpha).e_alpha))

    def feasibility(it):
        check = in_ball(ens, cfg.ball)
        report.feasibility_trace.append((it, check.distance))
        if not check.inside:
            report.violations += 1
            log.warning("iteration %d: W_%d distance %.4g exceeds ball radius %.4g",
                        it, cfg.ball.order, check.distance, cfg.ball.radius)

    checkpoint(0)
    if cfg.ball is not None:
        feasibility(0)

    X = ds.features
    chunk = 4096
    B = cfg.batch_pairs
    done = 0
    while done < cfg.iterations:
        todo = min(chunk, cfg.iterations - done)
        labels, idx = sampler.draw(todo * B)
        for s in range(todo):
            if B == 1:
                i, j = idx[s]
                sgd_step(ens, ((labels[s, 0], X[i]), (labels[s, 1], X[j])), cfg)
            else:
                sl = slice(s * B, (s + 1) * B)
                _batch_step(ens, labels[sl, 0].astype(float), X[idx[sl, 0]],
                            labels[sl, 1].astype(float), X[idx[sl, 1]], cfg)
            it = done + s + 1
            if cadence and it % cadence == 0 and it != cfg.iterations:
                checkpoint(it)
            if cfg.ball is not None and it % cfg.feasibility_check_every == 0:
                feasibility(it)
        done += todo

    checkpoint(cfg.iterations)
    if cfg.ball is not None and cfg.iterations % cfg.feasibility_check_every != 0:
        feasibility(cfg.iterations)
    report.final_ensemble = ens
    return report
