"""Soft-margin SVM dual over the random-feature Gram matrix.

The dual ``max <beta, 1> - 1/2 beta^T (K o y y^T) beta`` subject to
``<beta, y> = 0`` and ``0 <= beta <= C`` is solved by SMO with second-order
working-pair selection. Kernel rows are computed from the feature matrix on
demand and kept in a bounded LRU cache.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .data import LabeledDataset
from .exceptions import BudgetError, ValidationError
from .features import ParticleEnsemble, feature_matrix

TAU = 1e-12


@dataclass
class SvmModel:
    beta: np.ndarray
    C: float
    bias: float
    support_indices: np.ndarray
    ensemble: ParticleEnsemble
    train_features: np.ndarray  # support rows only
    support_labels: np.ndarray
    objective_trace: list = field(default_factory=list)
    iterations: int = 0
    converged: bool = True
    feature_scale: np.ndarray | None = None  # per-particle column scaling (importance weights)

    def __post_init__(self):
        # w = (1/N) Phi_s^T (beta_s * y_s): margins then cost O(N) per point
        phi = _features(self.train_features, self.ensemble, self.feature_scale)
        coef = self.beta[self.support_indices] * self.support_labels
        self._w = phi.T @ coef / self.ensemble.n_particles if len(coef) else np.zeros(self.ensemble.n_particles)

    def decision_function(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if X.shape[1] != self.ensemble.dim:
            raise ValidationError(f"input dimension {X.shape[1]} != model dimension {self.ensemble.dim}")
        return _features(X, self.ensemble, self.feature_scale) @ self._w + self.bias

    def to_dict(self) -> dict:
        return {
            "C": self.C,
            "bias": self.bias,
            "beta": self.beta.tolist(),
            "support_indices": self.support_indices.tolist(),
            "support_rows": self.train_features.tolist(),
            "support_labels": self.support_labels.tolist(),
            "ensemble": self.ensemble.to_dict(),
            "feature_scale": None if self.feature_scale is None else self.feature_scale.tolist(),
            "iterations": self.iterations,
            "converged": self.converged,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "SvmModel":
        scale = data.get("feature_scale")
        return cls(
            beta=np.asarray(data["beta"], dtype=float),
            C=float(data["C"]),
            bias=float(data["bias"]),
            support_indices=np.asarray(data["support_indices"], dtype=np.int64),
            ensemble=ParticleEnsemble.from_dict(data["ensemble"]),
            train_features=np.asarray(data["support_rows"], dtype=float).reshape(
                len(data["support_indices"]), -1),
            support_labels=np.asarray(data["support_labels"], dtype=np.int64),
            feature_scale=None if scale is None else np.asarray(scale, dtype=float),
            iterations=int(data.get("iterations", 0)),
            converged=bool(data.get("converged", True)),
        )


def _features(X, ens, scale):
    phi = feature_matrix(X, ens)
    return phi if scale is None else phi * scale


class _KernelRows:
    """LRU cache of rows of ``K = Phi Phi^T / N``."""

    def __init__(self, phi: np.ndarray, capacity: int):
        self.phi = phi
        self.N = phi.shape[1]
        self.capacity = max(2, capacity)
        self.rows: OrderedDict[int, np.ndarray] = OrderedDict()
        self.diag = np.einsum("ik,ik->i", phi, phi) / self.N

    def __getitem__(self, i: int) -> np.ndarray:
        row = self.rows.get(i)
        if row is not None:
            self.rows.move_to_end(i)
            return row
        row = self.phi @ self.phi[i] / self.N
        self.rows[i] = row
        if len(self.rows) > self.capacity:
            self.rows.popitem(last=False)
        return row


def dual_objective(beta, y, K) -> float:
    """``<beta, 1> - 1/2 beta^T (K o y y^T) beta`` for an explicit Gram matrix."""
    by = beta * y
    return float(beta.sum() - 0.5 * by @ K @ by)


def solve_dual(ds: LabeledDataset, ens: ParticleEnsemble, C: float = 1.0, tol: float = 1e-3,
               max_iter: int = 1_000_000, cache_rows: int = 4096,
               feature_scale: np.ndarray | None = None) -> SvmModel:
    """Train on ``ds`` with kernel ``(1/N) Phi Phi^T`` of the frozen ensemble.

    Stops when the maximal KKT violation ``m(beta) - M(beta)`` drops below
    ``tol``. Raises :class:`BudgetError` carrying the last iterate after
    ``max_iter`` pair updates.
    """
    if ds.n < 2:
        raise ValidationError("at least two training points are required")
    if not C > 0:
        raise ValidationError(f"C must be positive, got {C}")
    y = ds.labels.astype(float)
    if np.all(y == 1) or np.all(y == -1):
        raise ValidationError("both classes must be present")
    if ds.dim != ens.dim:
        raise ValidationError(f"dataset dimension {ds.dim} != particle dimension {ens.dim}")

    frozen = ens.copy()
    phi = _features(ds.features, frozen, feature_scale)
    K = _KernelRows(phi, cache_rows)
    n = ds.n
    beta = np.zeros(n)
    G = -np.ones(n)  # gradient of 1/2 b^T Q b - 1^T b
    is_pos = y > 0
    trace = [0.0]
    converged = False
    it = 0

    while it < max_iter:
        # I_up: beta can move up along y; I_low: can move down
        up = np.where(is_pos, beta < C, beta > 0)
        low = np.where(is_pos, beta > 0, beta < C)
        yG = -y * G
        if not up.any() or not low.any():
            converged = True
            break
        i = int(np.argmax(np.where(up, yG, -np.inf)))
        m_val = yG[i]
        M_val = np.min(np.where(low, yG, np.inf))
        if m_val - M_val < tol:
            converged = True
            break

        Ki = K[i]
        b_t = m_val - yG  # > 0 on candidates
        cand = low & (b_t > 0)
        a_t = K.diag[i] + K.diag - 2.0 * Ki
        a_t = np.where(a_t > 0, a_t, TAU)
        score = np.where(cand, -(b_t**2) / a_t, np.inf)
        j = int(np.argmin(score))
        Kj = K[j]

        yi, yj = y[i], y[j]
        a = max(K.diag[i] + K.diag[j] - 2.0 * Ki[j], TAU)
        old_i, old_j = beta[i], beta[j]
        # optimal step along the feasible direction, then clip to the box
        if yi != yj:
            delta = (-G[i] - G[j]) / a
            diff = old_i - old_j
            new_i, new_j = old_i + delta, old_j + delta
            if diff > 0:
                if new_j < 0:
                    new_j, new_i = 0.0, diff
            elif new_i < 0:
                new_i, new_j = 0.0, -diff
            if diff > 0:
                if new_i > C:
                    new_i, new_j = C, C - diff
            elif new_j > C:
                new_j, new_i = C, C + diff
        else:
            delta = (G[i] - G[j]) / a
            total = old_i + old_j
            new_i, new_j = old_i - delta, old_j + delta
            if total > C:
                if new_i > C:
                    new_i, new_j = C, total - C
            elif new_j < 0:
                new_j, new_i = 0.0, total
            if total > C:
                if new_j > C:
                    new_j, new_i = C, total - C
            elif new_i < 0:
                new_i, new_j = 0.0, total

        beta[i], beta[j] = new_i, new_j
        di, dj = new_i - old_i, new_j - old_j
        # Q_ik = y_i y_k K_ik
        G += y * (yi * di * Ki + yj * dj * Kj)
        it += 1
        trace.append(0.5 * float(beta.sum() - beta @ G))

    bias = _bias(beta, G, y, C)
    model = _build_model(ds, frozen, beta, C, bias, trace, it, converged, feature_scale)
    if not converged:
        raise BudgetError(f"SMO did not reach tol={tol} within {max_iter} updates", partial=model)
    return model


def _bias(beta, G, y, C) -> float:
    yG = y * G
    free = (beta > 0) & (beta < C)
    if free.any():
        rho = float(yG[free].mean())
    else:
        at_upper = beta >= C
        ub_mask = np.where(at_upper, y < 0, y > 0)
        lb_mask = np.where(at_upper, y > 0, y < 0)
        ub = yG[ub_mask].min() if ub_mask.any() else np.inf
        lb = yG[lb_mask].max() if lb_mask.any() else -np.inf
        if np.isfinite(ub) and np.isfinite(lb):
            rho = 0.5 * (ub + lb)
        else:
            rho = float(ub if np.isfinite(ub) else lb if np.isfinite(lb) else 0.0)
    return -rho


def _build_model(ds, ens, beta, C, bias, trace, it, converged, feature_scale):
    sv = np.flatnonzero(beta > 1e-12 * C)
    return SvmModel(
        beta=beta,
        C=float(C),
        bias=float(bias),
        support_indices=sv,
        ensemble=ens,
        train_features=ds.features[sv].copy(),
        support_labels=ds.labels[sv].copy(),
        objective_trace=trace,
        iterations=it,
        converged=converged,
        feature_scale=None if feature_scale is None else np.asarray(feature_scale, dtype=float),
    )


def predict(model: SvmModel, x):
    """``(label, margin)`` for one point; ``sign(0)`` maps to +1."""
    margin = float(model.decision_function(np.asarray(x, dtype=float).reshape(1, -1))[0])
    return (1 if margin >= 0 else -1), margin


def predict_labels(model: SvmModel, X) -> np.ndarray:
    return np.where(model.decision_function(X) >= 0, 1, -1)


def error_rate(model: SvmModel, ds: LabeledDataset) -> float:
    return float(np.mean(predict_labels(model, ds.features) != ds.labels))


def kkt_violation(model: SvmModel, ds: LabeledDataset) -> float:
    """Maximal violating-pair gap ``m(beta) - M(beta)`` recomputed from scratch."""
    phi = _features(ds.features, model.ensemble, model.feature_scale)
    K = phi @ phi.T / model.ensemble.n_particles
    y = ds.labels.astype(float)
    beta = model.beta
    G = y * (K @ (beta * y)) - 1.0
    is_pos = y > 0
    up = np.where(is_pos, beta < model.C, beta > 0)
    low = np.where(is_pos, beta > 0, beta < model.C)
    yG = -y * G
    if not up.any() or not low.any():
        return 0.0
    return float(max(0.0, yG[up].max() - yG[low].min()))


def ridge_fit(phi: np.ndarray, targets: np.ndarray, reg: float = 1e-3) -> np.ndarray:
    """Ridge regression weights on a random-feature matrix (regression extension)."""
    N = phi.shape[1]
    A = phi.T @ phi / len(targets) + reg * np.eye(N)
    return np.linalg.solve(A, phi.T @ targets / len(targets))
