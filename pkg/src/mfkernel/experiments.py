"""End-to-end experiment pipelines shared by the CLI and the acceptance suite."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .align import TrainConfig, train
from .baselines import knn_bandwidth, optimize_weights
from .data import (LabeledDataset, SyntheticSpec, load_csv, project, random_projection,
                   sample_norm_threshold, sample_synthetic, train_test_split)
from .exceptions import ValidationError
from .features import ParticleEnsemble
from .mmd import PowerCurve, power_curve
from .svm import error_rate, solve_dual

METHODS = ("sgd", "importance", "knn")


# ------------------------------------------------------------ power before/after


@dataclass
class PowerExperimentConfig:
    lam: float = 0.5
    d: int = 100
    d0: int | None = 50
    m: int = 50
    n: int = 50
    n_particles: int = 100
    trials: int = 100
    n_train: int = 200
    eta: float = 0.1
    alpha: float = 1.0
    iterations: int = 2000
    level: float = 0.95
    tau_points: int = 401
    seed: int = 0


@dataclass
class PowerComparison:
    before: PowerCurve
    after: PowerCurve
    tau_before: float
    tau_after: float
    sigma: float

    @property
    def improved(self) -> bool:
        return self.tau_after > self.tau_before


def power_before_after(cfg: PowerExperimentConfig) -> PowerComparison:
    """Power curves of the kNN-initialised kernel before and after particle training.

    Both curves share the threshold grid and the trial draws, so the only
    difference is the ensemble.
    """
    spec = SyntheticSpec(cfg.d, cfg.lam, cfg.seed, cfg.d0)
    proj = random_projection(cfg.d0, cfg.d, seed=cfg.seed) if cfg.d0 is not None else None
    half = cfg.n_train // 2
    raw = sample_synthetic(spec, half, cfg.n_train - half)
    tr = project(raw, proj) if proj is not None else raw
    sigma = knn_bandwidth(tr, 3).sigma
    ens = ParticleEnsemble.gaussian(cfg.n_particles, tr.dim, sigma, seed=cfg.seed)
    trial_seed = cfg.seed + 10_000
    probe = power_curve(spec, ens, proj, [0.0], cfg.m, cfg.n, cfg.trials, trial_seed)
    trained = ens.copy()
    train(tr, trained, TrainConfig(eta=cfg.eta, alpha=cfg.alpha, iterations=cfg.iterations,
                                   seed=cfg.seed, checkpoint_every=0))
    probe2 = power_curve(spec, trained, proj, [0.0], cfg.m, cfg.n, cfg.trials, trial_seed)
    hi = max(probe.statistics_h1.max(), probe2.statistics_h1.max(), 0.0)
    lo = min(probe.statistics_h0.min(), probe2.statistics_h0.min(), 0.0)
    taus = np.linspace(lo, hi, cfg.tau_points)
    before = power_curve(spec, ens, proj, taus, cfg.m, cfg.n, cfg.trials, trial_seed)
    after = power_curve(spec, trained, proj, taus, cfg.m, cfg.n, cfg.trials, trial_seed)
    return PowerComparison(before, after, before.largest_tau_with_power(cfg.level),
                           after.largest_tau_with_power(cfg.level), sigma)


# ------------------------------------------------------------ classification bench


@dataclass
class BenchConfig:
    task: str = "norm-threshold"
    d: int = 10
    n_features: int = 1000
    n_train: int = 1000
    n_test: int = 500
    trials: int = 10
    methods: tuple = METHODS
    C: float = 1.0
    eta: float = 1.0
    alpha: float = 1.0
    iterations: int = 10_000
    r_chi: float = 1.0
    k: int = 3
    seed: int = 0
    csv_path: str | None = None
    label_column: int | str = -1

    def __post_init__(self):
        self.methods = tuple(self.methods)
        bad = [m for m in self.methods if m not in METHODS]
        if bad:
            raise ValidationError(f"unknown methods {bad}; choose from {list(METHODS)}")
        if self.task not in ("norm-threshold", "csv"):
            raise ValidationError(f"unknown task {self.task!r}")
        if self.task == "csv" and not self.csv_path:
            raise ValidationError("the csv task needs csv_path")
        if self.trials < 1:
            raise ValidationError("trials must be >= 1")


@dataclass
class BenchResult:
    config: BenchConfig
    rows: list = field(default_factory=list)  # dicts: trial, method, train_error, test_error, seconds

    def errors(self, method: str, which: str = "test_error") -> np.ndarray:
        return np.array([r[which] for r in self.rows if r["method"] == method])

    def summary(self) -> dict:
        out = {}
        for m in self.config.methods:
            out[m] = {}
            for key in ("train_error", "test_error", "seconds"):
                v = self.errors(m, key)
                out[m][key] = {"mean": float(v.mean()), "std": float(v.std(ddof=1)) if len(v) > 1 else 0.0}
        return out

    def to_dict(self) -> dict:
        cfg = asdict(self.config)
        cfg["methods"] = list(self.config.methods)
        return {"config": cfg, "summary": self.summary(), "per_trial": self.rows}


def _trial_data(cfg: BenchConfig, trial: int):
    if cfg.task == "norm-threshold":
        base = cfg.seed * 1_000_003 + trial
        return (sample_norm_threshold(cfg.d, cfg.n_train, seed=2 * base),
                sample_norm_threshold(cfg.d, cfg.n_test, seed=2 * base + 1))
    ds = load_csv(cfg.csv_path, label_column=cfg.label_column)
    n_train = min(cfg.n_train, ds.n - 1)
    tr, te = train_test_split(ds, n_train, seed=cfg.seed * 1_000_003 + trial)
    if te.n > cfg.n_test:
        te = te.subset(np.arange(cfg.n_test))
    return tr, te


def run_bench(cfg: BenchConfig, progress=None) -> BenchResult:
    """Train an SVM per method and trial; all methods start from one kNN-scaled ensemble.

    The kNN bandwidth is computed once per trial and its cost is charged to
    every method, since each of them needs it for the base ensemble.
    """
    result = BenchResult(cfg)
    for trial in range(cfg.trials):
        tr, te = _trial_data(cfg, trial)
        t0 = time.perf_counter()
        rule = knn_bandwidth(tr, cfg.k, seed=cfg.seed + trial)
        base = ParticleEnsemble.gaussian(cfg.n_features, tr.dim, rule.sigma,
                                         seed=cfg.seed * 1_000_003 + trial)
        t_bw = time.perf_counter() - t0
        for method in cfg.methods:
            t0 = time.perf_counter()
            scale = None
            ens = base
            if method == "importance":
                scale = optimize_weights(tr, base, cfg.r_chi).scaled_ensemble_weights()
            elif method == "sgd":
                ens = base.copy()
                train(tr, ens, TrainConfig(eta=cfg.eta, alpha=cfg.alpha, iterations=cfg.iterations,
                                           seed=cfg.seed * 1_000_003 + trial, checkpoint_every=0))
            model = solve_dual(tr, ens, C=cfg.C, feature_scale=scale)
            seconds = time.perf_counter() - t0 + t_bw
            row = {"trial": trial, "method": method, "train_error": error_rate(model, tr),
                   "test_error": error_rate(model, te), "seconds": seconds, "sigma2": rule.sigma2}
            result.rows.append(row)
            if progress is not None:
                progress(row)
    return result


def ordering_wins(result: BenchResult, winner: str, loser: str) -> int:
    """Trials in which ``winner`` has strictly lower test error than ``loser``."""
    a = {r["trial"]: r["test_error"] for r in result.rows if r["method"] == winner}
    b = {r["trial"]: r["test_error"] for r in result.rows if r["method"] == loser}
    return sum(a[t] < b[t] for t in a)


def labeled_from_spec(spec: SyntheticSpec, n_pos: int, n_neg: int) -> LabeledDataset:
    """Synthetic dataset, projected when ``spec`` declares a projection dimension."""
    ds = sample_synthetic(spec, n_pos, n_neg)
    if spec.projection_dim is not None:
        ds = project(ds, random_projection(spec.projection_dim, spec.dim, seed=spec.seed))
    return ds
