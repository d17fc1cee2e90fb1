"""Command-line front end.

Every subcommand resolves its parameters from (lowest to highest priority)
the model defaults, the top-level keys of an optional YAML config file, the
file's section named after the subcommand, and explicit flags. The resolved
configuration is validated before anything runs, written into every JSON
artifact together with its SHA-256, and a one-line JSON summary is printed.

Exit codes: 0 success, 1 invalid input, 2 numerical or budget failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import typing
from pathlib import Path
from typing import Optional

import numpy as np
import pydantic
import yaml
from pydantic import BaseModel, ConfigDict, Field, field_validator

from . import __version__
from .artifacts import RunDir, output_root
from .exceptions import BudgetError, NumericalError, ValidationError

log = logging.getLogger("mfkernel")

COMMANDS = ("synth", "train-kernel", "two-sample", "power-curve", "svm", "bench",
            "generate", "pde", "chaos")


def _split_list(v):
    if isinstance(v, str):
        return [s.strip() for s in v.split(",") if s.strip()]
    return v


class _Config(BaseModel):
    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    seed: int = 0
    out: Optional[str] = Field(None, description="output directory")


class SynthConfig(_Config):
    lam: float = Field(0.5, alias="lambda")
    d: int = Field(2, ge=1)
    d0: Optional[int] = Field(None, ge=1)
    n_pos: int = Field(100, ge=1)
    n_neg: int = Field(100, ge=1)


class _DataSource(_Config):
    data: Optional[str] = Field(None, description="CSV file; synthetic data when omitted")
    label_column: str = "-1"
    lam: float = Field(0.5, alias="lambda")
    d: int = Field(2, ge=1)
    d0: Optional[int] = Field(None, ge=1)
    n_pos: int = Field(200, ge=1)
    n_neg: int = Field(200, ge=1)


class TrainKernelConfig(_DataSource):
    n_features: int = Field(200, ge=1)
    sigma: Optional[float] = Field(None, gt=0, description="particle scale; kNN rule when omitted")
    eta: float = Field(1.0, gt=0)
    alpha: float = Field(1.0, gt=0)
    iterations: int = Field(1000, ge=1)
    batch_pairs: int = Field(1, ge=1)
    ball_radius: Optional[float] = Field(None, gt=0)
    ball_order: int = 2
    check_every: int = Field(100, ge=1)
    checkpoint_every: Optional[int] = Field(None, ge=0)


class TwoSampleConfig(_Config):
    lam: float = Field(0.5, alias="lambda")
    d: int = Field(100, ge=1)
    d0: Optional[int] = Field(50, ge=0)  # 0 disables the projection
    m: int = Field(50, ge=2)
    n: int = Field(50, ge=2)
    n_features: int = Field(100, ge=1)
    sigma: Optional[float] = Field(None, gt=0)
    tau: float = 0.0
    ensemble: Optional[str] = None

    @field_validator("d0")
    @classmethod
    def _no_projection(cls, v):
        return None if v == 0 else v


class PowerCurveConfig(_Config):
    lam: float = Field(0.5, alias="lambda")
    d: int = Field(100, ge=1)
    d0: Optional[int] = Field(50, ge=0)  # 0 disables the projection
    m: int = Field(50, ge=2)
    n: int = Field(50, ge=2)
    taus: str = "0:0.2:21"
    trials: int = Field(100, ge=10)
    n_features: int = Field(100, ge=1)
    sigma: Optional[float] = Field(None, gt=0)
    ensemble: Optional[str] = None
    train_iterations: int = Field(0, ge=0)
    n_train: int = Field(200, ge=2)
    eta: float = Field(0.1, gt=0)
    alpha: float = Field(1.0, gt=0)

    @field_validator("d0")
    @classmethod
    def _no_projection(cls, v):
        return None if v == 0 else v


class SvmConfig(_Config):
    data: Optional[str] = None
    label_column: str = "-1"
    task: str = "norm-threshold"
    d: int = Field(10, ge=1)
    n_train: int = Field(1000, ge=2)
    n_test: int = Field(500, ge=1)
    n_features: int = Field(1000, ge=1)
    sigma: Optional[float] = Field(None, gt=0)
    ensemble: Optional[str] = None
    C: float = Field(1.0, gt=0)
    tol: float = Field(1e-3, gt=0)
    max_iter: int = Field(1_000_000, ge=1)


class BenchCliConfig(_Config):
    methods: list[str] = ["sgd", "importance", "knn"]
    task: str = "norm-threshold"
    csv: Optional[str] = None
    label_column: str = "-1"
    d: int = Field(10, ge=1)
    n_features: int = Field(1000, ge=1)
    n_train: int = Field(1000, ge=2)
    n_test: int = Field(500, ge=1)
    trials: int = Field(10, ge=1)
    C: float = Field(1.0, gt=0)
    eta: float = Field(1.0, gt=0)
    alpha: float = Field(1.0, gt=0)
    iterations: int = Field(10_000, ge=1)
    r_chi: float = Field(1.0, gt=0)
    k: int = Field(3, ge=1)

    @field_validator("methods", mode="before")
    @classmethod
    def _split(cls, v):
        return _split_list(v)


class GenerateConfig(_Config):
    d: int = Field(2, ge=1)
    lam: float = Field(0.5, alias="lambda", description="target is N(0, (1 + lambda) I)")
    outer_steps: int = Field(8000, ge=1)
    inner_steps: int = Field(5, ge=1)
    batch: int = Field(64, ge=2)
    lr: float = Field(5e-5, gt=0)
    alpha: float = Field(100.0, gt=0)
    eta: float = Field(0.1, gt=0)
    n_features: int = Field(100, ge=1)
    sigma: float = Field(1.0, gt=0)
    check_every: int = Field(10, ge=1)


class PdeConfig(_Config):
    lam: float = Field(0.5, alias="lambda")
    n_data: int = Field(200, ge=2)
    particles: list[int] = [200, 2000]
    horizon: float = Field(1.0, gt=0)
    eta: float = Field(1.0, gt=0)
    alpha: float = Field(1.0, gt=0)
    sigma: float = Field(1.0, gt=0)
    cells: int = Field(400, ge=3)
    dt: float = Field(0.005, gt=0)
    phases: int = Field(8, ge=1)

    @field_validator("particles", mode="before")
    @classmethod
    def _split(cls, v):
        return _split_list(v)


class ChaosConfig(_Config):
    lam: float = Field(0.5, alias="lambda")
    ns: list[int] = Field([10, 100, 1000], alias="Ns")
    replicas: int = Field(1000, ge=30)
    t: float = Field(0.3, gt=0)
    eta: float = Field(10.0, gt=0)
    alpha: float = Field(1.0, gt=0)
    n_data: int = Field(200, ge=2)
    sigma: float = Field(1.0, gt=0)

    @field_validator("ns", mode="before")
    @classmethod
    def _split(cls, v):
        return _split_list(v)


HELP = {
    "synth": "sample the two-Gaussian synthetic dataset to CSV",
    "train-kernel": "move random-feature particles by SGD on the alignment risk",
    "two-sample": "one MMD two-sample test on synthetic samples",
    "power-curve": "power and type-I rate of the MMD test over a threshold grid",
    "svm": "dual SVM on the random-feature Gram matrix",
    "bench": "compare SGD, importance sampling and kNN-bandwidth kernels",
    "generate": "train an affine generator against the learned kernel",
    "pde": "one-dimensional density evolution versus particle SGD",
    "chaos": "cross-particle dependence score versus ensemble size",
}

CONFIGS = {
    "synth": SynthConfig,
    "train-kernel": TrainKernelConfig,
    "two-sample": TwoSampleConfig,
    "power-curve": PowerCurveConfig,
    "svm": SvmConfig,
    "bench": BenchCliConfig,
    "generate": GenerateConfig,
    "pde": PdeConfig,
    "chaos": ChaosConfig,
}


# ------------------------------------------------------------ argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _flag(name: str, info) -> str:
    return "--" + (info.alias or name).replace("_", "-")


def _base_type(annotation):
    args = [a for a in typing.get_args(annotation) if a is not type(None)]
    if typing.get_origin(annotation) is list or (args and typing.get_origin(args[0]) is list):
        return str  # comma-separated, split by the model
    if args:
        return args[0]
    return annotation


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mfkernel", description="Particle-based random-feature kernel learning.")
    parser.add_argument("--version", action="version", version=f"mfkernel {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for cmd, model in CONFIGS.items():
        p = sub.add_parser(cmd, help=HELP[cmd])
        p.add_argument("--config", help="YAML file; flags override it")
        p.add_argument("-v", "--verbose", action="store_true")
        for name, info in model.model_fields.items():
            typ = _base_type(info.annotation)
            if typ is bool:
                p.add_argument(_flag(name, info), dest=name, action=argparse.BooleanOptionalAction, default=None)
            else:
                p.add_argument(_flag(name, info), dest=name, type=typ, default=None,
                               help=info.description)
    return parser


def _normalise_keys(section: dict, model) -> dict:
    aliases = {info.alias: name for name, info in model.model_fields.items() if info.alias}
    out = {}
    for key, value in section.items():
        k = str(key).replace("-", "_")
        out[aliases.get(k, aliases.get(str(key), k))] = value
    return out


def resolve_config(command: str, args: argparse.Namespace):
    model = CONFIGS[command]
    values: dict = {}
    if args.config:
        try:
            raw = yaml.safe_load(Path(args.config).read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ValidationError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ValidationError("config file must hold a mapping")
        fields = set(model.model_fields) | {i.alias for i in model.model_fields.values() if i.alias}
        for key, value in raw.items():
            if key in COMMANDS:
                continue
            if isinstance(value, dict):
                raise ValidationError(f"unknown config section {key!r}")
            if str(key).replace("-", "_") not in fields:
                raise ValidationError(f"unknown config key {key!r} for {command}")
        values.update(_normalise_keys({k: v for k, v in raw.items() if k not in COMMANDS}, model))
        section = raw.get(command) or {}
        if not isinstance(section, dict):
            raise ValidationError(f"config section {command!r} must be a mapping")
        values.update(_normalise_keys(section, model))
    for name in model.model_fields:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    try:
        return model.model_validate(values)
    except pydantic.ValidationError as exc:
        raise ValidationError(str(exc)) from exc


def _echo(cfg) -> dict:
    # the output location is not part of the experiment
    return cfg.model_dump(by_alias=True, exclude={"out"})


def _run_dir(command: str, cfg) -> RunDir:
    path = Path(cfg.out) if cfg.out else output_root() / command
    return RunDir(path, command, _echo(cfg))


# ------------------------------------------------------------ helpers


def _label_column(text: str):
    try:
        return int(text)
    except ValueError:
        return text


def _synthetic(cfg, n_pos=None, n_neg=None):
    from .data import SyntheticSpec
    from .experiments import labeled_from_spec

    spec = SyntheticSpec(cfg.d, cfg.lam, cfg.seed, cfg.d0)
    return spec, labeled_from_spec(spec, n_pos or cfg.n_pos, n_neg or cfg.n_neg)


def _dataset(cfg):
    from .data import load_csv

    if cfg.data:
        return load_csv(cfg.data, label_column=_label_column(cfg.label_column))
    return _synthetic(cfg)[1]


def _base_ensemble(n_features: int, data, sigma, seed: int):
    from .baselines import knn_bandwidth
    from .features import ParticleEnsemble

    X = data.features if hasattr(data, "features") else data
    if sigma is None:
        sigma = knn_bandwidth(X, 3, seed=seed).sigma if X.shape[0] > 3 else 1.0
    return ParticleEnsemble.gaussian(n_features, X.shape[1], sigma, seed=seed), float(sigma)


def _dataset_rows(ds):
    for x, y in zip(ds.features, ds.labels):
        yield [*x.tolist(), int(y)]


# ------------------------------------------------------------ subcommands


def cmd_synth(cfg: SynthConfig) -> dict:
    from .data import kl_gaussian_classes

    spec, ds = _synthetic(cfg)
    run = _run_dir("synth", cfg)
    header = [f"x{i}" for i in range(ds.dim)] + ["label"]
    run.csv("data.csv", header, _dataset_rows(ds))
    run.json("summary.json", {"dataset": ds.summary(), "kl": kl_gaussian_classes(spec)})
    run.finish()
    return {"n": ds.n, "dim": ds.dim, "out": str(run.path)}


def cmd_train_kernel(cfg: TrainKernelConfig) -> dict:
    from .align import TrainConfig, train
    from .features import save_ensemble
    from .wasserstein import BallSpec

    ds = _dataset(cfg)
    ens, sigma = _base_ensemble(cfg.n_features, ds, cfg.sigma, cfg.seed)
    ball = BallSpec(cfg.ball_radius, cfg.ball_order) if cfg.ball_radius is not None else None
    tcfg = TrainConfig(eta=cfg.eta, alpha=cfg.alpha, iterations=cfg.iterations,
                       batch_pairs=cfg.batch_pairs, seed=cfg.seed, ball=ball,
                       feasibility_check_every=cfg.check_every, checkpoint_every=cfg.checkpoint_every)
    report = train(ds, ens, tcfg)
    run = _run_dir("train-kernel", cfg)
    run.raw("ensemble.json", lambda p: save_ensemble(ens, p))
    run.csv("objective.csv", ["iteration", "risk"], report.objective_trace)
    run.csv("energy.csv", ["iteration", "energy"], report.energy_trace)
    if ball is not None:
        run.csv("feasibility.csv", ["iteration", "distance"], report.feasibility_trace)
    payload = report.to_dict(include_ensemble=False)
    payload.update({"sigma": sigma, "ensemble_fingerprint": ens.fingerprint()})
    run.json("report.json", payload)
    run.finish()
    return {"risk_start": report.objective_trace[0][1], "risk_end": report.objective_trace[-1][1],
            "violations": report.violations, "out": str(run.path)}


def _load_or_build_ensemble(path, n_features, data, sigma, seed):
    from .features import load_ensemble

    if path:
        try:
            return load_ensemble(path), None
        except (OSError, json.JSONDecodeError, KeyError) as exc:
            raise ValidationError(f"cannot load ensemble {path}: {exc}") from exc
    return _base_ensemble(n_features, data, sigma, seed)


def cmd_two_sample(cfg: TwoSampleConfig) -> dict:
    from .data import SyntheticSpec, random_projection, sample_class_pair
    from .mmd import TestConfig, mmd_unbiased, two_sample_test

    spec = SyntheticSpec(cfg.d, cfg.lam, cfg.seed, cfg.d0)
    proj = random_projection(cfg.d0, cfg.d, seed=cfg.seed) if cfg.d0 is not None else None
    v, w = sample_class_pair(spec, cfg.m, cfg.n, np.random.default_rng(cfg.seed))
    pooled = np.vstack([v, w]) if proj is None else proj.apply(np.vstack([v, w]))
    ens, sigma = _load_or_build_ensemble(cfg.ensemble, cfg.n_features, pooled, cfg.sigma, cfg.seed)
    stat = mmd_unbiased(v, w, ens, proj)
    decision = two_sample_test(v, w, ens, proj, TestConfig(tau=cfg.tau, trials=1, seed=cfg.seed))
    run = _run_dir("two-sample", cfg)
    run.json("decision.json", {"statistic": stat.value, "within_pos": stat.within_pos,
                               "within_neg": stat.within_neg, "cross": stat.cross,
                               "decision": decision.value, "sigma": sigma})
    run.finish()
    return {"statistic": stat.value, "decision": decision.value, "out": str(run.path)}


def cmd_power_curve(cfg: PowerCurveConfig) -> dict:
    from .align import TrainConfig, train
    from .data import SyntheticSpec, random_projection
    from .experiments import labeled_from_spec
    from .mmd import parse_tau_range, power_curve

    spec = SyntheticSpec(cfg.d, cfg.lam, cfg.seed, cfg.d0)
    proj = random_projection(cfg.d0, cfg.d, seed=cfg.seed) if cfg.d0 is not None else None
    taus = parse_tau_range(cfg.taus)
    tr = labeled_from_spec(spec, cfg.n_train // 2, cfg.n_train - cfg.n_train // 2)
    ens, sigma = _load_or_build_ensemble(cfg.ensemble, cfg.n_features, tr, cfg.sigma, cfg.seed)
    if cfg.train_iterations:
        train(tr, ens, TrainConfig(eta=cfg.eta, alpha=cfg.alpha, iterations=cfg.train_iterations,
                                   seed=cfg.seed, checkpoint_every=0))
    curve = power_curve(spec, ens, proj, taus, cfg.m, cfg.n, cfg.trials, seed=cfg.seed + 10_000)
    run = _run_dir("power-curve", cfg)
    run.csv("power.csv", ["tau", "power", "type1", "trials", "lambda", "N", "m", "n"], curve.rows())
    run.json("power.json", {"sigma": sigma, "tau_at_power_095": curve.largest_tau_with_power(0.95),
                            "statistics_h1": curve.statistics_h1, "statistics_h0": curve.statistics_h0})
    run.finish()
    return {"rows": len(taus), "tau_at_power_095": curve.largest_tau_with_power(0.95),
            "out": str(run.path)}


def cmd_svm(cfg: SvmConfig) -> dict:
    from .data import load_csv, sample_norm_threshold, train_test_split
    from .svm import error_rate, solve_dual

    if cfg.data:
        ds = load_csv(cfg.data, label_column=_label_column(cfg.label_column))
        tr, te = train_test_split(ds, min(cfg.n_train, ds.n - 1), seed=cfg.seed)
    elif cfg.task == "norm-threshold":
        tr = sample_norm_threshold(cfg.d, cfg.n_train, seed=2 * cfg.seed)
        te = sample_norm_threshold(cfg.d, cfg.n_test, seed=2 * cfg.seed + 1)
    else:
        raise ValidationError(f"unknown task {cfg.task!r}; give --data or use norm-threshold")
    ens, sigma = _load_or_build_ensemble(cfg.ensemble, cfg.n_features, tr, cfg.sigma, cfg.seed)
    run = _run_dir("svm", cfg)
    try:
        model = solve_dual(tr, ens, C=cfg.C, tol=cfg.tol, max_iter=cfg.max_iter)
    except BudgetError as exc:
        if exc.partial is not None:
            run.json("model_partial.json", {"model": exc.partial.to_dict()})
            run.finish()
        raise
    metrics = {"train_error": error_rate(model, tr), "test_error": error_rate(model, te),
               "support_vectors": int(len(model.support_indices)), "iterations": model.iterations,
               "sigma": sigma}
    run.json("model.json", {"model": model.to_dict()})
    run.json("metrics.json", metrics)
    run.csv("objective.csv", ["update", "dual_objective"], enumerate(model.objective_trace))
    run.finish()
    return {**{k: metrics[k] for k in ("train_error", "test_error")}, "out": str(run.path)}


def cmd_bench(cfg: BenchCliConfig) -> dict:
    from .experiments import BenchConfig, run_bench

    task = "csv" if cfg.csv else cfg.task
    bcfg = BenchConfig(task=task, d=cfg.d, n_features=cfg.n_features, n_train=cfg.n_train,
                       n_test=cfg.n_test, trials=cfg.trials, methods=tuple(cfg.methods), C=cfg.C,
                       eta=cfg.eta, alpha=cfg.alpha, iterations=cfg.iterations, r_chi=cfg.r_chi,
                       k=cfg.k, seed=cfg.seed, csv_path=cfg.csv,
                       label_column=_label_column(cfg.label_column))
    result = run_bench(bcfg, progress=lambda r: log.info("trial %d %s test error %.4f",
                                                        r["trial"], r["method"], r["test_error"]))
    run = _run_dir("bench", cfg)
    out = result.to_dict()
    run.json("bench.json", {"summary": out["summary"], "per_trial": out["per_trial"]})
    run.csv("per_trial.csv", ["trial", "method", "train_error", "test_error", "seconds"],
            ([r["trial"], r["method"], r["train_error"], r["test_error"], r["seconds"]]
             for r in result.rows))
    run.finish()
    return {m: f"{s['test_error']['mean']:.4f}+-{s['test_error']['std']:.4f}"
            for m, s in out["summary"].items()} | {"out": str(run.path)}


def cmd_generate(cfg: GenerateConfig) -> dict:
    from .data import SyntheticSpec
    from .features import ParticleEnsemble
    from .generative import GeneratorConfig, GeneratorModel, covariance_error, train_generator

    gen = GeneratorModel.identity(cfg.d, lr=cfg.lr)
    ens = ParticleEnsemble.gaussian(cfg.n_features, cfg.d, cfg.sigma, seed=cfg.seed)
    gcfg = GeneratorConfig(outer_steps=cfg.outer_steps, inner_steps=cfg.inner_steps, batch=cfg.batch,
                           eta=cfg.eta, alpha=cfg.alpha, check_every=cfg.check_every, seed=cfg.seed)
    report = train_generator(SyntheticSpec(cfg.d, cfg.lam, cfg.seed), gen, ens, gcfg)
    target = (1.0 + cfg.lam) * np.eye(cfg.d)
    err = covariance_error(gen, target)
    run = _run_dir("generate", cfg)
    run.csv("mmd.csv", ["step", "mmd"], report.mmd_trace)
    run.json("generator.json", {"generator": gen.to_dict(), "steps": report.steps,
                                "aborted": report.aborted, "covariance_error": err})
    run.finish()
    if report.aborted:
        raise NumericalError(f"generator diverged after {report.steps} steps (artifacts in {run.path})")
    return {"covariance_error": err, "steps": report.steps, "out": str(run.path)}


def cmd_pde(cfg: PdeConfig) -> dict:
    from .data import SyntheticSpec, sample_synthetic
    from .meanfield import particle_vs_grid

    ds = sample_synthetic(SyntheticSpec(1, cfg.lam, cfg.seed), cfg.n_data // 2, cfg.n_data - cfg.n_data // 2)
    grid = None
    rows = []
    drift = 0.0
    for N in cfg.particles:
        res = particle_vs_grid(ds, N, horizon=cfg.horizon, alpha=cfg.alpha, eta=cfg.eta, sigma=cfg.sigma,
                               seed=cfg.seed, cells=cfg.cells, dt=cfg.dt, n_phases=cfg.phases, grid=grid)
        if grid is None:
            grid, drift = res.grid, res.mass_drift
        rows.append([N, res.w1])
    run = _run_dir("pde", cfg)
    run.raw("grid.csv", grid.write_csv)
    run.csv("w1.csv", ["N", "w1"], rows)
    run.json("pde.json", {"w1": {str(n): w for n, w in rows}, "mass_drift": drift,
                          "clipped_mass": grid.clipped_mass, "time": grid.time})
    run.finish()
    return {"w1": {str(n): w for n, w in rows}, "mass_drift": drift, "out": str(run.path)}


def cmd_chaos(cfg: ChaosConfig) -> dict:
    from .data import SyntheticSpec
    from .meanfield import chaoticity_probe

    res = chaoticity_probe(SyntheticSpec(1, cfg.lam, cfg.seed), cfg.ns, replicas=cfg.replicas, t=cfg.t,
                           eta=cfg.eta, alpha=cfg.alpha, n_data=cfg.n_data, sigma=cfg.sigma, seed=cfg.seed)
    run = _run_dir("chaos", cfg)
    run.json("chaos.json", res.to_dict())
    run.csv("scores.csv", ["N", "score"], sorted(res.scores.items()))
    run.finish()
    return {"scores": {str(k): v for k, v in res.scores.items()}, "skipped": res.skipped,
            "out": str(run.path)}


HANDLERS = {
    "synth": cmd_synth,
    "train-kernel": cmd_train_kernel,
    "two-sample": cmd_two_sample,
    "power-curve": cmd_power_curve,
    "svm": cmd_svm,
    "bench": cmd_bench,
    "generate": cmd_generate,
    "pde": cmd_pde,
    "chaos": cmd_chaos,
}


def run(argv=None) -> int:
    """Parse ``argv``, execute, print a one-line JSON summary; return the exit code."""
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
        cfg = resolve_config(args.command, args)
        summary = HANDLERS[args.command](cfg)
    except (ValidationError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (NumericalError, BudgetError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    from .artifacts import dumps

    print(json.dumps(json.loads(dumps({"command": args.command, **summary})), sort_keys=True))
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
