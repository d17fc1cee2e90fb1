"""Mean-field diagnostics.

* the empirical energy functional tracked during particle training;
* a one-dimensional finite-volume integrator for the particle density,
  compared against the particle system itself;
* a propagation-of-chaos probe measuring how dependent two particles of the
  same ensemble remain as the ensemble grows.

In one dimension each particle carries a frozen phase, so the density lives
on ``(xi, b)``. The phase is discretised by a fixed set of nodes and each
node owns one density slice of mass ``1/M``; particles compared against the
grid draw their phases from the same nodes.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .data import LabeledDataset, SyntheticSpec, sample_synthetic
from .exceptions import NumericalError, ValidationError
from .features import SQRT2, ParticleEnsemble, feature_matrix

log = logging.getLogger(__name__)

CFL_LIMIT = 0.4
PAIR_CAP = 200


@dataclass(frozen=True)
class EnergyReport:
    e_alpha: float
    polarization: float
    components: tuple  # (linear term, quadratic term)


def energy(ds: LabeledDataset, ens: ParticleEnsemble, alpha: float) -> EnergyReport:
    """Empirical energy ``(quadratic - alpha * polarization) / alpha``.

    ``polarization = mean_k (mean_i y_i phi_ik)^2`` and
    ``quadratic = mean_{k,l} (mean_i phi_ik phi_il)^2``.
    """
    if not alpha > 0:
        raise ValidationError("alpha must be positive")
    phi = feature_matrix(ds.features, ens)
    n, N = phi.shape
    corr = ds.labels @ phi / n
    polarization = float(np.mean(corr**2))
    # ||Phi^T Phi||_F = ||Phi Phi^T||_F; take the smaller Gram
    gram = phi.T @ phi if N <= n else phi @ phi.T
    quadratic = float(np.sum(gram**2) / (n**2 * N**2))
    return EnergyReport((quadratic - alpha * polarization) / alpha, polarization,
                        (polarization, quadratic))


def window_means(trace, window: int) -> tuple[float, float]:
    """Mean of a ``(iteration, value)`` trace over the first and the last ``window`` iterations."""
    its = np.array([i for i, _ in trace], dtype=float)
    vals = np.array([v for _, v in trace], dtype=float)
    if len(its) == 0:
        raise ValidationError("empty trace")
    first = vals[its < its[0] + window]
    last = vals[its > its[-1] - window]
    return float(first.mean()), float(last.mean())


# ---------------------------------------------------------------- grid PDE


@dataclass
class GridDensity:
    """Cell-centred density on ``[x_min, x_max]`` split into ``cells`` cells.

    ``density`` has one row per phase node; the marginal density over ``xi``
    is the row sum and integrates to one.
    """

    x_min: float
    x_max: float
    cells: int
    density: np.ndarray
    dt: float
    phases: tuple = (0.0,)
    time: float = 0.0
    clipped_mass: float = 0.0

    def __post_init__(self):
        if not self.x_max > self.x_min:
            raise ValidationError("x_max must exceed x_min")
        if self.cells < 3:
            raise ValidationError("need at least three cells")
        if not self.dt > 0:
            raise ValidationError("dt must be positive")
        self.density = np.atleast_2d(np.asarray(self.density, dtype=float))
        self.phases = tuple(float(p) for p in self.phases)
        if self.density.shape != (len(self.phases), self.cells):
            raise ValidationError(
                f"density shape {self.density.shape} != ({len(self.phases)}, {self.cells})")
        if np.any(self.density < 0) or not np.all(np.isfinite(self.density)):
            raise ValidationError("density must be finite and nonnegative")

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.cells

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.cells) + 0.5) * self.dx

    @property
    def marginal(self) -> np.ndarray:
        return self.density.sum(axis=0)

    def mass(self) -> float:
        return float(self.density.sum() * self.dx)

    @classmethod
    def gaussian(cls, sigma: float = 1.0, cells: int = 400, half_width: float = 8.0,
                 dt: float = 0.01, phases=(0.0,)) -> "GridDensity":
        """Cell averages of ``N(0, 1/sigma^2)`` on ``[-half_width/sigma, half_width/sigma]``,
        split evenly across the phase nodes."""
        if not sigma > 0:
            raise ValidationError("sigma must be positive")
        from scipy.stats import norm

        x_max = half_width / sigma
        edges = np.linspace(-x_max, x_max, cells + 1)
        cdf = norm.cdf(edges, scale=1.0 / sigma)
        cell_mass = np.diff(cdf)
        cell_mass /= cell_mass.sum()
        dx = edges[1] - edges[0]
        M = len(tuple(phases))
        dens = np.tile(cell_mass / dx / M, (M, 1))
        return cls(-x_max, x_max, cells, dens, dt, tuple(phases))

    def write_csv(self, path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh)
            w.writerow(["center", "density"])
            for c, p in zip(self.centers, self.marginal):
                w.writerow([f"{c:.17g}", f"{p:.17g}"])


def phase_nodes(count: int) -> tuple:
    """``count`` equispaced phases in ``[-pi, pi)``."""
    if count < 1:
        raise ValidationError("need at least one phase node")
    return tuple(-math.pi + 2.0 * math.pi * (np.arange(count) + 0.5) / count)


def pair_weights(ds: LabeledDataset) -> np.ndarray:
    """Sampling probability of each row: label uniform on {-1, +1}, then a uniform row of that class."""
    pos = ds.labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValidationError("both labels must be present")
    return np.where(pos, 0.5 / n_pos, 0.5 / n_neg)


def _balanced_subsample(ds: LabeledDataset, cap: int, seed: int) -> LabeledDataset:
    if ds.n <= cap:
        return ds
    rng = np.random.default_rng(seed)
    pos = np.flatnonzero(ds.labels == 1)
    neg = np.flatnonzero(ds.labels == -1)
    half = cap // 2
    k_pos = min(len(pos), max(half, cap - len(neg)))
    k_neg = min(len(neg), cap - k_pos)
    pick = np.concatenate([rng.choice(pos, k_pos, replace=False), rng.choice(neg, k_neg, replace=False)])
    return ds.subset(np.sort(pick))


class GridSolver:
    """Explicit finite-volume stepping of the one-dimensional density.

    The drift at ``(xi, b)`` is
    ``eta * E_pairs[(y y~ - K_p(x, x~)/alpha) d/dxi (phi(x) phi(x~))]``
    with ``K_p`` the kernel of the current density, which is the mean
    per-unit-time motion of a particle under SGD when one time unit is ``N``
    steps. Pairs are all ordered pairs (diagonal included) of at most
    ``PAIR_CAP`` rows, weighted as the SGD pair sampler weights them.
    """

    def __init__(self, g: GridDensity, ds: LabeledDataset, alpha: float, eta: float,
                 pair_cap: int = PAIR_CAP, seed: int = 0):
        if ds.dim != 1:
            raise ValidationError("the grid solver is one-dimensional; data must have one column")
        if not alpha > 0 or not eta > 0:
            raise ValidationError("alpha and eta must be positive")
        sub = _balanced_subsample(ds, pair_cap, seed)
        self.alpha, self.eta = float(alpha), float(eta)
        self.x = sub.features[:, 0]
        self.y = sub.labels.astype(float)
        self.w = pair_weights(sub)
        self._bind(g)

    def _bind(self, g: GridDensity):
        self.shape = (len(g.phases), g.cells)
        self.geometry = (g.x_min, g.x_max, g.cells, g.phases)
        arg = np.outer(g.centers, self.x)[None, :, :] + np.asarray(g.phases)[:, None, None]
        # (M, cells, n)
        self.phi = SQRT2 * np.cos(arg)
        self.dphi = -SQRT2 * np.sin(arg) * self.x
        self.yy = np.outer(self.y, self.y)
        self.ww = np.outer(self.w, self.w)

    def kernel(self, g: GridDensity) -> np.ndarray:
        """``K_p(x_i, x_j) = sum over slices and cells of phi phi p dx``."""
        M, C, n = self.phi.shape
        P = self.phi.reshape(M * C, n)
        mass = (g.density * g.dx).reshape(M * C)
        return P.T @ (P * mass[:, None])

    def velocity(self, g: GridDensity) -> np.ndarray:
        """Drift at cell centres, shape ``(M, cells)``."""
        W = self.ww * (self.yy - self.kernel(g) / self.alpha)
        # sum_ij W_ij (phi_i' phi_j + phi_i phi_j') = 2 sum_i phi_i' (W phi)_i
        return 2.0 * self.eta * np.einsum("mci,mci->mc", self.dphi, self.phi @ W)

    def step(self, g: GridDensity) -> GridDensity:
        if (g.x_min, g.x_max, g.cells, g.phases) != self.geometry:
            self._bind(g)
        v = self.velocity(g)
        dx = g.dx
        vmax = float(np.abs(v).max())
        if g.dt * vmax / dx > CFL_LIMIT:
            raise NumericalError(
                f"CFL violation: dt*|v|/dx = {g.dt * vmax / dx:.3g} > {CFL_LIMIT}; reduce dt")
        # central face flux, zero flux through the outer faces
        q = g.density * v
        flux = np.zeros((q.shape[0], q.shape[1] + 1))
        flux[:, 1:-1] = 0.5 * (q[:, 1:] + q[:, :-1])
        new = g.density - g.dt / dx * (flux[:, 1:] - flux[:, :-1])
        clipped = 0.0
        if np.any(new < 0):
            clipped = float(-new[new < 0].sum() * dx)
            new = np.maximum(new, 0.0)
            new *= g.mass() / (new.sum() * dx)
            log.debug("clipped %.3g mass of negative density", clipped)
        if not np.all(np.isfinite(new)):
            raise NumericalError("non-finite density")
        return GridDensity(g.x_min, g.x_max, g.cells, new, g.dt, g.phases,
                           g.time + g.dt, g.clipped_mass + clipped)


def pde_step(g: GridDensity, ds: LabeledDataset, alpha: float, eta: float) -> GridDensity:
    """One explicit Euler step of the density. Builds a fresh solver; use
    :class:`GridSolver` directly for repeated steps."""
    return GridSolver(g, ds, alpha, eta).step(g)


def evolve(g: GridDensity, ds: LabeledDataset, alpha: float, eta: float, horizon: float,
           seed: int = 0):
    """Integrate to ``horizon``; the last step is shortened to land on it exactly.

    Returns the final density and the mass recorded after every step.
    """
    solver = GridSolver(g, ds, alpha, eta, seed=seed)
    masses = [g.mass()]
    dt = g.dt
    while g.time < horizon - 1e-12:
        h = min(dt, horizon - g.time)
        if h != g.dt:
            g = GridDensity(g.x_min, g.x_max, g.cells, g.density, h, g.phases, g.time, g.clipped_mass)
        g = solver.step(g)
        masses.append(g.mass())
    g.dt = dt
    return g, np.asarray(masses)


def kde_on_grid(samples, centers: np.ndarray, bandwidth: float | None = None) -> np.ndarray:
    """Gaussian KDE (Silverman bandwidth by default) at ``centers``, normalised on the grid."""
    from scipy.stats import gaussian_kde

    s = np.asarray(samples, dtype=float).ravel()
    kde = gaussian_kde(s, bw_method="silverman" if bandwidth is None else bandwidth / s.std(ddof=1))
    p = kde(centers)
    dx = centers[1] - centers[0]
    return p / (p.sum() * dx)


def w1_on_grid(p: np.ndarray, q: np.ndarray, dx: float) -> float:
    """``W_1`` between two densities on the same uniform grid: ``sum |F_p - F_q| dx``."""
    Fp = np.cumsum(p) * dx
    Fq = np.cumsum(q) * dx
    return float(np.sum(np.abs(Fp - Fq)) * dx)


def stratified_ensemble(n_particles: int, sigma: float, phases, seed: int) -> ParticleEnsemble:
    """One-dimensional ensemble whose phases cycle through ``phases``.

    Within each phase node the positions are jittered quantiles of
    ``N(0, 1/sigma^2)``, so the initial empirical measure sits within
    ``O(1/N)`` of the density it samples.
    """
    from scipy.stats import norm

    rng = np.random.default_rng(seed)
    nodes = np.asarray(phases, dtype=float)
    owner = np.arange(n_particles) % len(nodes)
    xi = np.empty(n_particles)
    for m in range(len(nodes)):
        idx = np.flatnonzero(owner == m)
        u = (np.arange(len(idx)) + rng.random(len(idx))) / len(idx)
        xi[idx] = rng.permutation(norm.ppf(u, scale=1.0 / sigma))
    return ParticleEnsemble(xi[:, None], nodes[owner], seed=seed)


@dataclass
class CrossCheck:
    n_particles: int
    w1: float
    mass_drift: float
    grid: GridDensity
    particles: np.ndarray


def particle_vs_grid(ds: LabeledDataset, n_particles: int, horizon: float = 1.0, alpha: float = 1.0,
                     eta: float = 1.0, sigma: float = 1.0, seed: int = 0, cells: int = 400,
                     dt: float = 0.005, n_phases: int = 8, grid: GridDensity | None = None):
    """Run SGD for ``horizon * N`` steps and the grid to ``horizon``; report ``W_1`` between
    the grid marginal and the particle KDE.

    Pass a precomputed ``grid`` (at ``horizon``) to reuse one PDE solution across particle counts.
    """
    from .align import train

    nodes = phase_nodes(n_phases)
    if grid is None:
        g0 = GridDensity.gaussian(sigma, cells=cells, dt=dt, phases=nodes)
        grid, masses = evolve(g0, ds, alpha, eta, horizon, seed=seed)
        drift = float(np.abs(masses - 1.0).max())
    else:
        drift = abs(grid.mass() - 1.0)
    ens = stratified_ensemble(n_particles, sigma, grid.phases, seed)
    steps = max(1, int(round(horizon * n_particles)))
    train(ds, ens, _quiet_cfg(eta, alpha, steps, seed))
    kde = kde_on_grid(ens.particles[:, 0], grid.centers)
    return CrossCheck(n_particles, w1_on_grid(grid.marginal, kde, grid.dx), drift, grid,
                      ens.particles[:, 0].copy())


def _quiet_cfg(eta, alpha, steps, seed):
    from .align import TrainConfig

    return TrainConfig(eta=eta, alpha=alpha, iterations=steps, seed=seed, checkpoint_every=0,
                       monitor_rows=20)


# ---------------------------------------------------------------- chaoticity


def replica_sgd(ds: LabeledDataset, xi: np.ndarray, phases: np.ndarray, steps: int, eta: float,
                alpha: float, rng: np.random.Generator) -> np.ndarray:
    """Independent SGD runs stacked along the first axis.

    ``xi`` has shape ``(R, N, D)`` and ``phases`` ``(R, N)``; replica ``r``
    follows exactly the update of :func:`mfkernel.align.sgd_step` with its
    own pair draws. Returns the updated array (``xi`` is modified in place).
    """
    from .align import PairSampler

    R, N, D = xi.shape
    sampler = PairSampler(ds, rng)
    X = ds.features
    for _ in range(steps):
        labels, idx = sampler.draw(R)
        xa, xb = X[idx[:, 0]], X[idx[:, 1]]  # (R, D)
        u = np.einsum("rnd,rd->rn", xi, xa) + phases
        v = np.einsum("rnd,rd->rn", xi, xb) + phases
        cu, su, cv, sv = np.cos(u), np.sin(u), np.cos(v), np.sin(v)
        k_hat = 2.0 * np.mean(cu * cv, axis=1)
        resid = labels[:, 0] * labels[:, 1] - k_hat / alpha
        scale = (eta / N * resid)[:, None]
        xi += (scale * (-2.0 * su * cv))[:, :, None] * xa[:, None, :]
        xi += (scale * (-2.0 * cu * sv))[:, :, None] * xb[:, None, :]
    if not np.all(np.isfinite(xi)):
        raise NumericalError("non-finite particle in replica SGD")
    return xi


TEST_FUNCTIONS = {
    "xi": lambda z: z,
    "xi^2": lambda z: z**2,
    "cos": np.cos,
}


def dependence_score(first: np.ndarray, second: np.ndarray) -> float:
    """Mean absolute correlation across replicas of ``f(first)`` and ``f(second)``
    over the test functions ``xi``, ``xi^2`` and ``cos xi``."""
    scores = []
    for f in TEST_FUNCTIONS.values():
        a, b = f(first), f(second)
        if a.std() == 0 or b.std() == 0:
            raise NumericalError("constant test-function values across replicas")
        scores.append(abs(np.corrcoef(a, b)[0, 1]))
    return float(np.mean(scores))


@dataclass
class ChaosResult:
    n_values: list
    scores: dict = field(default_factory=dict)
    skipped: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"N": [int(n) for n in self.n_values],
                "scores": {str(k): float(v) for k, v in self.scores.items()},
                "skipped": [int(n) for n in self.skipped]}


def chaoticity_probe(spec: SyntheticSpec, Ns, replicas: int = 1000, t: float = 0.3,
                     eta: float = 10.0, alpha: float = 1.0, n_data: int = 200, sigma: float = 1.0,
                     seed: int = 0, tie_first_pair: bool = False) -> ChaosResult:
    """Dependence between particles 1 and 2 after ``t * N`` SGD steps, per ``N``.

    Each replica draws its own initial particles, phases and pair sequence;
    all replicas share one dataset from ``spec`` (dimension must be 1).
    ``tie_first_pair`` starts particle 2 as a copy of particle 1, which keeps
    them identical and gives a score of one.
    """
    Ns = [int(n) for n in Ns]
    if any(b <= a for a, b in zip(Ns, Ns[1:])):
        raise ValidationError("Ns must be strictly increasing")
    if replicas < 30:
        raise ValidationError("replicas must be >= 30")
    if spec.embedded_dim != 1 or spec.projection_dim is not None:
        raise ValidationError("the chaoticity probe runs in one dimension")
    ds = sample_synthetic(SyntheticSpec(1, spec.lam, seed), n_data // 2, n_data - n_data // 2)
    result = ChaosResult(Ns)
    for N in Ns:
        if N < 2:
            log.warning("N=%d has no particle pair; skipped", N)
            result.skipped.append(N)
            continue
        rng = np.random.default_rng([seed, N])
        xi = rng.standard_normal((replicas, N, 1)) / sigma
        b = rng.uniform(-math.pi, math.pi, size=(replicas, N))
        if tie_first_pair:
            xi[:, 1] = xi[:, 0]
            b[:, 1] = b[:, 0]
        steps = max(1, int(round(t * N)))
        replica_sgd(ds, xi, b, steps, eta, alpha, rng)
        result.scores[N] = dependence_score(xi[:, 0, 0], xi[:, 1, 0])
    return result
