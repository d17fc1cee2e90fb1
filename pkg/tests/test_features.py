import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from mfkernel import ValidationError
from mfkernel.features import (SQRT2, ParticleEnsemble, feature, feature_matrix, gaussian_kernel, gram,
                               kernel_estimate, load_ensemble, pair_gradient, pair_gradients,
                               save_ensemble)

seeds = st.integers(0, 2**32 - 1)


def fd_gradient(x, xt, xi, b, h=1e-5):
    g = np.zeros_like(xi)
    for d in range(len(xi)):
        e = np.zeros_like(xi)
        e[d] = h
        f = lambda z: feature(x, z, b) * feature(xt, z, b)  # noqa: E731
        g[d] = (f(xi + e) - f(xi - e)) / (2 * h)
    return g


def test_feature_hand_values():
    assert feature([0.0, 0.0], [3.0, -2.0], 0.0) == pytest.approx(math.sqrt(2))
    assert feature([1.0, 0.0], [math.pi, 0.0], 0.0) == pytest.approx(-math.sqrt(2))
    with pytest.raises(ValidationError):
        feature([1.0, 2.0], [1.0], 0.0)


def test_phase_average_identity():
    # E_b[phi(x) phi(y)] = cos(<x - y, xi>), checked by Monte Carlo
    rng = np.random.default_rng(0)
    x, y, xi = rng.standard_normal(3), rng.standard_normal(3), rng.standard_normal(3)
    b = rng.uniform(-math.pi, math.pi, 10**6)
    prod = 2 * np.cos(x @ xi + b) * np.cos(y @ xi + b)
    se = prod.std() / math.sqrt(len(b))
    assert abs(prod.mean() - math.cos((x - y) @ xi)) < 3 * se


def test_kernel_diagonal_near_one():
    ens = ParticleEnsemble.gaussian(2000, 3, seed=1)
    x = np.array([0.3, -1.0, 2.0])
    assert kernel_estimate(x, x, ens) == pytest.approx(1.0, abs=0.05)


def test_kernel_matches_gaussian():
    ens = ParticleEnsemble.gaussian(4000, 2, sigma=1.0, seed=2)
    rng = np.random.default_rng(2)
    worst = 0.0
    for _ in range(100):
        x = rng.standard_normal(2)
        y = x + rng.uniform(0, 3) * (lambda v: v / np.linalg.norm(v))(rng.standard_normal(2))
        exact = math.exp(-np.sum((x - y) ** 2) / 2)
        worst = max(worst, abs(kernel_estimate(x, y, ens) - exact))
    assert worst < 0.05


def test_single_zero_particle_gives_two():
    ens = ParticleEnsemble([[0.0]], [0.0])
    assert kernel_estimate([5.0], [-7.0], ens) == 2.0


def test_kernel_equals_loop_oracle():
    ens = ParticleEnsemble.gaussian(5, 2, seed=3)
    x, y = [0.4, 1.2], [-0.7, 0.1]
    assert kernel_estimate(x, y, ens) == pytest.approx(
        oracles.kernel(x, y, ens.particles.tolist(), ens.phases.tolist()), abs=1e-14)


def test_gram_single_row():
    ens = ParticleEnsemble.gaussian(30, 2, seed=4)
    x = np.array([[0.5, -0.2]])
    G = gram(x, ens).gram()
    assert G.shape == (1, 1)
    assert G[0, 0] == pytest.approx(kernel_estimate(x[0], x[0], ens), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 8), st.integers(1, 40), st.integers(1, 4))
def test_gram_properties(seed, n, N, D):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((n, D)) * 2
    ens = ParticleEnsemble.gaussian(N, D, sigma=rng.uniform(0.3, 3), seed=seed)
    est = gram(X, ens)
    assert np.all(np.abs(est.phi) <= SQRT2 + 1e-15)
    G = est.gram()
    assert np.max(np.abs(G - G.T)) <= 1e-10
    assert np.linalg.eigvalsh(G).min() >= -1e-10
    assert np.all(np.abs(G) <= 2 + 1e-12)
    for i in range(n):
        for j in range(n):
            assert G[i, j] == pytest.approx(kernel_estimate(X[i], X[j], ens), abs=1e-12)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_kernel_symmetry_exact(seed):
    rng = np.random.default_rng(seed)
    ens = ParticleEnsemble.gaussian(17, 3, seed=seed)
    x, y = rng.standard_normal(3), rng.standard_normal(3)
    assert kernel_estimate(x, y, ens) == kernel_estimate(y, x, ens)


def test_trace_concentration_shrinks():
    rng = np.random.default_rng(5)
    X = rng.standard_normal((40, 2))
    errs = []
    for N in (100, 400, 1600):
        e = [abs(np.sum(gram(X, ParticleEnsemble.gaussian(N, 2, seed=s)).phi ** 2) / N - 40) / 40
             for s in range(20)]
        errs.append(np.mean(e))
    assert errs[0] > errs[1] > errs[2]


def test_pair_gradient_zero_inputs():
    assert np.all(pair_gradient([0, 0, 0], [0, 0, 0], [1.0, 2.0, 3.0], 0.7) == 0)


def test_pair_gradient_finite_differences():
    rng = np.random.default_rng(6)
    for _ in range(1000):
        x, xt, xi = rng.standard_normal(3), rng.standard_normal(3), rng.standard_normal(3)
        b = rng.uniform(-math.pi, math.pi)
        g = pair_gradient(x, xt, xi, b)
        fd = fd_gradient(x, xt, xi, b)
        assert np.linalg.norm(g - fd) <= 1e-5 * np.linalg.norm(g) + 1e-9
        assert np.linalg.norm(g) <= 2 * SQRT2 * (np.linalg.norm(x) + np.linalg.norm(xt))


def test_vectorised_gradients_match_scalar():
    rng = np.random.default_rng(7)
    ens = ParticleEnsemble.gaussian(9, 2, seed=7)
    x, xt = rng.standard_normal(2), rng.standard_normal(2)
    G = pair_gradients(x, xt, ens)
    for k in range(9):
        np.testing.assert_allclose(G[k], pair_gradient(x, xt, ens.particles[k], ens.phases[k]), atol=1e-14)


def test_ensemble_validation():
    with pytest.raises(ValidationError):
        ParticleEnsemble([[1.0]], [math.pi])
    with pytest.raises(ValidationError):
        ParticleEnsemble([[np.nan]], [0.0])
    with pytest.raises(ValidationError):
        ParticleEnsemble([[1.0], [2.0]], [0.0])
    with pytest.raises(ValidationError):
        ParticleEnsemble.gaussian(3, 2, sigma=0)


def test_initial_snapshot_immutable():
    ens = ParticleEnsemble.gaussian(4, 2, seed=8)
    ens.particles += 1.0
    assert not np.allclose(ens.particles, ens.initial_particles)
    with pytest.raises(ValueError):
        ens.initial_particles[0, 0] = 5.0


def test_ensemble_roundtrip(tmp_path):
    ens = ParticleEnsemble.gaussian(6, 3, seed=9)
    ens.particles *= 2
    save_ensemble(ens, tmp_path / "e.json")
    back = load_ensemble(tmp_path / "e.json")
    assert back.fingerprint() == ens.fingerprint()
    assert np.array_equal(back.initial_particles, ens.initial_particles)


def test_gaussian_kernel_reference():
    X = np.array([[0.0, 0.0], [1.0, 1.0]])
    K = gaussian_kernel(X, X, sigma=2.0)
    assert K[0, 1] == pytest.approx(math.exp(-2 / 8))


def test_feature_matrix_dim_check():
    with pytest.raises(ValidationError):
        feature_matrix(np.zeros((2, 3)), ParticleEnsemble.gaussian(4, 2))
