import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from mfkernel import ValidationError
from mfkernel.align import alignment_statistic
from mfkernel.baselines import (chi2_to_uniform, knn_bandwidth, maximize_linear_chi2, optimize_weights,
                                reweighted_ensemble_features, weighted_alignment)
from mfkernel.data import LabeledDataset, SyntheticSpec, sample_synthetic
from mfkernel.features import ParticleEnsemble, feature_matrix

seeds = st.integers(0, 2**32 - 1)


def grid_max(a, radius, center, half, step):
    """Best feasible <w, a> on a grid over (w1, w2, w3) with w4 = 1 - sum."""
    axes = [np.arange(max(0, c - half), min(1, c + half) + step / 2, step) for c in center[:3]]
    W1, W2, W3 = np.meshgrid(*axes, indexing="ij")
    W = np.stack([W1.ravel(), W2.ravel(), W3.ravel()], axis=1)
    W = np.hstack([W, 1 - W.sum(axis=1, keepdims=True)])
    W = W[W[:, 3] >= 0]
    ok = 4 * np.sum((W - 0.25) ** 2, axis=1) <= radius
    vals = W[ok] @ a
    best = int(np.argmax(vals))
    return vals[best], W[ok][best]


def test_matches_grid_search():
    a = np.array([1.0, 2.0, 3.0, 4.0])
    val, w = grid_max(a, 0.5, np.full(4, 0.5), 0.5, 0.01)
    for half, step in ((0.02, 5e-4), (0.002, 1e-4)):
        val, w = grid_max(a, 0.5, w, half, step)
    ours = maximize_linear_chi2(a, 0.5)
    assert ours @ a >= val - 1e-12
    assert ours @ a == pytest.approx(val, abs=1e-3)


def test_constant_scores_give_uniform():
    np.testing.assert_array_equal(maximize_linear_chi2(np.full(5, 0.3), 1.0), np.full(5, 0.2))


def test_large_radius_gives_vertex():
    a = np.array([0.1, 0.7, -0.2, 0.4])
    np.testing.assert_array_equal(maximize_linear_chi2(a, 1e6), [0, 1, 0, 0])


def test_errors():
    with pytest.raises(ValidationError):
        maximize_linear_chi2([1.0, 2.0], 0.0)
    with pytest.raises(ValidationError):
        maximize_linear_chi2([1.0], 1.0)


@settings(max_examples=100, deadline=None)
@given(seeds, st.integers(2, 30), st.floats(1e-3, 50), st.floats(1e-3, 50))
def test_weights_feasible_and_monotone(seed, N, r1, r2):
    a = np.random.default_rng(seed).standard_normal(N)
    lo, hi = sorted((r1, r2))
    w_lo, w_hi = maximize_linear_chi2(a, lo), maximize_linear_chi2(a, hi)
    for w, r in ((w_lo, lo), (w_hi, hi)):
        assert abs(w.sum() - 1) < 1e-12 and w.min() >= 0
        assert chi2_to_uniform(w) <= r + 1e-8
    assert w_lo @ a >= a.mean() - 1e-12
    assert w_hi @ a >= w_lo @ a - 1e-9


def test_optimized_alignment_beats_uniform():
    ds = sample_synthetic(SyntheticSpec(2, 0.5, seed=1), 40, 40)
    ens = ParticleEnsemble.gaussian(30, 2, seed=1)
    w = optimize_weights(ds, ens, 1.0)
    assert w.chi2 <= 1.0 + 1e-8
    assert weighted_alignment(ds, ens, w.w) >= alignment_statistic(ds, ens) - 1e-12
    phi = feature_matrix(ds.features, ens)
    Kw = (phi * w.w) @ phi.T
    assert np.all(np.abs(Kw) <= 2 + 1e-12)
    np.testing.assert_allclose(Kw, Kw.T, atol=1e-15)
    scaled = reweighted_ensemble_features(phi, w)
    np.testing.assert_allclose(scaled @ scaled.T / 30, Kw, atol=1e-12)
    with pytest.raises(ValidationError):
        optimize_weights(ds, ens, -1.0)


def test_knn_unit_square():
    X = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
    assert knn_bandwidth(X, 1).sigma2 == pytest.approx(1.0)


def test_knn_duplicates_only():
    with pytest.raises(ValidationError):
        knn_bandwidth(np.zeros((5, 2)), 1)
    with pytest.raises(ValidationError):
        knn_bandwidth(np.zeros((2, 2)), 3)


def test_knn_skips_zero_distances():
    X = np.array([[0.0], [0.0], [1.0], [3.0]])
    # distinct-neighbour distances: 1, 1, 4 (from 1 to 3 is 2^2=4 vs 1 to 0 is 1) -> mean of (1, 1, 1, 4)
    assert knn_bandwidth(X, 1).sigma2 == pytest.approx(7 / 4)


def test_knn_matches_bruteforce():
    X = np.random.default_rng(2).standard_normal((500, 10))
    assert knn_bandwidth(X, 3).sigma2 == pytest.approx(oracles.knn_sigma2(X, 3), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(0.1, 10), st.floats(-5, 5))
def test_knn_invariances(seed, c, shift):
    rng = np.random.default_rng(seed)
    X = rng.standard_normal((30, 3))
    base = knn_bandwidth(X, 3).sigma2
    assert knn_bandwidth(X[rng.permutation(30)], 3).sigma2 == pytest.approx(base, rel=1e-12)
    assert knn_bandwidth(X + shift, 3).sigma2 == pytest.approx(base, rel=1e-9)
    assert knn_bandwidth(c * X, 3).sigma2 == pytest.approx(c**2 * base, rel=1e-9)


def test_knn_sampling_beyond_cap():
    X = np.random.default_rng(3).standard_normal((300, 2))
    full = knn_bandwidth(X, 3).sigma2
    sampled = knn_bandwidth(X, 3, cap=150, seed=1).sigma2
    assert sampled == pytest.approx(full, rel=0.25)
    assert knn_bandwidth(LabeledDataset(X, np.ones(300, dtype=int)), 3).sigma2 == full
