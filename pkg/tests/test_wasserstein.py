import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from mfkernel import BudgetError, ValidationError
from mfkernel.features import ParticleEnsemble
from mfkernel.wasserstein import BallSpec, corollary_learning_rate, in_ball, wasserstein_empirical

seeds = st.integers(0, 2**32 - 1)


def brute_wp(a, b, p):
    n = len(a)
    best = min(sum(np.linalg.norm(a[k] - b[s[k]]) ** p for k in range(n))
               for s in itertools.permutations(range(n)))
    return (best / n) ** (1 / p)


def test_examples():
    a = np.random.default_rng(0).standard_normal((5, 2))
    assert wasserstein_empirical(a, a) == 0.0
    assert wasserstein_empirical([[0.0], [1.0]], [[1.0], [0.0]], p=2) == 0.0
    assert wasserstein_empirical([[0.0], [1.0], [2.0]], [[0.5], [1.5], [2.5]], p=1) == pytest.approx(0.5)


def test_errors():
    with pytest.raises(ValidationError):
        wasserstein_empirical(np.zeros((3, 2)), np.zeros((4, 2)))
    with pytest.raises(BudgetError):
        wasserstein_empirical(np.zeros((10, 1)), np.zeros((10, 1)), cap=5)
    with pytest.raises(ValidationError):
        BallSpec(0.0)


def test_in_ball_examples():
    ens = ParticleEnsemble.gaussian(20, 3, seed=1)
    chk = in_ball(ens, BallSpec(1.0))
    assert chk.inside and chk.distance == 0.0
    shift = np.array([0.3, -0.4, 1.2])  # norm 1.3
    ens.particles += shift
    chk = in_ball(ens, BallSpec(1.0))
    assert chk.distance == pytest.approx(1.3, abs=1e-12)
    assert not chk.inside
    ens2 = ParticleEnsemble.gaussian(20, 3, seed=2)
    ens2.particles[[0, 1]] = ens2.particles[[1, 0]]
    assert in_ball(ens2, BallSpec(1.0)).distance == 0.0


@settings(max_examples=500, deadline=None)
@given(seeds, st.integers(1, 12), st.floats(1.0, 4.0))
def test_one_dimensional_matches_sorted_coupling(seed, n, p):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal(n), rng.standard_normal(n) * 2 + 0.5
    assert wasserstein_empirical(a, b, p=p) == pytest.approx(oracles.sorted_coupling(a, b, p), rel=1e-9, abs=1e-12)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(1, 6), st.integers(1, 3), st.sampled_from([1, 2]))
def test_matches_permutation_enumeration(seed, n, D, p):
    rng = np.random.default_rng(seed)
    a, b = rng.standard_normal((n, D)), rng.standard_normal((n, D))
    assert wasserstein_empirical(a, b, p) == pytest.approx(brute_wp(a, b, p), rel=1e-9, abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(seeds, st.integers(1, 8), st.integers(1, 3))
def test_metric_axioms(seed, n, D):
    rng = np.random.default_rng(seed)
    a, b, c = (rng.standard_normal((n, D)) for _ in range(3))
    for p in (1, 2):
        ab = wasserstein_empirical(a, b, p)
        assert ab == wasserstein_empirical(b, a, p)
        assert ab <= wasserstein_empirical(a, c, p) + wasserstein_empirical(c, b, p) + 1e-9
        assert wasserstein_empirical(a, a[rng.permutation(n)], p) <= 1e-12
    assert wasserstein_empirical(a, b, 1) <= wasserstein_empirical(a, b, 2) + 1e-12
    if not np.allclose(np.sort(a, axis=0), np.sort(b, axis=0)):
        assert wasserstein_empirical(a, b, 2) > 1e-12


def test_corollary_rate_scaling():
    base = corollary_learning_rate(1.0, 2, 100, 10_000)
    assert corollary_learning_rate(2.0, 2, 100, 10_000) == pytest.approx(4 * base)
    assert corollary_learning_rate(1.0, 2, 100, 40_000) == pytest.approx(base / 8)
    assert base > 0
