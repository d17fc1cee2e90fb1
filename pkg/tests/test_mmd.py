import math
import sys

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import oracles
from mfkernel import ValidationError
from mfkernel.align import TrainConfig, train
from mfkernel.data import SyntheticSpec, sample_synthetic
from mfkernel.features import ParticleEnsemble
from mfkernel.mmd import (Decision, TestConfig, mmd_unbiased, parse_tau_range, power_curve,
                          two_sample_test)

seeds = st.integers(0, 2**32 - 1)


def gaussian_mmd2(a, b, d, s2=1.0):
    """Population MMD^2 between N(0, aI) and N(0, bI) under exp(-|x-y|^2 / (2 s2))."""
    e = lambda u, v: (s2 / (s2 + u + v)) ** (d / 2)  # noqa: E731
    return e(a, a) + e(b, b) - 2 * e(a, b)


def test_matches_triple_loop():
    for seed in range(100):
        rng = np.random.default_rng(seed)
        m, n, N, D = (int(v) for v in rng.integers([2, 2, 1, 1], [9, 9, 6, 4]))
        V, W = rng.standard_normal((m, D)), rng.standard_normal((n, D)) * 1.5
        ens = ParticleEnsemble.gaussian(N, D, seed=seed)
        got = mmd_unbiased(V, W, ens).value
        want = oracles.mmd(V.tolist(), W.tolist(), ens.particles.tolist(), ens.phases.tolist())
        assert abs(got - want) < 1e-10


@settings(max_examples=80, deadline=None)
@given(seeds, st.integers(2, 10), st.integers(2, 10))
def test_decomposition_and_symmetry(seed, m, n):
    rng = np.random.default_rng(seed)
    V, W = rng.standard_normal((m, 2)), rng.standard_normal((n, 2))
    ens = ParticleEnsemble.gaussian(7, 2, seed=seed)
    s = mmd_unbiased(V, W, ens)
    assert abs(s.value - (s.within_pos + s.within_neg - 2 * s.cross)) <= 1e-12
    assert mmd_unbiased(W, V, ens).value == s.value


def test_constant_features_give_zero():
    ens = ParticleEnsemble([[0.0, 0.0]], [0.0])
    V = np.random.default_rng(0).standard_normal((2, 2))
    assert mmd_unbiased(V, V + 3, ens).value == pytest.approx(0.0, abs=1e-14)


def test_identical_sets_are_nonpositive():
    ens = ParticleEnsemble.gaussian(20, 2, seed=1)
    h0 = 0
    for seed in range(100):
        V = np.random.default_rng(seed).standard_normal((30, 2))
        h0 += two_sample_test(V, V, ens, None, TestConfig(tau=0.0)) == Decision.H0
    assert h0 >= 95


def test_unbiased_under_null():
    ens = ParticleEnsemble.gaussian(50, 2, seed=2)
    rng = np.random.default_rng(2)
    vals = np.array([mmd_unbiased(rng.standard_normal((100, 2)), rng.standard_normal((100, 2)), ens).value
                     for _ in range(1000)])
    assert abs(vals.mean()) < 3 * vals.std(ddof=1) / math.sqrt(len(vals))


def test_converges_to_population_value():
    ens = ParticleEnsemble.gaussian(4000, 2, seed=3)
    rng = np.random.default_rng(3)
    V = rng.standard_normal((2000, 2)) * math.sqrt(1.5)
    W = rng.standard_normal((2000, 2)) * math.sqrt(0.5)
    exact = gaussian_mmd2(1.5, 0.5, 2)
    assert mmd_unbiased(V, W, ens).value == pytest.approx(exact, rel=0.1)


def test_infinite_threshold_never_rejects():
    ens = ParticleEnsemble.gaussian(10, 2)
    rng = np.random.default_rng(4)
    V, W = rng.standard_normal((20, 2)) * 3, rng.standard_normal((20, 2)) * 0.1
    assert two_sample_test(V, W, ens, None, TestConfig(tau=sys.float_info.max)) == Decision.H0


def test_trained_kernel_detects_strong_signal():
    spec = SyntheticSpec(2, 0.9, seed=5)
    ens = ParticleEnsemble.gaussian(100, 2, seed=5)
    train(sample_synthetic(spec, 200, 200), ens, TrainConfig(eta=1.0, iterations=2000, checkpoint_every=0))
    rng = np.random.default_rng(50)
    hits = sum(two_sample_test(rng.standard_normal((100, 2)) * math.sqrt(1.9),
                               rng.standard_normal((100, 2)) * math.sqrt(0.1),
                               ens, None, TestConfig(tau=0.05)) == Decision.H1 for _ in range(100))
    assert hits >= 95


def test_negative_threshold_allowed():
    assert TestConfig(tau=-0.5).tau == -0.5
    with pytest.raises(ValidationError):
        TestConfig(trials=0)


def test_too_few_rows():
    ens = ParticleEnsemble.gaussian(3, 1)
    with pytest.raises(ValidationError):
        mmd_unbiased(np.zeros((1, 1)), np.zeros((3, 1)), ens)


def test_power_curve_properties(tmp_path):
    ens = ParticleEnsemble.gaussian(50, 2, seed=6)
    strong = power_curve(SyntheticSpec(2, 0.9), ens, None, [0.0], 50, 50, 50, seed=6)
    assert strong.power[0] >= 0.95
    taus = np.linspace(-0.05, 0.3, 30)
    pc = power_curve(SyntheticSpec(2, 0.3), ens, None, taus, 30, 30, 40, seed=7)
    assert np.all(np.diff(pc.power) <= 0) and np.all(np.diff(pc.type1) <= 0)
    assert np.all((0 <= pc.power) & (pc.power <= 1))
    null = power_curve(SyntheticSpec(2, 0.0), ens, None, taus, 30, 30, 40, seed=7)
    assert np.array_equal(null.power, null.type1)
    pc.write_csv(tmp_path / "p.csv")
    lines = (tmp_path / "p.csv").read_text().splitlines()
    assert lines[0] == "tau,power,type1,trials,lambda,N,m,n" and len(lines) == 31


def test_power_curve_errors():
    ens = ParticleEnsemble.gaussian(5, 2)
    with pytest.raises(ValidationError):
        power_curve(SyntheticSpec(2, 0.5), ens, None, [], 10, 10, 20)
    with pytest.raises(ValidationError):
        power_curve(SyntheticSpec(2, 0.5), ens, None, [0.0], 10, 10, 9)


@settings(max_examples=50, deadline=None)
@given(seeds, st.floats(-1, 1), st.floats(-1, 1))
def test_decision_monotone_in_threshold(seed, t1, t2):
    lo, hi = sorted((t1, t2))
    rng = np.random.default_rng(seed)
    V, W = rng.standard_normal((8, 2)), rng.standard_normal((8, 2)) * 0.5
    ens = ParticleEnsemble.gaussian(6, 2, seed=seed)
    if two_sample_test(V, W, ens, None, TestConfig(tau=hi)) == Decision.H1:
        assert two_sample_test(V, W, ens, None, TestConfig(tau=lo)) == Decision.H1


def test_tau_range_parsing():
    np.testing.assert_allclose(parse_tau_range("0:0.2:21"), np.linspace(0, 0.2, 21))
    np.testing.assert_allclose(parse_tau_range("0.1, 0.3"), [0.1, 0.3])
    with pytest.raises(ValidationError):
        parse_tau_range("0:1")
