import pytest

from mfkernel import ValidationError
from mfkernel.experiments import (BenchConfig, PowerExperimentConfig, ordering_wins, power_before_after,
                                  run_bench)


def test_power_before_after_shares_thresholds():
    cmp = power_before_after(PowerExperimentConfig(d=20, d0=10, trials=20, iterations=200, tau_points=50))
    assert list(cmp.before.taus) == list(cmp.after.taus)
    assert cmp.sigma > 0
    assert cmp.improved == (cmp.tau_after > cmp.tau_before)


def test_bench_rows_and_wins():
    cfg = BenchConfig(d=3, n_features=30, n_train=60, n_test=30, trials=2, iterations=100)
    res = run_bench(cfg)
    assert len(res.rows) == 6
    assert set(res.summary()) == {"sgd", "importance", "knn"}
    assert 0 <= ordering_wins(res, "sgd", "knn") <= 2
    assert ordering_wins(res, "knn", "knn") == 0
    assert res.to_dict()["config"]["methods"] == ["sgd", "importance", "knn"]


@pytest.mark.parametrize("kw", [{"methods": ("svm",)}, {"task": "mnist"}, {"task": "csv"}, {"trials": 0}])
def test_bench_config_validation(kw):
    with pytest.raises(ValidationError):
        BenchConfig(**kw)
