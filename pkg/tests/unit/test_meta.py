# tests/unit/test_meta.py

import numpy as np
import pytest

from app.operations.meta import surrogate_gradients, update_params
from app.schemas import BatchMetrics, CacheParams, MetaConfig


@pytest.fixture
def cfg():
    return MetaConfig()


def metrics(h=0.5, td=0.1, v=0.1) -> BatchMetrics:
    return BatchMetrics(mean_td_error=td, hit_rate=h, policy_variability=v)


# ---------------------------------------------
# Surrogate gradients
# ---------------------------------------------


def test_full_hit_rate_zeroes_capacity_gradient(cfg):
    g_k, _, _ = surrogate_gradients(CacheParams(), metrics(h=1.0), cfg)
    assert g_k == 0.0


def test_capacity_gradient_arithmetic(cfg):
    g_k, _, _ = surrogate_gradients(CacheParams(k=500), metrics(h=0.8), cfg)
    assert g_k == pytest.approx(2e-5, rel=1e-12)


def test_zero_td_error_zeroes_threshold_gradient(cfg):
    _, g_delta, _ = surrogate_gradients(CacheParams(), metrics(td=0.0), cfg)
    assert g_delta == 0.0


def test_refresh_gradient_arithmetic(cfg):
    _, _, g_r = surrogate_gradients(CacheParams(), metrics(v=0.5), cfg)
    assert g_r == pytest.approx(0.01, rel=1e-12)


# ---------------------------------------------
# Projected update
# ---------------------------------------------


def test_fixed_point_leaves_params_unchanged(cfg):
    params = CacheParams(k=437.5, delta=0.83, r=0.07)
    assert update_params(params, metrics(h=1.0, td=0.0, v=0.0), cfg) == params


def test_capacity_projection_binds_at_max(cfg):
    new = update_params(CacheParams(k=1000), metrics(h=0.0), cfg)
    assert new.k == 1000


def test_threshold_step_arithmetic(cfg):
    new = update_params(CacheParams(delta=0.8), metrics(td=0.4), cfg)
    assert new.delta == pytest.approx(0.799975, abs=1e-12)


def test_params_stay_in_range_under_large_steps(rng):
    """
    Step sizes scaled far beyond the defaults must still project into range.

    Steps:
    1. Apply 10^4 updates with random metrics.
    2. Check K, delta and r after every update.
    """
    cfg = MetaConfig(eta_k=1e6, eta_delta=10.0, eta_r=10.0)
    params = CacheParams()
    for _ in range(10_000):
        params = update_params(params, metrics(h=rng.uniform(), td=rng.exponential(), v=rng.exponential()), cfg)
        assert 100 <= params.k <= 1000
        assert 0.5 <= params.delta <= 0.99
        assert 0.01 <= params.r <= 0.2


@pytest.mark.parametrize("field", ["hit_rate", "mean_td_error", "policy_variability"])
def test_directionality(field, cfg, rng):
    """K grows as the hit rate falls, delta falls as TD error grows, r grows with variability."""
    for _ in range(200):
        base = {"hit_rate": rng.uniform(0.2, 0.8), "mean_td_error": rng.uniform(0.1, 1), "policy_variability": rng.uniform(0.1, 1)}
        low, high = dict(base), dict(base)
        high[field] = base[field] + 0.1
        params = CacheParams(k=500, delta=0.8, r=0.1)
        a = update_params(params, BatchMetrics(**low), cfg)
        b = update_params(params, BatchMetrics(**high), cfg)
        if field == "hit_rate":
            assert b.k <= a.k
        elif field == "mean_td_error":
            assert b.delta <= a.delta
        else:
            assert b.r >= a.r


def test_invalid_ranges_rejected():
    with pytest.raises(ValueError, match="exceeds"):
        MetaConfig(k_min=900, k_max=200)


@pytest.mark.parametrize("kwargs", [{"hit_rate": 1.5}, {"mean_td_error": -0.1}, {"policy_variability": np.nan}])
def test_invalid_batch_metrics_rejected(kwargs):
    values = {"mean_td_error": 0.1, "hit_rate": 0.5, "policy_variability": 0.1, **kwargs}
    with pytest.raises(ValueError):
        BatchMetrics(**values)
