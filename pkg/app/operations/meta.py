# app/operations/meta.py

"""Surrogate-gradient adaptation of cache parameters (K, delta, r)."""

import logging

import numpy as np

from app.schemas import BatchMetrics, CacheParams, MetaConfig

logger = logging.getLogger("app.operations")


def surrogate_gradients(
    params: CacheParams, m: BatchMetrics, cfg: MetaConfig
) -> tuple[float, float, float]:
    # low hit rate grows the cache, large TD error loosens the threshold,
    # volatile Q-values refresh more often
    g_k = cfg.lambda_k * (1.0 - m.hit_rate) / params.k
    g_delta = -cfg.lambda_delta * m.mean_td_error / params.delta
    g_r = cfg.lambda_r * m.policy_variability
    return g_k, g_delta, g_r


def update_params(params: CacheParams, m: BatchMetrics, cfg: MetaConfig) -> CacheParams:
    """One projected ascent step on the surrogate objective."""
    g_k, g_delta, g_r = surrogate_gradients(params, m, cfg)
    new = CacheParams(
        k=float(np.clip(params.k + cfg.eta_k * g_k, cfg.k_min, cfg.k_max)),
        delta=float(np.clip(params.delta + cfg.eta_delta * g_delta, cfg.delta_min, cfg.delta_max)),
        r=float(np.clip(params.r + cfg.eta_r * g_r, cfg.r_min, cfg.r_max)),
    )
    logger.debug(
        "meta step K %.4f->%.4f delta %.6f->%.6f r %.6f->%.6f",
        params.k, new.k, params.delta, new.delta, params.r, new.r,
    )
    return new
