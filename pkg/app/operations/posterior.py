# app/operations/posterior.py

"""
Posterior fusion of an action prior with Q-values.

Both the temperature-scheduled posterior and the KL-regularised policy are the
same exponential tilt ``prior(a) * exp(q(a) / t)``; they differ only in where
the temperature ``t`` comes from.
"""

import logging
import math
from typing import Mapping

import numpy as np

from app.schemas import PriorDistribution, TemperatureSchedule

logger = logging.getLogger("app.operations")


def temperature(h: float, sched: TemperatureSchedule) -> float:
    if not 0.0 <= h <= 1.0:
        raise ValueError(f"hit rate must be in [0, 1], got {h}")
    return max(sched.floor, sched.base * math.exp(-sched.decay * h))


def _tilt(prior: PriorDistribution, q: Mapping[str, float], scale: float) -> PriorDistribution:
    if not scale > 0:
        raise ValueError(f"temperature must be positive, got {scale}")
    actions = prior.actions
    p = prior.vector(actions)
    live = np.array(
        [p[i] > 0 and a in q and math.isfinite(q[a]) for i, a in enumerate(actions)], dtype=bool
    )
    if not live.any():
        raise ValueError("posterior has empty support: no prior action has a finite Q-value")

    logits = np.full(len(actions), -np.inf)
    idx = np.flatnonzero(live)
    logits[idx] = np.log(p[idx]) + np.array([q[actions[i]] for i in idx]) / scale
    logits[idx] -= logits[idx].max()
    weights = np.zeros(len(actions))
    weights[idx] = np.exp(logits[idx])
    logger.debug("tilt over %d actions at scale %.4f", len(idx), scale)
    return PriorDistribution.from_weights(actions, weights)


def posterior_weights(prior: PriorDistribution, q: Mapping[str, float], tau: float) -> PriorDistribution:
    """w(a) proportional to prior(a) * exp(q(a) / tau), max-subtracted."""
    return _tilt(prior, q, tau)


def kl_regularized_policy(prior: PriorDistribution, q: Mapping[str, float], alpha: float) -> PriorDistribution:
    """Closed-form maximiser of E_pi[q] - alpha * KL(pi || prior)."""
    return _tilt(prior, q, alpha)


def kl_objective(
    pi: PriorDistribution, prior: PriorDistribution, q: Mapping[str, float], alpha: float
) -> float:
    value = 0.0
    for a, p in pi.probs.items():
        if p <= 0:
            continue
        base = prior.probs.get(a, 0.0)
        if base <= 0:
            return -math.inf
        value += p * q[a] - alpha * p * math.log(p / base)
    return value
