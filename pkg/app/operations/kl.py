# app/operations/kl.py

"""
Quantities of the cached-prior KL bound: log-prior error, Q error, the bound
itself, the measured divergence between cached and exact posteriors, and the
decay check for refreshed caches.

Probabilities are floored at 1e-12 and renormalised before any logarithm so
every quantity stays finite.
"""

import logging
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from app.schemas import BoundInputs, PriorDistribution

logger = logging.getLogger("app.operations")

FLOOR = 1e-12
NEAR_ZERO = 1e-12


def _aligned(a: PriorDistribution, b: PriorDistribution) -> tuple[np.ndarray, np.ndarray]:
    actions = list(b.actions) + [x for x in a.actions if x not in b.probs]
    pa = np.maximum(a.vector(actions), FLOOR)
    pb = np.maximum(b.vector(actions), FLOOR)
    return pa / pa.sum(), pb / pb.sum()


def prior_error(cached: PriorDistribution, fresh: PriorDistribution) -> float:
    """kappa' = max_a |log cached(a) - log fresh(a)| after flooring."""
    c, f = _aligned(cached, fresh)
    return float(np.max(np.abs(np.log(c) - np.log(f))))


def q_error(q: Mapping[str, float], q_star: Mapping[str, float]) -> float:
    if set(q) != set(q_star):
        raise ValueError("Q and Q* are defined over different action sets")
    return max(abs(q[a] - q_star[a]) for a in q)


def kl_bound(b: BoundInputs) -> float:
    """x / (1 - e^-x) * (1 + rho) with x = kappa' + epsilon / tau."""
    x = b.x
    factor = 1.0 if x < NEAR_ZERO else x / -math.expm1(-x)
    return factor * (1.0 + b.rho)


def measured_kl(cached_posterior: PriorDistribution, exact_posterior: PriorDistribution) -> float:
    p, q = _aligned(cached_posterior, exact_posterior)
    return max(0.0, float(np.sum(p * np.log(p / q))))


@dataclass(frozen=True)
class DecayCheck:
    beta_hat: float
    ratios: tuple[float, ...]
    passed: bool


def successive_ratios(history: Sequence[float]) -> list[float]:
    ratios = []
    for prev, nxt in zip(history, history[1:]):
        if prev <= NEAR_ZERO:
            # an eliminated error that stays eliminated contracts; one that reappears does not
            ratios.append(0.0 if nxt <= NEAR_ZERO else math.inf)
        else:
            ratios.append(nxt / prev)
    return ratios


def decay_check(history: Sequence[float], beta_threshold: float = 1.0) -> DecayCheck:
    """Fit beta as the median successive ratio of per-window E_mu[kappa'] and require beta < 1."""
    if len(history) < 3:
        raise ValueError(f"decay check needs at least 3 windows, got {len(history)}")
    ratios = successive_ratios(history)
    beta_hat = float(np.median(ratios))
    passed = beta_hat < beta_threshold
    logger.info("decay check: beta_hat=%.4f over %d windows -> %s", beta_hat, len(history), "pass" if passed else "fail")
    return DecayCheck(beta_hat=beta_hat, ratios=tuple(ratios), passed=passed)


def decay_bound(kappa0: float, beta: float, epsilon: float, tau_min: float, rho: float, t: int) -> float:
    """Geometric-decay estimate of the cached-posterior error after t refresh windows."""
    if not 0.0 <= beta < 1.0:
        raise ValueError(f"beta must be in [0, 1), got {beta}")
    if tau_min <= 0:
        raise ValueError("tau_min must be positive")
    return (kappa0 * beta**t + epsilon / tau_min) / (1.0 - beta) * (1.0 + rho)
