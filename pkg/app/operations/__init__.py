# app/operations/__init__.py

"""
Pure numerical operations.

Functions here take plain values or schema objects and never own long-lived
state; the stateful pieces in ``app.models`` call into them.
"""

from app.operations.embedding import Embedding, cosine_similarity, embed_numeric, embed_text
from app.operations.kl import (
    DecayCheck,
    decay_bound,
    decay_check,
    measured_kl,
    prior_error,
    q_error,
    kl_bound,
)
from app.operations.latency import LatencySummary, latency_report
from app.operations.meta import surrogate_gradients, update_params
from app.operations.posterior import kl_objective, kl_regularized_policy, posterior_weights, temperature

__all__ = [
    "DecayCheck",
    "Embedding",
    "LatencySummary",
    "decay_bound",
    "decay_check",
    "cosine_similarity",
    "embed_numeric",
    "embed_text",
    "kl_objective",
    "kl_regularized_policy",
    "latency_report",
    "measured_kl",
    "posterior_weights",
    "prior_error",
    "q_error",
    "surrogate_gradients",
    "temperature",
    "kl_bound",
    "update_params",
]
