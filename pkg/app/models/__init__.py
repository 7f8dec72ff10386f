# app/models/__init__.py

from app.models.agent import ActionTrace, HitRateWindow, PolicySnapshot, PosteriorAgent, sample_symbolic
from app.models.cache import CacheEntry, LookupResult, SemanticCache
from app.models.rl import GaussianHead, HybridAction, QTable, ReplayBuffer, Transition

__all__ = [
    "ActionTrace",
    "CacheEntry",
    "GaussianHead",
    "HitRateWindow",
    "HybridAction",
    "LookupResult",
    "PolicySnapshot",
    "PosteriorAgent",
    "QTable",
    "ReplayBuffer",
    "SemanticCache",
    "Transition",
    "sample_symbolic",
]
