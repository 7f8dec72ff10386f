# app/schemas/__init__.py

from app.schemas.bound import BoundConfig, BoundInputs
from app.schemas.cache import CacheConfig, CacheEntryRecord, CacheParams
from app.schemas.cql import CQLConfig
from app.schemas.experiment import (
    EmbeddingConfig,
    EnvConfig,
    ExperimentConfig,
    FewShotConfig,
    RLConfig,
    RunConfig,
    RunMetrics,
)
from app.schemas.meta import BatchMetrics, MetaConfig
from app.schemas.policy import PolicyConfig, TemperatureSchedule
from app.schemas.prior import ErrorResponse, PriorDistribution, PriorRequest, PriorResponse
from app.schemas.provider import (
    AdaptationSet,
    Demo,
    LatencyModel,
    ProviderConfig,
    ProviderStats,
    RemoteConfig,
)

__all__ = [
    "AdaptationSet",
    "BatchMetrics",
    "BoundConfig",
    "BoundInputs",
    "CQLConfig",
    "CacheConfig",
    "CacheEntryRecord",
    "CacheParams",
    "Demo",
    "EmbeddingConfig",
    "EnvConfig",
    "ErrorResponse",
    "ExperimentConfig",
    "FewShotConfig",
    "LatencyModel",
    "MetaConfig",
    "PolicyConfig",
    "PriorDistribution",
    "PriorRequest",
    "PriorResponse",
    "ProviderConfig",
    "ProviderStats",
    "RLConfig",
    "RemoteConfig",
    "RunConfig",
    "RunMetrics",
    "TemperatureSchedule",
]
