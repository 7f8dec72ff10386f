# app/schemas/cache.py

import math
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field

from app.schemas.prior import PriorDistribution

K_RANGE = (100.0, 1000.0)
DELTA_RANGE = (0.5, 0.99)
R_RANGE = (0.01, 0.2)


class CacheParams(BaseModel):
    """Live cache parameters, always inside the meta-optimizer's box."""

    model_config = ConfigDict(frozen=True)

    k: float = Field(500.0, ge=K_RANGE[0], le=K_RANGE[1], description="Capacity (real valued, rounded for eviction)")
    delta: float = Field(0.8, ge=DELTA_RANGE[0], le=DELTA_RANGE[1], description="Cosine similarity threshold for a hit")
    r: float = Field(0.1, ge=R_RANGE[0], le=R_RANGE[1], description="Refresh probability per environment step")

    @property
    def effective_capacity(self) -> int:
        # round half up, never below one entry
        return max(1, int(math.floor(self.k + 0.5)))


class CacheConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k0: float = Field(500.0, ge=K_RANGE[0], le=K_RANGE[1])
    delta0: float = Field(0.8, ge=DELTA_RANGE[0], le=DELTA_RANGE[1])
    r0: float = Field(0.1, ge=R_RANGE[0], le=R_RANGE[1])
    refresh: bool = True
    refresh_strategy: Literal["visitation", "uniform"] = "visitation"

    def initial_params(self) -> CacheParams:
        return CacheParams(k=self.k0, delta=self.delta0, r=self.r0)


class CacheEntryRecord(BaseModel):
    """One line of a cache snapshot export."""

    key: list[float]
    prior: dict[str, float]
    last_access: int
    inserted_at: int
    hits: int
    source_state_id: str

    def to_prior(self) -> PriorDistribution:
        return PriorDistribution(probs=self.prior)
