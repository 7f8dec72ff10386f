# app/schemas/experiment.py

"""
Top-level experiment configuration and per-run metrics.

Every section forbids unknown fields, so a misspelled key in a config file
surfaces as a validation error instead of being silently ignored.
"""

import hashlib
import json
from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from app.schemas.bound import BoundConfig
from app.schemas.cache import CacheConfig
from app.schemas.cql import CQLConfig
from app.schemas.meta import MetaConfig
from app.schemas.policy import PolicyConfig, TemperatureSchedule
from app.schemas.provider import ProviderConfig


class EnvConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    name: Literal["textgrid", "pointreach"] = "textgrid"
    size: int = Field(5, ge=2)
    key_x: int = 1
    key_y: int = 3
    door_x: int = 3
    door_y: int = 1
    max_steps: int | None = Field(None, ge=1, description="Defaults to 60 on textgrid, 40 on pointreach")
    random_start: bool = True
    start_x: float = 0.0
    start_y: float = 0.0
    goal_x: float = Field(0.5, ge=0, le=1)
    goal_y: float = Field(0.9, ge=0, le=1)
    tolerance: float = Field(0.05, gt=0)
    bins: int = Field(10, ge=1, description="Grid resolution of pointreach state ids")

    @model_validator(mode="after")
    def positions_inside(self):
        if self.name == "textgrid":
            for label, x, y in (("key", self.key_x, self.key_y), ("door", self.door_x, self.door_y)):
                if not (0 <= x < self.size and 0 <= y < self.size):
                    raise ValueError(f"env.{label} position ({x},{y}) outside a {self.size}x{self.size} grid")
            if not (float(self.start_x).is_integer() and float(self.start_y).is_integer()):
                raise ValueError(f"env.start ({self.start_x},{self.start_y}) must be a whole grid cell on textgrid")
            if not (0 <= self.start_x < self.size and 0 <= self.start_y < self.size):
                raise ValueError(f"env.start ({self.start_x:g},{self.start_y:g}) outside a {self.size}x{self.size} grid")
            if (self.key_x, self.key_y) == (self.door_x, self.door_y):
                raise ValueError("env.key and env.door must be on different cells")
        return self


class EmbeddingConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    mode: Literal["text", "numeric"] | None = Field(None, description="Defaults to text on textgrid, numeric on pointreach")
    dim: int = Field(64, ge=2)
    seed: int = 0
    buckets: int = Field(8, ge=1)
    max_ngram: int = Field(2, ge=1, le=3)


class RLConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    gamma: float = Field(0.95, ge=0, lt=1)
    lr: float = Field(0.5, gt=0, le=1)
    batch_size: int = Field(64, ge=1)
    buffer_capacity: int = Field(10_000, ge=1)
    replay_updates: int = Field(4, ge=0)
    lr_u: float = Field(0.1, gt=0)
    lr_v: float = Field(0.1, gt=0)
    sigma_start: float = Field(0.3, gt=0)
    sigma_end: float = Field(0.05, gt=0)
    u_bins: int = Field(4, ge=1)


class FewShotConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    shots: int = Field(5, ge=1)
    steps: int = Field(200, ge=1)
    lr: float = Field(0.1, gt=0)
    lambda_ent: float = Field(0.0, ge=0)
    eval_episodes: int = Field(20, ge=1)


class RunConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    episodes: int = Field(200, ge=1)
    seeds: list[int] = Field(default_factory=lambda: [0, 1, 2, 3, 4], min_length=1)
    out_dir: str = "results"
    trace: bool = False

    @field_validator("seeds", mode="before")
    @classmethod
    def single_seed(cls, value):
        return [value] if isinstance(value, int) else value


class ExperimentConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    env: EnvConfig = Field(default_factory=EnvConfig)
    embedding: EmbeddingConfig = Field(default_factory=EmbeddingConfig)
    cache: CacheConfig = Field(default_factory=CacheConfig)
    meta: MetaConfig = Field(default_factory=MetaConfig)
    schedule: TemperatureSchedule = Field(default_factory=TemperatureSchedule)
    policy: PolicyConfig = Field(default_factory=PolicyConfig)
    provider: ProviderConfig = Field(default_factory=ProviderConfig)
    rl: RLConfig = Field(default_factory=RLConfig)
    offline: CQLConfig = Field(default_factory=CQLConfig)
    bound: BoundConfig = Field(default_factory=BoundConfig)
    fewshot: FewShotConfig = Field(default_factory=FewShotConfig)
    run: RunConfig = Field(default_factory=RunConfig)

    @model_validator(mode="after")
    def cache_start_in_range(self):
        m, c = self.meta, self.cache
        if not (m.k_min <= c.k0 <= m.k_max):
            raise ValueError(f"cache.k0={c.k0} outside [{m.k_min}, {m.k_max}]")
        if not (m.delta_min <= c.delta0 <= m.delta_max):
            raise ValueError(f"cache.delta0={c.delta0} outside [{m.delta_min}, {m.delta_max}]")
        if not (m.r_min <= c.r0 <= m.r_max):
            raise ValueError(f"cache.r0={c.r0} outside [{m.r_min}, {m.r_max}]")
        return self

    @property
    def embedding_mode(self) -> str:
        if self.embedding.mode is not None:
            return self.embedding.mode
        return "text" if self.env.name == "textgrid" else "numeric"

    def config_hash(self) -> str:
        canonical = json.dumps(self.model_dump(mode="json", by_alias=True), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


class RunMetrics(BaseModel):
    """Everything one (variant, seed) online run reports."""

    variant: str
    seed: int
    returns: list[float] = Field(default_factory=list)
    successes: list[bool] = Field(default_factory=list)
    steps: list[int] = Field(default_factory=list)
    cumulative_queries: list[int] = Field(default_factory=list)
    hit_rates: list[float] = Field(default_factory=list)
    taus: list[float] = Field(default_factory=list)
    episode_latency_ms: list[float] = Field(default_factory=list)
    hits: int = 0
    misses: int = 0
    refreshes: int = 0
    provider_queries: int = 0
    step_latencies_ms: list[float] = Field(default_factory=list)
    param_trajectory: list[dict[str, float]] = Field(default_factory=list)
    wall_clock_s: float = 0.0

    @property
    def total_steps(self) -> int:
        return sum(self.steps)

    @property
    def hit_rate(self) -> float:
        lookups = self.hits + self.misses
        return self.hits / lookups if lookups else 0.0

    def final_success(self, last: int = 50) -> float:
        tail = self.successes[-last:]
        return sum(tail) / len(tail) if tail else 0.0
