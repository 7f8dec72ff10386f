# app/schemas/provider.py

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field, model_validator


class LatencyModel(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    hit_cost_ms: float = Field(18.7, gt=0, alias="hit_ms")
    miss_cost_ms: float = Field(349.0, gt=0, alias="miss_ms")


class RemoteConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    url: str = "http://127.0.0.1:8000"
    timeout_ms: float = Field(5000.0, gt=0)
    fallback: Literal["abort", "uniform"] = "abort"


class ProviderConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    kind: Literal["mock", "remote"] = "mock"
    sharpness: float = Field(2.0, gt=0)
    latency: LatencyModel = Field(default_factory=LatencyModel)
    remote: RemoteConfig = Field(default_factory=RemoteConfig)


class Demo(BaseModel):
    state_id: str
    action: str


class AdaptationSet(BaseModel):
    demos: list[Demo] = Field(..., min_length=1)
    lambda_ent: float = Field(0.0, ge=0)

    @model_validator(mode="after")
    def distinct_states(self):
        ids = [d.state_id for d in self.demos]
        if len(set(ids)) != len(ids):
            raise ValueError("demonstrations must be on distinct states")
        return self


class ProviderStats(BaseModel):
    query_count: int = 0
    simulated_latency_total_ms: float = 0.0

    def record(self, latency_ms: float) -> None:
        self.query_count += 1
        self.simulated_latency_total_ms += latency_ms
