# app/schemas/policy.py

from pydantic import BaseModel, ConfigDict, Field, model_validator


class TemperatureSchedule(BaseModel):
    """tau(h) = max(floor, base * exp(-decay * h))."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    base: float = Field(0.8, gt=0)
    decay: float = Field(2.0, ge=0)
    floor: float = Field(0.1, gt=0)

    @model_validator(mode="after")
    def floor_below_base(self):
        if self.floor > self.base:
            raise ValueError("schedule.floor must not exceed schedule.base")
        return self


class PolicyConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    k: int = Field(5, ge=1, description="Candidate count")
    window: int = Field(500, ge=1, description="Lookups in the sliding hit-rate window")
    alpha: float = Field(1.0, gt=0, description="Temperature of the KL-regularised variant")
    mc_samples: int = Field(4, ge=1, description="Continuous samples used to marginalise Q over u")
