# app/schemas/bound.py

from pydantic import BaseModel, ConfigDict, Field, field_validator


class BoundInputs(BaseModel):
    model_config = ConfigDict(frozen=True)

    kappa: float = Field(..., ge=0, allow_inf_nan=False, description="Sup-norm log-prior error")
    epsilon: float = Field(..., ge=0, allow_inf_nan=False, description="Sup-norm Q error")
    tau: float = Field(..., gt=0, allow_inf_nan=False)
    rho: float = Field(..., ge=0, allow_inf_nan=False, description="mu(s) / mean mu")

    @property
    def x(self) -> float:
        return self.kappa + self.epsilon / self.tau


class BoundConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    noise_levels: list[float] = Field(default_factory=lambda: [0.0, 0.1, 0.2, 0.4])
    samples: int = Field(500, ge=1)
    windows: int = Field(6, ge=3)
    window_episodes: int = Field(10, ge=1)
    drift_episode: int = Field(40, ge=1)

    @field_validator("noise_levels", mode="before")
    @classmethod
    def single_level(cls, value):
        return [value] if isinstance(value, (int, float)) else value
