# app/schemas/meta.py

from pydantic import BaseModel, ConfigDict, Field, model_validator

from app.schemas.cache import DELTA_RANGE, K_RANGE, R_RANGE


class BatchMetrics(BaseModel):
    model_config = ConfigDict(frozen=True)

    mean_td_error: float = Field(..., ge=0, allow_inf_nan=False)
    hit_rate: float = Field(..., ge=0, le=1, allow_inf_nan=False)
    policy_variability: float = Field(..., ge=0, allow_inf_nan=False)


class MetaConfig(BaseModel):
    """Surrogate-gradient weights, step sizes and projection ranges for (K, delta, r)."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    enabled: bool = True
    lambda_k: float = Field(0.05, gt=0)
    lambda_delta: float = Field(0.1, gt=0)
    lambda_r: float = Field(0.02, gt=0)
    eta_k: float = Field(1e-3, gt=0)
    eta_delta: float = Field(5e-4, gt=0)
    eta_r: float = Field(1e-4, gt=0)
    k_min: float = Field(K_RANGE[0], ge=K_RANGE[0], le=K_RANGE[1])
    k_max: float = Field(K_RANGE[1], ge=K_RANGE[0], le=K_RANGE[1])
    delta_min: float = Field(DELTA_RANGE[0], ge=DELTA_RANGE[0], le=DELTA_RANGE[1])
    delta_max: float = Field(DELTA_RANGE[1], ge=DELTA_RANGE[0], le=DELTA_RANGE[1])
    r_min: float = Field(R_RANGE[0], ge=R_RANGE[0], le=R_RANGE[1])
    r_max: float = Field(R_RANGE[1], ge=R_RANGE[0], le=R_RANGE[1])

    @model_validator(mode="after")
    def check_ranges(self):
        for name in ("k", "delta", "r"):
            lo, hi = getattr(self, f"{name}_min"), getattr(self, f"{name}_max")
            if lo > hi:
                raise ValueError(f"meta.{name}_min ({lo}) exceeds meta.{name}_max ({hi})")
        return self
