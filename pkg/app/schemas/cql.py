# app/schemas/cql.py

from typing import Literal

from pydantic import BaseModel, ConfigDict, Field


class CQLConfig(BaseModel):
    model_config = ConfigDict(extra="forbid")

    dataset: Literal["random", "medium", "expert"] = "random"
    episodes: int = Field(100, ge=1, description="Episodes collected into the offline dataset")
    alpha_cql: float = Field(1.0, ge=0, allow_inf_nan=False)
    beta_prior: float = Field(0.5, ge=0, allow_inf_nan=False)
    epochs: int = Field(300, ge=1)
    lr: float = Field(0.5, gt=0)
    batch_size: int = Field(64, ge=1)
    eval_every: int = Field(10, ge=1)
    eval_episodes: int = Field(20, ge=1)
    window: int = Field(50, ge=1, description="Epochs performance must stay stable to count as converged")
    tolerance: float = Field(0.01, ge=0, description="Allowed deviation from final normalized performance")
