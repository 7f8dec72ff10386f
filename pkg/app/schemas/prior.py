# app/schemas/prior.py

"""
Prior distributions over symbolic actions, plus the JSON bodies of the
``/prior`` wire protocol.
"""

import math
from typing import Iterable, Mapping, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

SUM_TOLERANCE = 1e-9


class PriorDistribution(BaseModel):
    model_config = ConfigDict(frozen=True)

    probs: dict[str, float] = Field(
        ...,
        description="Probability of each symbolic action",
        examples=[{"north": 0.7, "south": 0.3}],
    )

    @model_validator(mode="after")
    def check_simplex(self):
        if not self.probs:
            raise ValueError("prior has no actions")
        for action, p in self.probs.items():
            if not math.isfinite(p) or p < 0:
                raise ValueError(f"probability for {action!r} must be finite and >= 0, got {p}")
        total = math.fsum(self.probs.values())
        if abs(total - 1.0) > SUM_TOLERANCE:
            raise ValueError(f"probabilities sum to {total}, expected 1")
        return self

    @classmethod
    def from_weights(cls, actions: Sequence[str], weights: Iterable[float]) -> "PriorDistribution":
        w = np.asarray(list(weights), dtype=float)
        if w.shape != (len(actions),):
            raise ValueError("weights and actions differ in length")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and non-negative")
        total = w.sum()
        if total <= 0:
            raise ValueError("all-zero probabilities")
        w = w / total
        return cls(probs={a: float(p) for a, p in zip(actions, w)})

    @classmethod
    def uniform(cls, actions: Sequence[str]) -> "PriorDistribution":
        return cls.from_weights(actions, np.ones(len(actions)))

    @property
    def actions(self) -> tuple[str, ...]:
        return tuple(self.probs)

    def support(self) -> list[str]:
        return [a for a, p in self.probs.items() if p > 0]

    def vector(self, actions: Sequence[str] | None = None) -> np.ndarray:
        actions = self.actions if actions is None else actions
        return np.array([self.probs.get(a, 0.0) for a in actions], dtype=float)

    def restrict(self, actions: Sequence[str]) -> "PriorDistribution":
        """Renormalized prior over a subset of actions."""
        return PriorDistribution.from_weights(list(actions), [self.probs.get(a, 0.0) for a in actions])

    def total_variation(self, other: "PriorDistribution") -> float:
        keys = set(self.probs) | set(other.probs)
        return 0.5 * sum(abs(self.probs.get(a, 0.0) - other.probs.get(a, 0.0)) for a in keys)


class PriorRequest(BaseModel):
    state: str = Field(..., min_length=1, description="State description text")
    actions: list[str] = Field(..., min_length=1, description="Symbolic action names to score")


class PriorResponse(BaseModel):
    probs: Mapping[str, float] = Field(..., description="Unnormalized or normalized action probabilities")


class ErrorResponse(BaseModel):
    error: str = Field(..., description="Error message")
