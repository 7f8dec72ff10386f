# app/environments/__init__.py

from typing import Protocol

import numpy as np

from app.environments.offline import OfflineDataset, generate_offline, rollout
from app.environments.pointreach import PointReach, PointState
from app.environments.textgrid import GridState, StepResult, TextGrid
from app.schemas import EnvConfig


class Environment(Protocol):
    name: str
    actions: tuple[str, ...]
    hybrid: bool
    max_steps: int

    def reset(self, rng: np.random.Generator): ...

    def step(self, action) -> StepResult: ...

    def state_id(self, state) -> str: ...

    def describe(self, state) -> str: ...

    def features(self, state) -> np.ndarray: ...

    def progress_scores(self, state) -> dict[str, float]: ...

    def expert_action(self, state): ...


class EnvironmentFactory:
    """Builds an environment from the ``env`` config section by name."""

    _map = {
        "textgrid": TextGrid,
        "pointreach": PointReach,
    }

    @classmethod
    def get(cls, cfg: EnvConfig) -> Environment:
        if cfg.name not in cls._map:
            raise ValueError(f"Unknown environment: {cfg.name}")
        return cls._map[cfg.name].from_config(cfg)


__all__ = [
    "Environment",
    "EnvironmentFactory",
    "GridState",
    "OfflineDataset",
    "PointReach",
    "PointState",
    "StepResult",
    "TextGrid",
    "generate_offline",
    "rollout",
]
