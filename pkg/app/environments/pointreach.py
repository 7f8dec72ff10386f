# app/environments/pointreach.py

"""
Continuous reach task with hybrid actions: a symbolic direction plus a step
scale u in [0, 1]. Reward is the negative distance to the goal after the move;
reaching the tolerance disc adds +1 and ends the episode.
"""

from dataclasses import dataclass

import numpy as np

from app.environments.textgrid import StepResult
from app.models.rl import HybridAction
from app.schemas import EnvConfig

SYMBOLS = ("north", "south", "east", "west")
DIRECTIONS = {"north": (0.0, 1.0), "south": (0.0, -1.0), "east": (1.0, 0.0), "west": (-1.0, 0.0)}
STEP_LENGTH = 0.2
GOAL_BONUS = 1.0


@dataclass(frozen=True)
class PointState:
    x: float
    y: float


class PointReach:
    name = "pointreach"
    actions = SYMBOLS
    hybrid = True

    def __init__(
        self,
        goal: tuple[float, float] = (0.5, 0.9),
        tolerance: float = 0.05,
        max_steps: int = 40,
        random_start: bool = True,
        start: tuple[float, float] = (0.1, 0.1),
        bins: int = 10,
    ):
        for label, (x, y) in (("goal", goal), ("start", start)):
            if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
                raise ValueError(f"{label} position {(x, y)} outside the unit square")
        self.goal = np.array(goal, dtype=float)
        self.tolerance = tolerance
        self.max_steps = max_steps
        self.random_start = random_start
        self.start = tuple(start)
        self.bins = bins
        self.state: PointState | None = None
        self.t = 0

    @classmethod
    def from_config(cls, cfg: EnvConfig) -> "PointReach":
        return cls(
            goal=(cfg.goal_x, cfg.goal_y),
            tolerance=cfg.tolerance,
            max_steps=cfg.max_steps or 40,
            random_start=cfg.random_start,
            start=(cfg.start_x, cfg.start_y),
            bins=cfg.bins,
        )

    def _distance(self, x: float, y: float) -> float:
        return float(np.hypot(x - self.goal[0], y - self.goal[1]))

    def reset(self, rng: np.random.Generator) -> PointState:
        if self.random_start:
            while True:
                x, y = (float(v) for v in rng.uniform(0.0, 1.0, size=2))
                if self._distance(x, y) >= self.tolerance:
                    break
        else:
            x, y = self.start
        self.state = PointState(x, y)
        self.t = 0
        return self.state

    def transition(self, state: PointState, action: HybridAction) -> tuple[PointState, float, bool]:
        if action.symbolic not in DIRECTIONS:
            raise ValueError(f"unknown action: {action.symbolic}")
        if len(action.continuous) != 1:
            raise ValueError("pointreach expects exactly one continuous component")
        u = action.continuous[0]
        if not 0.0 <= u <= 1.0:
            raise ValueError(f"continuous action u={u} outside [0, 1]")
        dx, dy = DIRECTIONS[action.symbolic]
        x = min(max(state.x + STEP_LENGTH * u * dx, 0.0), 1.0)
        y = min(max(state.y + STEP_LENGTH * u * dy, 0.0), 1.0)
        distance = self._distance(x, y)
        reached = distance < self.tolerance
        return PointState(x, y), -distance + (GOAL_BONUS if reached else 0.0), reached

    def step(self, action: HybridAction) -> StepResult:
        if self.state is None:
            raise RuntimeError("step() called before reset()")
        nxt, reward, reached = self.transition(self.state, action)
        self.state = nxt
        self.t += 1
        return StepResult(state=nxt, reward=reward, done=reached or self.t >= self.max_steps, success=reached)

    def state_id(self, state: PointState) -> str:
        bx = min(int(state.x * self.bins), self.bins - 1)
        by = min(int(state.y * self.bins), self.bins - 1)
        return f"{bx},{by}"

    def state_from_id(self, state_id: str) -> PointState:
        try:
            bx, by = (int(v) for v in state_id.split(","))
        except ValueError as exc:
            raise ValueError(f"unknown state: {state_id!r}") from exc
        if not (0 <= bx < self.bins and 0 <= by < self.bins):
            raise ValueError(f"unknown state: {state_id!r}")
        return PointState((bx + 0.5) / self.bins, (by + 0.5) / self.bins)

    def describe(self, state: PointState) -> str:
        return f"You are at ({state.x:.2f},{state.y:.2f}). Goal at ({self.goal[0]:.2f},{self.goal[1]:.2f})."

    def features(self, state: PointState) -> np.ndarray:
        return np.array([state.x, state.y])

    @property
    def feature_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros(2), np.ones(2)

    def progress_scores(self, state: PointState) -> dict[str, float]:
        before = self._distance(state.x, state.y)
        scores = {}
        for sym in self.actions:
            nxt, _, _ = self.transition(state, HybridAction(sym, (1.0,)))
            scores[sym] = (before - self._distance(nxt.x, nxt.y)) / STEP_LENGTH
        return scores

    def expert_action(self, state: PointState) -> HybridAction:
        dx, dy = self.goal[0] - state.x, self.goal[1] - state.y
        if abs(dx) >= abs(dy):
            sym, gap = ("east" if dx > 0 else "west"), abs(dx)
        else:
            sym, gap = ("north" if dy > 0 else "south"), abs(dy)
        return HybridAction(sym, (float(min(1.0, gap / STEP_LENGTH)),))
