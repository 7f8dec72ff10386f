# app/environments/textgrid.py

"""
Key-and-door gridworld with fixed-template text descriptions.

The agent must walk to the key, pick it up, walk to the door and open it.
Positions are (x, y) with north = +y. Every step costs 0.01 except the
successful ``open``, which pays +1 and ends the episode.
"""

import re
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from app.schemas import EnvConfig

ACTIONS = ("north", "south", "east", "west", "pickup", "open")
MOVES = {"north": (0, 1), "south": (0, -1), "east": (1, 0), "west": (-1, 0)}
STEP_PENALTY = -0.01
SUCCESS_REWARD = 1.0

DESCRIPTION_PATTERN = re.compile(
    r"^You are at \((\d+),(\d+)\)\. Key at \((\d+),(\d+)\)\. Door at \((\d+),(\d+)\)\. Carrying: (yes|no)\.$"
)


@dataclass(frozen=True)
class GridState:
    x: int
    y: int
    has_key: bool = False


@dataclass(frozen=True)
class StepResult:
    state: object
    reward: float
    done: bool
    success: bool = False


class TextGrid:
    name = "textgrid"
    actions = ACTIONS
    hybrid = False

    def __init__(
        self,
        size: int = 5,
        key: tuple[int, int] = (1, 3),
        door: tuple[int, int] = (3, 1),
        max_steps: int = 60,
        random_start: bool = True,
        start: tuple[int, int] = (0, 0),
    ):
        for label, (x, y) in (("key", key), ("door", door), ("start", start)):
            if not (0 <= x < size and 0 <= y < size):
                raise ValueError(f"{label} position {(x, y)} outside the grid")
        self.size = size
        self.key = tuple(key)
        self.door = tuple(door)
        self.max_steps = max_steps
        self.random_start = random_start
        self.start = tuple(start)
        self.state: GridState | None = None
        self.t = 0

    @classmethod
    def from_config(cls, cfg: EnvConfig) -> "TextGrid":
        return cls(
            size=cfg.size,
            key=(cfg.key_x, cfg.key_y),
            door=(cfg.door_x, cfg.door_y),
            max_steps=cfg.max_steps or 60,
            random_start=cfg.random_start,
            start=(int(cfg.start_x), int(cfg.start_y)),
        )

    # -- dynamics ---------------------------------------------------------

    def reset(self, rng: np.random.Generator) -> GridState:
        if self.random_start:
            x, y = (int(v) for v in rng.integers(0, self.size, size=2))
        else:
            x, y = self.start
        self.state = GridState(x, y, False)
        self.t = 0
        return self.state

    def transition(self, state: GridState, action: str) -> tuple[GridState, float, bool]:
        if action in MOVES:
            dx, dy = MOVES[action]
            x = min(max(state.x + dx, 0), self.size - 1)
            y = min(max(state.y + dy, 0), self.size - 1)
            return GridState(x, y, state.has_key), STEP_PENALTY, False
        if action == "pickup":
            on_key = (state.x, state.y) == self.key
            return GridState(state.x, state.y, state.has_key or on_key), STEP_PENALTY, False
        if action == "open":
            if state.has_key and (state.x, state.y) == self.door:
                return state, SUCCESS_REWARD, True
            return state, STEP_PENALTY, False
        raise ValueError(f"unknown action: {action}")

    def step(self, action: str) -> StepResult:
        if self.state is None:
            raise RuntimeError("step() called before reset()")
        nxt, reward, success = self.transition(self.state, action)
        self.state = nxt
        self.t += 1
        return StepResult(state=nxt, reward=reward, done=success or self.t >= self.max_steps, success=success)

    # -- identity and rendering ------------------------------------------

    def state_id(self, state: GridState) -> str:
        return f"{state.x},{state.y},{int(state.has_key)}"

    def state_from_id(self, state_id: str) -> GridState:
        try:
            x, y, k = (int(v) for v in state_id.split(","))
        except ValueError as exc:
            raise ValueError(f"unknown state: {state_id!r}") from exc
        if not (0 <= x < self.size and 0 <= y < self.size) or k not in (0, 1):
            raise ValueError(f"unknown state: {state_id!r}")
        return GridState(x, y, bool(k))

    def describe(self, state: GridState) -> str:
        return (
            f"You are at ({state.x},{state.y}). Key at ({self.key[0]},{self.key[1]}). "
            f"Door at ({self.door[0]},{self.door[1]}). Carrying: {'yes' if state.has_key else 'no'}."
        )

    def parse_description(self, text: str) -> GridState:
        match = DESCRIPTION_PATTERN.match(text.strip())
        if not match:
            raise ValueError("unknown state: description does not follow the grid template")
        x, y, kx, ky, dx, dy = (int(g) for g in match.groups()[:6])
        if (kx, ky) != self.key or (dx, dy) != self.door:
            raise ValueError("unknown state: key or door position differs from this grid")
        if not (0 <= x < self.size and 0 <= y < self.size):
            raise ValueError(f"unknown state: position ({x},{y}) outside the grid")
        return GridState(x, y, match.group(7) == "yes")

    def features(self, state: GridState) -> np.ndarray:
        return np.array([state.x, state.y, float(state.has_key)])

    @property
    def feature_bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.zeros(3), np.array([self.size - 1, self.size - 1, 1.0])

    def all_states(self) -> list[GridState]:
        return [GridState(x, y, k) for k in (False, True) for x in range(self.size) for y in range(self.size)]

    # -- goal progress and the shortest-path oracle ----------------------

    def subgoal(self, state: GridState) -> tuple[int, int]:
        return self.door if state.has_key else self.key

    def progress_scores(self, state: GridState) -> dict[str, float]:
        """Decrease in Manhattan distance to the current subgoal for each action."""
        gx, gy = self.subgoal(state)
        before = abs(state.x - gx) + abs(state.y - gy)
        scores = {}
        for action in self.actions:
            nxt, _, _ = self.transition(state, action)
            scores[action] = float(before - (abs(nxt.x - gx) + abs(nxt.y - gy)))
        return scores

    @cached_property
    def _steps_to_success(self) -> dict[GridState, int]:
        # shortest number of actions to a successful open, by relaxation
        inf = 10**9
        dist = {s: inf for s in self.all_states()}
        changed = True
        while changed:
            changed = False
            for s in dist:
                best = dist[s]
                for a in self.actions:
                    nxt, _, done = self.transition(s, a)
                    cost = 1 if done else 1 + dist[nxt]
                    best = min(best, cost)
                if best < dist[s]:
                    dist[s] = best
                    changed = True
        return dist

    def expert_action(self, state: GridState) -> str:
        """First action in vocabulary order on a shortest path to success."""
        dist = self._steps_to_success
        best_action, best_cost = None, None
        for a in self.actions:
            nxt, _, done = self.transition(state, a)
            cost = 1 if done else 1 + dist[nxt]
            if best_cost is None or cost < best_cost:
                best_action, best_cost = a, cost
        return best_action

    def optimal_return(self, state: GridState) -> float:
        steps = self._steps_to_success[state]
        return (steps - 1) * STEP_PENALTY + SUCCESS_REWARD
