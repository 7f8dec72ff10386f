# app/models/rl.py

"""
Learner state for the online agent: tabular Q-values, the bucketed Gaussian
head for continuous action parts, and a FIFO replay buffer.
"""

import csv
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class HybridAction:
    symbolic: str
    continuous: tuple[float, ...] = ()


@dataclass(frozen=True)
class Transition:
    s: str
    a: HybridAction
    reward: float
    s_next: str
    done: bool

    def __post_init__(self):
        if not np.isfinite(self.reward):
            raise ValueError(f"transition reward must be finite, got {self.reward}")

    def to_dict(self) -> dict:
        return {
            "s": self.s,
            "a": self.a.symbolic,
            "u": list(self.a.continuous),
            "reward": self.reward,
            "s_next": self.s_next,
            "done": self.done,
        }


class QTable:
    """Q(s, a) over string state ids and action keys; unseen pairs read as 0.

    Discrete environments key actions by their symbolic name. When ``u_bins`` is
    set the key also carries the bin of the continuous part (``"north@2"``).
    """

    def __init__(self, actions: Sequence[str], gamma: float = 0.95, lr: float = 0.5, u_bins: int | None = None):
        if not 0.0 <= gamma < 1.0:
            raise ValueError(f"gamma must be in [0, 1), got {gamma}")
        if lr <= 0:
            raise ValueError(f"lr must be positive, got {lr}")
        self.symbols = tuple(actions)
        self.u_bins = u_bins
        if u_bins:
            self.actions = tuple(f"{a}@{b}" for a in self.symbols for b in range(u_bins))
        else:
            self.actions = self.symbols
        self.gamma = gamma
        self.lr = lr
        self.values: dict[tuple[str, str], float] = {}

    def key_for(self, a: HybridAction) -> str:
        if not self.u_bins:
            return a.symbolic
        return f"{a.symbolic}@{self.u_bin(a.continuous[0])}"

    def u_bin(self, u: float) -> int:
        return min(int(u * self.u_bins), self.u_bins - 1)

    def get(self, s: str, action_key: str) -> float:
        return self.values.get((s, action_key), 0.0)

    def set(self, s: str, action_key: str, value: float) -> None:
        if not np.isfinite(value):
            raise ValueError(f"Q-value for ({s}, {action_key}) must be finite")
        self.values[(s, action_key)] = value

    def max_value(self, s: str) -> float:
        return max(self.get(s, a) for a in self.actions)

    def row(self, s: str) -> dict[str, float]:
        return {a: self.get(s, a) for a in self.actions}

    def states(self) -> list[str]:
        return sorted({s for s, _ in self.values})

    def export_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["state_id", "action", "value"])
            for (s, a), v in sorted(self.values.items()):
                writer.writerow([s, a, repr(v)])


@dataclass
class GaussianHead:
    """pi(u | s, a_sym) = N(mean[bucket(s), a_sym], sigma^2), clipped to the action bounds."""

    dim: int = 1
    sigma: float = 0.3
    lr_u: float = 0.1
    lr_v: float = 0.1
    init_mean: float = 0.5
    low: float = 0.0
    high: float = 1.0
    means: dict[tuple[str, str], np.ndarray] = field(default_factory=dict)
    value_baseline: dict[str, float] = field(default_factory=dict)

    def __post_init__(self):
        if self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def mean(self, bucket: str, symbolic: str) -> np.ndarray:
        key = (bucket, symbolic)
        if key not in self.means:
            self.means[key] = np.full(self.dim, self.init_mean)
        return self.means[key]

    def value(self, bucket: str) -> float:
        return self.value_baseline.get(bucket, 0.0)

    def sample(self, bucket: str, symbolic: str, rng: np.random.Generator) -> tuple[float, ...]:
        u = self.mean(bucket, symbolic) + self.sigma * rng.standard_normal(self.dim)
        return tuple(float(x) for x in np.clip(u, self.low, self.high))


class ReplayBuffer:
    """FIFO transition store; the oldest transition is dropped at capacity."""

    def __init__(self, capacity: int = 10_000):
        if capacity < 1:
            raise ValueError("replay capacity must be at least 1")
        self.capacity = capacity
        self._items: deque[Transition] = deque(maxlen=capacity)

    def __len__(self) -> int:
        return len(self._items)

    def __iter__(self):
        return iter(self._items)

    def push(self, t: Transition) -> None:
        self._items.append(t)

    def extend(self, ts: Iterable[Transition]) -> None:
        self._items.extend(ts)

    def sample(self, batch_size: int, rng: np.random.Generator) -> list[Transition]:
        if not self._items:
            return []
        idx = rng.integers(0, len(self._items), size=batch_size)
        return [self._items[i] for i in idx]
