# app/environments/offline.py

"""Offline datasets collected with random, medium (epsilon-mixture) or expert behaviour."""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from app.models.rl import HybridAction, Transition

logger = logging.getLogger("app.environments")

POLICY_TAGS = ("random", "medium", "expert")


@dataclass
class OfflineDataset:
    transitions: list[Transition]
    behavior_policy_tag: str
    successes: list[bool] = field(default_factory=list)

    def __post_init__(self):
        if not self.transitions:
            raise ValueError("offline dataset is empty")
        if self.behavior_policy_tag not in POLICY_TAGS:
            raise ValueError(f"unknown behaviour policy: {self.behavior_policy_tag}")

    def __len__(self) -> int:
        return len(self.transitions)

    @property
    def success_rate(self) -> float:
        return sum(self.successes) / len(self.successes) if self.successes else 0.0

    def distinct_states(self) -> list[str]:
        """State ids in order of first appearance (as source or successor)."""
        seen: dict[str, None] = {}
        for t in self.transitions:
            seen.setdefault(t.s, None)
            seen.setdefault(t.s_next, None)
        return list(seen)

    def to_jsonl(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for t in self.transitions:
                fh.write(json.dumps({**t.to_dict(), "policy": self.behavior_policy_tag}, sort_keys=True) + "\n")


def random_action(env, rng: np.random.Generator):
    sym = env.actions[int(rng.integers(len(env.actions)))]
    if env.hybrid:
        return HybridAction(sym, (float(rng.uniform(0.0, 1.0)),))
    return sym


def as_hybrid(action) -> HybridAction:
    return action if isinstance(action, HybridAction) else HybridAction(action)


def behaviour_policy(env, policy_tag: str, epsilon: float = 0.5) -> Callable:
    if policy_tag == "random":
        return lambda state, rng: random_action(env, rng)
    if policy_tag == "expert":
        return lambda state, rng: env.expert_action(state)
    if policy_tag == "medium":
        return lambda state, rng: (
            random_action(env, rng) if rng.random() < epsilon else env.expert_action(state)
        )
    raise ValueError(f"unknown behaviour policy: {policy_tag}")


def rollout(env, policy: Callable, rng: np.random.Generator) -> tuple[list[Transition], float, bool]:
    """Play one episode; returns its transitions, undiscounted return and success flag."""
    state = env.reset(rng)
    transitions, total, success = [], 0.0, False
    while True:
        action = policy(state, rng)
        result = env.step(action)
        transitions.append(
            Transition(env.state_id(state), as_hybrid(action), result.reward, env.state_id(result.state), result.success)
        )
        total += result.reward
        state = result.state
        if result.done:
            success = result.success
            break
    return transitions, total, success


def generate_offline(env, policy_tag: str, episodes: int, seed: int, epsilon: float = 0.5) -> OfflineDataset:
    if episodes < 1:
        raise ValueError("episodes must be at least 1")
    rng = np.random.default_rng(seed)
    policy = behaviour_policy(env, policy_tag, epsilon)
    transitions: list[Transition] = []
    successes = []
    for _ in range(episodes):
        episode, _, success = rollout(env, policy, rng)
        transitions.extend(episode)
        successes.append(success)
    logger.info(
        "Generated %s dataset: %d episodes, %d transitions, success %.2f",
        policy_tag, episodes, len(transitions), sum(successes) / episodes,
    )
    return OfflineDataset(transitions=transitions, behavior_policy_tag=policy_tag, successes=successes)
