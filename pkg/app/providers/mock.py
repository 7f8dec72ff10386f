# app/providers/mock.py

"""
Deterministic stand-in for an expensive prior source.

The prior is ``softmax(sharpness * progress + offset)`` where ``progress`` is the
environment's goal-progress score per action and ``offset`` is a per-state logit
adjustment that starts at zero and is only changed by few-shot adaptation.
Every query charges the miss cost of the latency model to a virtual clock.
"""

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import softmax

from app.exceptions import ProviderError, ProviderNotAdaptableError
from app.models.rl import HybridAction
from app.operations.fewshot import Adam, adaptation_loss, cross_entropy
from app.schemas import AdaptationSet, Demo, LatencyModel, PriorDistribution, ProviderStats

logger = logging.getLogger("app.providers")


@dataclass(frozen=True)
class AdaptationPoint:
    step: int
    loss: float
    cross_entropy: float


class MockPriorProvider:
    kind = "mock"
    adaptable = True

    def __init__(self, env, sharpness: float = 2.0, latency: LatencyModel | None = None):
        if sharpness <= 0:
            raise ValueError("sharpness must be positive")
        self.env = env
        self.sharpness = sharpness
        self.latency = latency or LatencyModel()
        self.stats = ProviderStats()
        self.last_latency_ms = 0.0
        self.logit_offsets: dict[str, np.ndarray] = {}
        self.adaptation_history: list[AdaptationPoint] = []

    def _state_id(self, state) -> str:
        try:
            state_id = self.env.state_id(state)
            self.env.state_from_id(state_id)
        except (AttributeError, TypeError, ValueError) as exc:
            raise ProviderError(f"unknown state: {state!r}") from exc
        return state_id

    def base_logits(self, state) -> np.ndarray:
        scores = self.env.progress_scores(state)
        return self.sharpness * np.array([scores[a] for a in self.env.actions])

    def logits(self, state) -> np.ndarray:
        offset = self.logit_offsets.get(self._state_id(state))
        base = self.base_logits(state)
        return base if offset is None else base + offset

    def peek_prior(self, state) -> PriorDistribution:
        """The current prior at ``state`` without touching the query statistics."""
        return PriorDistribution.from_weights(self.env.actions, softmax(self.logits(state)))

    def query(self, state) -> PriorDistribution:
        prior = self.peek_prior(state)
        self.last_latency_ms = self.latency.miss_cost_ms
        self.stats.record(self.last_latency_ms)
        return prior

    def query_description(self, description: str, actions: list[str]) -> PriorDistribution:
        """Wire-protocol entry point: parse a state description and score the requested actions."""
        try:
            state = self.env.parse_description(description)
        except (AttributeError, ValueError) as exc:
            raise ProviderError(str(exc)) from exc
        unknown = [a for a in actions if a not in self.env.actions]
        if unknown:
            raise ProviderError(f"unknown actions: {', '.join(unknown)}")
        full = dict(zip(self.env.actions, self.logits(state)))
        weights = softmax(np.array([full[a] for a in actions]))
        self.last_latency_ms = self.latency.miss_cost_ms
        self.stats.record(self.last_latency_ms)
        return PriorDistribution.from_weights(actions, weights)


def adapt_prior(provider, demos: AdaptationSet, steps: int, lr: float, record_every: int = 1):
    """Few-shot adaptation of the per-state logits towards the demonstrated actions.

    Minimises sum_j ||pi(.|s_j) - onehot(a*_j)||^2 - lambda_ent * H(pi(.|s_j)) with Adam.
    """
    if not getattr(provider, "adaptable", False):
        raise ProviderNotAdaptableError(getattr(provider, "kind", type(provider).__name__))
    if steps < 0:
        raise ValueError("steps must be non-negative")
    env = provider.env
    states = [env.state_from_id(d.state_id) for d in demos.demos]
    try:
        targets = np.array([env.actions.index(d.action) for d in demos.demos])
    except ValueError as exc:
        raise ValueError(f"demonstrated action not in the action vocabulary: {exc}") from exc

    base = np.stack([provider.base_logits(s) for s in states])
    z = np.stack([provider.logits(s) for s in states])
    optimizer = Adam(lr=lr)
    history = []
    for step in range(steps + 1):
        loss, grad = adaptation_loss(z, targets, demos.lambda_ent)
        if step % record_every == 0 or step == steps:
            history.append(AdaptationPoint(step, loss, cross_entropy(z, targets)))
        if step == steps:
            break
        z = optimizer.step(z, grad)

    for demo, row, base_row in zip(demos.demos, z, base):
        provider.logit_offsets[demo.state_id] = row - base_row
    provider.adaptation_history = history
    logger.info(
        "Adapted prior on %d demos: cross-entropy %.4f -> %.4f",
        len(states), history[0].cross_entropy, history[-1].cross_entropy,
    )
    return provider


def expert_demos(env, shots: int, seed: int, lambda_ent: float = 0.0, max_tries: int = 100) -> AdaptationSet:
    """Evenly spaced expert decisions along one expert trajectory, first and last included."""
    rng = np.random.default_rng(seed)
    best = []
    for _ in range(max_tries):
        state = env.reset(rng)
        trajectory = []
        while True:
            action = env.expert_action(state)
            trajectory.append((env.state_id(state), action.symbolic if isinstance(action, HybridAction) else action))
            result = env.step(action)
            state = result.state
            if result.done:
                break
        if len(trajectory) > len(best):
            best = trajectory
        if len(best) >= shots:
            break
    # distinct states only; a shortest path never revisits one
    unique = list(dict((sid, act) for sid, act in best).items())
    idx = sorted({int(round(i)) for i in np.linspace(0, len(unique) - 1, min(shots, len(unique)))})
    return AdaptationSet(demos=[Demo(state_id=unique[i][0], action=unique[i][1]) for i in idx], lambda_ent=lambda_ent)


def greedy_prior_action(provider, state):
    prior = provider.peek_prior(state)
    sym = max(prior.actions, key=lambda a: (prior.probs[a], -prior.actions.index(a)))
    return HybridAction(sym, (1.0,)) if provider.env.hybrid else sym
