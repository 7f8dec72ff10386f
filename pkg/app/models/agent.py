# app/models/agent.py

"""
Two-stage posterior sampling agent.

Stage one gets a prior for the state: a semantic-cache hit, or a provider query
whose answer is inserted into the cache. Stage two samples up to ``k`` distinct
candidates from the prior, reweights them by ``exp(Q / tau)`` and draws one.
"""

import logging
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Callable, Mapping

import numpy as np

from app.models.cache import SemanticCache
from app.models.rl import GaussianHead, HybridAction, QTable
from app.operations.embedding import Embedding
from app.operations.posterior import kl_regularized_policy, posterior_weights, temperature
from app.schemas import PriorDistribution, TemperatureSchedule

logger = logging.getLogger("app.agent")


@dataclass(frozen=True)
class PolicySnapshot:
    q_values: Mapping[str, float]
    tau: float
    k: int = 5

    def __post_init__(self):
        if not self.tau > 0:
            raise ValueError("tau must be positive")
        if self.k < 1:
            raise ValueError("k must be at least 1")


@dataclass
class ActionTrace:
    state_id: str
    hit: bool
    similarity: float | None
    tau: float
    candidates: list[str]
    weights: list[float]
    action: str
    continuous: list[float] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


class HitRateWindow:
    """Hit fraction over the most recent ``size`` cache lookups (0 before any lookup)."""

    def __init__(self, size: int = 500):
        self._flags: deque[bool] = deque(maxlen=size)
        self._hits = 0

    def record(self, hit: bool) -> None:
        if len(self._flags) == self._flags.maxlen and self._flags[0]:
            self._hits -= 1
        self._flags.append(hit)
        self._hits += int(hit)

    @property
    def rate(self) -> float:
        return self._hits / len(self._flags) if self._flags else 0.0


def sample_symbolic(
    prior: PriorDistribution, snapshot: PolicySnapshot, rng: np.random.Generator, use_kl_form: bool = False
) -> tuple[str, list[str], PriorDistribution]:
    """Candidate sampling without replacement, then a posterior draw over the candidates."""
    support = prior.support()
    m = min(snapshot.k, len(support))
    if m == len(support):
        candidates = support
    else:
        p = prior.vector(support)
        picked = rng.choice(len(support), size=m, replace=False, p=p / p.sum())
        candidates = [support[i] for i in sorted(picked)]
    restricted = prior.restrict(candidates)
    tilt = kl_regularized_policy if use_kl_form else posterior_weights
    post = tilt(restricted, snapshot.q_values, snapshot.tau)
    weights = post.vector(candidates)
    choice = candidates[int(rng.choice(len(candidates), p=weights))]
    return choice, candidates, post


class PosteriorAgent:
    """Selects hybrid actions for one environment from cached priors and learned values.

    ``mode`` picks the prior path: ``cached`` (cache then provider), ``uncached``
    (provider every step) or ``uniform`` (no provider at all). ``fixed_tau`` pins
    the temperature and ``kl_alpha`` switches to the KL-regularised closed form.
    """

    def __init__(
        self,
        env,
        provider,
        q: QTable,
        embed: Callable[[object], Embedding],
        schedule: TemperatureSchedule,
        cache: SemanticCache | None = None,
        mode: str = "cached",
        k: int = 5,
        window: int = 500,
        fixed_tau: float | None = None,
        kl_alpha: float | None = None,
        head: GaussianHead | None = None,
        mc_samples: int = 4,
    ):
        if mode not in ("cached", "uncached", "uniform"):
            raise ValueError(f"unknown prior mode: {mode}")
        if mode == "cached" and cache is None:
            raise ValueError("cached mode needs a cache")
        if env.hybrid and head is None:
            raise ValueError("hybrid environments need a Gaussian head")
        self.env = env
        self.provider = provider
        self.q = q
        self.embed = embed
        self.schedule = schedule
        self.cache = cache
        self.mode = mode
        self.k = k
        self.window = HitRateWindow(window)
        self.fixed_tau = fixed_tau
        self.kl_alpha = kl_alpha
        self.head = head
        self.mc_samples = mc_samples
        self.states_by_id: dict[str, object] = {}
        self.provider_calls = 0

    @property
    def tau(self) -> float:
        if self.kl_alpha is not None:
            return self.kl_alpha
        if self.fixed_tau is not None:
            return self.fixed_tau
        return temperature(self.window.rate, self.schedule)

    def q_values(self, state_id: str, rng: np.random.Generator) -> dict[str, float]:
        if not self.env.hybrid:
            return {a: self.q.get(state_id, a) for a in self.env.actions}
        # marginalise the continuous part with samples from the Gaussian head
        values = {}
        for sym in self.env.actions:
            draws = [self.head.sample(state_id, sym, rng)[0] for _ in range(self.mc_samples)]
            values[sym] = float(np.mean([self.q.get(state_id, f"{sym}@{self.q.u_bin(u)}") for u in draws]))
        return values

    def prior_for(self, state, state_id: str, now: int) -> tuple[PriorDistribution, bool, float | None]:
        if self.mode == "uniform":
            return PriorDistribution.uniform(self.env.actions), False, None
        if self.mode == "uncached":
            self.provider_calls += 1
            return self.provider.query(state), False, None

        key = self.embed(state)
        result = self.cache.lookup(key, now)
        self.window.record(result.hit)
        if result.hit:
            return result.prior, True, result.similarity
        self.provider_calls += 1
        prior = self.provider.query(state)
        self.cache.insert(key, prior, now, source_state_id=state_id)
        return prior, False, result.similarity

    def reprovide(self, state_id: str) -> PriorDistribution:
        """Re-query the provider for a cached entry's source state (used by refresh)."""
        self.provider_calls += 1
        return self.provider.query(self.states_by_id[state_id])

    def select_action(self, state, rng: np.random.Generator, now: int) -> tuple[HybridAction, bool, ActionTrace]:
        state_id = self.env.state_id(state)
        self.states_by_id.setdefault(state_id, state)
        prior, hit, similarity = self.prior_for(state, state_id, now)
        tau = self.tau
        snapshot = PolicySnapshot(q_values=self.q_values(state_id, rng), tau=tau, k=self.k)
        sym, candidates, post = sample_symbolic(prior, snapshot, rng, use_kl_form=self.kl_alpha is not None)

        continuous: tuple[float, ...] = ()
        if self.env.hybrid:
            continuous = self.head.sample(state_id, sym, rng)
        trace = ActionTrace(
            state_id=state_id,
            hit=hit,
            similarity=similarity,
            tau=tau,
            candidates=list(candidates),
            weights=[float(w) for w in post.vector(candidates)],
            action=sym,
            continuous=list(continuous),
        )
        return HybridAction(sym, continuous), hit, trace
