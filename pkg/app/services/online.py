# app/services/online.py

"""
Closed-loop online training of the posterior-sampling agent.

One ``OnlineRun`` is one (variant, seed) pair. Variants differ only in how the
prior is obtained and how the cache is managed:

    cached             semantic cache, meta-optimiser, refresh
    uncached           provider queried every step
    static_cache       cache with fixed (K, delta, r)
    simple_lru         cache of capacity 1000, fixed delta, no refresh
    no_prior           uniform prior, no provider
    fixed_temperature  cached, tau pinned at the schedule base
    kl_regularized     cached, KL-regularised closed form with fixed alpha
"""

import logging
import time
from collections import Counter
from dataclasses import dataclass
from typing import Callable

import numpy as np

from app.environments import EnvironmentFactory
from app.models import GaussianHead, PosteriorAgent, QTable, ReplayBuffer, SemanticCache, Transition
from app.operations.embedding import embed_numeric, embed_text
from app.operations.meta import update_params
from app.operations.rl import batch_metrics, gaussian_head_update, q_update
from app.providers import ProviderFactory
from app.schemas import CacheParams, ExperimentConfig, RunMetrics

logger = logging.getLogger("app.services.online")

VARIANTS = (
    "cached",
    "uncached",
    "static_cache",
    "simple_lru",
    "no_prior",
    "fixed_temperature",
    "kl_regularized",
)


@dataclass(frozen=True)
class VariantSpec:
    mode: str
    meta: bool
    refresh: bool
    fixed_tau: float | None = None
    kl_alpha: float | None = None
    capacity: float | None = None


def variant_spec(variant: str, cfg: ExperimentConfig) -> VariantSpec:
    refresh = cfg.cache.refresh
    meta = cfg.meta.enabled
    specs = {
        "cached": VariantSpec("cached", meta, refresh),
        "uncached": VariantSpec("uncached", False, False),
        "static_cache": VariantSpec("cached", False, refresh),
        "simple_lru": VariantSpec("cached", False, False, capacity=1000.0),
        "no_prior": VariantSpec("uniform", False, False),
        "fixed_temperature": VariantSpec("cached", meta, refresh, fixed_tau=cfg.schedule.base),
        "kl_regularized": VariantSpec("cached", meta, refresh, kl_alpha=cfg.policy.alpha),
    }
    if variant not in specs:
        raise ValueError(f"Unknown variant: {variant}")
    return specs[variant]


def make_embedder(cfg: ExperimentConfig, env) -> Callable:
    emb = cfg.embedding
    if cfg.embedding_mode == "text":
        return lambda state: embed_text(env.describe(state), emb.dim, emb.seed, emb.max_ngram)
    low, high = env.feature_bounds
    return lambda state: embed_numeric(env.features(state), low, high, emb.buckets, emb.dim, emb.seed)


def episodes_to_converge(successes: list[bool], window: int = 20, tolerance: float = 0.05) -> int:
    """
    First episode after which the rolling success rate stays within ``tolerance`` of its final value.

    A run already settled in its first window converges at the end of that
    window, never at episode zero.
    """
    if not successes:
        return 0
    flags = np.asarray(successes, dtype=float)
    kernel = np.ones(min(window, len(flags))) / min(window, len(flags))
    rolling = np.convolve(flags, kernel, mode="valid")
    final = rolling[-1]
    outside = np.flatnonzero(np.abs(rolling - final) > tolerance)
    # rolling[i] covers episodes i .. i + window - 1
    last = outside[-1] if outside.size else -1
    return int(last + len(kernel))


class OnlineRun:
    def __init__(self, cfg: ExperimentConfig, variant: str, seed: int, provider=None, client=None):
        self.cfg = cfg
        self.variant = variant
        self.seed = seed
        self.spec = variant_spec(variant, cfg)
        self.rng = np.random.default_rng(seed)
        self.env = EnvironmentFactory.get(cfg.env)
        self.provider = provider or ProviderFactory.get(cfg.provider, self.env, client=client)

        rl = cfg.rl
        self.q = QTable(self.env.actions, gamma=rl.gamma, lr=rl.lr, u_bins=rl.u_bins if self.env.hybrid else None)
        self.head = (
            GaussianHead(sigma=rl.sigma_start, lr_u=rl.lr_u, lr_v=rl.lr_v) if self.env.hybrid else None
        )
        self.buffer = ReplayBuffer(rl.buffer_capacity)

        self.cache = None
        if self.spec.mode == "cached":
            params = cfg.cache.initial_params()
            if self.spec.capacity is not None:
                params = CacheParams(k=self.spec.capacity, delta=params.delta, r=params.r)
            self.cache = SemanticCache(params, dim=cfg.embedding.dim)

        self.agent = PosteriorAgent(
            self.env,
            self.provider,
            self.q,
            embed=make_embedder(cfg, self.env),
            schedule=cfg.schedule,
            cache=self.cache,
            mode=self.spec.mode,
            k=cfg.policy.k,
            window=cfg.policy.window,
            fixed_tau=self.spec.fixed_tau,
            kl_alpha=self.spec.kl_alpha,
            head=self.head,
            mc_samples=cfg.policy.mc_samples,
        )
        self.visitation: Counter[str] = Counter()
        self.metrics = RunMetrics(variant=variant, seed=seed)
        self.traces: list[dict] = []
        self.now = 0
        self._batch: list[tuple[float, bool, float]] = []

    @property
    def misses(self) -> int:
        if self.cache is not None:
            return self.cache.misses
        return self.agent.provider_calls if self.spec.mode == "uncached" else 0

    @property
    def refreshes(self) -> int:
        return self.cache.refreshes if self.cache is not None else 0

    def _meta_step(self) -> None:
        m = batch_metrics(self._batch)
        self._batch.clear()
        if self.cache is None:
            return
        if self.spec.meta:
            evicted = self.cache.set_params(update_params(self.cache.params, m, self.cfg.meta))
            if evicted:
                logger.info("Capacity shrink evicted %d entries", len(evicted))
        p = self.cache.params
        self.metrics.param_trajectory.append(
            {
                "step": self.now,
                "k": p.k,
                "delta": p.delta,
                "r": p.r,
                "hit_rate": m.hit_rate,
                "mean_td_error": m.mean_td_error,
                "policy_variability": m.policy_variability,
            }
        )

    def _learn(self, t: Transition) -> float:
        td = q_update(self.q, t)
        self.buffer.push(t)
        for sample in self.buffer.sample(self.cfg.rl.replay_updates, self.rng):
            q_update(self.q, sample)
        if self.head is not None:
            gaussian_head_update(self.head, t, self.cfg.rl.gamma)
        return td

    def _step_latency(self, hit: bool) -> float:
        if self.spec.mode == "uniform":
            return 0.0
        if hit:
            return self.cfg.provider.latency.hit_cost_ms
        return self.provider.last_latency_ms

    def run_episode(self, episode: int, total_episodes: int) -> None:
        rl = self.cfg.rl
        if self.head is not None:
            frac = episode / max(1, total_episodes - 1)
            self.head.sigma = rl.sigma_start + (rl.sigma_end - rl.sigma_start) * frac

        state = self.env.reset(self.rng)
        total, steps, latencies = 0.0, 0, []
        while True:
            state_id = self.env.state_id(state)
            action, hit, trace = self.agent.select_action(state, self.rng, self.now)
            result = self.env.step(action if self.env.hybrid else action.symbolic)
            t = Transition(state_id, action, result.reward, self.env.state_id(result.state), result.success)
            q_before = self.q.get(state_id, self.q.key_for(action))
            td = self._learn(t)
            self._batch.append((td, hit, q_before))
            if len(self._batch) >= rl.batch_size:
                self._meta_step()

            self.visitation[state_id] += 1
            if self.cache is not None and self.spec.refresh:
                self.cache.refresh_step(
                    self.visitation, self.agent.reprovide, self.rng, self.now, self.cfg.cache.refresh_strategy
                )
            latency = self._step_latency(hit)
            latencies.append(latency)
            self.metrics.step_latencies_ms.append(latency)
            if self.cfg.run.trace:
                self.traces.append({"seed": self.seed, "step": self.now, **trace.to_dict()})

            self.now += 1
            steps += 1
            total += result.reward
            state = result.state
            if result.done:
                break

        m = self.metrics
        m.returns.append(total)
        m.successes.append(result.success)
        m.steps.append(steps)
        m.cumulative_queries.append(self.provider.stats.query_count)
        m.hit_rates.append(self.cache.hit_rate if self.cache is not None else 0.0)
        m.taus.append(self.agent.tau)
        m.episode_latency_ms.append(float(np.mean(latencies)))

    def run(self, episodes: int | None = None, on_episode_end: Callable[[int, "OnlineRun"], None] | None = None) -> RunMetrics:
        episodes = episodes or self.cfg.run.episodes
        started = time.perf_counter()
        logger.info("Online run variant=%s seed=%d episodes=%d", self.variant, self.seed, episodes)
        for episode in range(episodes):
            self.run_episode(episode, episodes)
            if on_episode_end is not None:
                on_episode_end(episode, self)

        m = self.metrics
        m.hits = self.cache.hits if self.cache is not None else 0
        m.misses = self.misses
        m.refreshes = self.refreshes
        m.provider_queries = self.provider.stats.query_count
        m.wall_clock_s = time.perf_counter() - started
        logger.info(
            "Finished variant=%s seed=%d: success(last 50)=%.3f queries=%d hit_rate=%.3f in %.2fs",
            self.variant, self.seed, m.final_success(), m.provider_queries, m.hit_rate, m.wall_clock_s,
        )
        return m

    def query_accounting_ok(self) -> bool:
        """Provider queries must equal cache misses plus refresh queries."""
        return self.provider.stats.query_count == self.misses + self.refreshes


def run_online(cfg: ExperimentConfig, variant: str, seeds: list[int] | None = None) -> list[RunMetrics]:
    """One run per seed; use ``summarize_runs`` for the mean and sample std."""
    results = []
    for seed in seeds or cfg.run.seeds:
        run = OnlineRun(cfg, variant, seed)
        results.append(run.run())
        if not run.query_accounting_ok():
            logger.error(
                "Query accounting mismatch for %s seed %d: %d queries vs %d misses + %d refreshes",
                variant, seed, run.provider.stats.query_count, run.misses, run.refreshes,
            )
    return results


def run_summary(m: RunMetrics) -> dict:
    steps = m.total_steps
    return {
        "variant": m.variant,
        "seed": m.seed,
        "episodes": len(m.returns),
        "final_success": m.final_success(),
        "mean_return": float(np.mean(m.returns)) if m.returns else 0.0,
        "total_steps": steps,
        "provider_queries": m.provider_queries,
        "queries_per_step": m.provider_queries / steps if steps else 0.0,
        "hits": m.hits,
        "misses": m.misses,
        "refreshes": m.refreshes,
        "hit_rate": m.hit_rate,
        "episodes_to_converge": episodes_to_converge(m.successes),
        "mean_latency_ms": float(np.mean(m.step_latencies_ms)) if m.step_latencies_ms else 0.0,
        "p95_latency_ms": float(np.percentile(m.step_latencies_ms, 95)) if m.step_latencies_ms else 0.0,
        "final_k": m.param_trajectory[-1]["k"] if m.param_trajectory else None,
        "final_delta": m.param_trajectory[-1]["delta"] if m.param_trajectory else None,
        "final_r": m.param_trajectory[-1]["r"] if m.param_trajectory else None,
    }


SUMMARY_NUMERIC = (
    "final_success",
    "mean_return",
    "total_steps",
    "provider_queries",
    "queries_per_step",
    "hit_rate",
    "episodes_to_converge",
    "mean_latency_ms",
    "p95_latency_ms",
)


def summarize_runs(runs: list[RunMetrics]) -> dict:
    """Mean and sample standard deviation over seeds of the per-run summary columns."""
    rows = [run_summary(m) for m in runs]
    out: dict = {"variant": runs[0].variant, "seeds": len(runs)}
    for column in SUMMARY_NUMERIC:
        values = np.array([row[column] for row in rows], dtype=float)
        out[f"{column}_mean"] = float(values.mean())
        out[f"{column}_std"] = float(values.std(ddof=1)) if len(values) > 1 else 0.0
    return out
