# app/services/offline.py

"""
Offline training with tabular CQL and the prior-augmented variant.

A run collects a dataset with the configured behaviour policy, annotates the
dataset states with priors from the chosen source, and then trains a Q-table
by minibatch gradient steps on the conservative loss. The greedy policy is
evaluated every ``eval_every`` epochs on fixed, seeded episode starts.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from app.environments import EnvironmentFactory, OfflineDataset, generate_offline, rollout
from app.environments.offline import random_action
from app.models import QTable, SemanticCache
from app.operations.cql import TransitionBatch, behavior_policy, cql_prior_loss
from app.operations.meta import update_params
from app.operations.rl import batch_metrics, q_update
from app.providers import ProviderFactory
from app.schemas import ExperimentConfig, PriorDistribution
from app.services.online import make_embedder

logger = logging.getLogger("app.services.offline")

PRIOR_SOURCES = ("none", "uncached", "static_cache", "adaptive_cache")

# separates evaluation episode seeds from dataset seeds
EVAL_SEED_OFFSET = 10_000


@dataclass
class Annotation:
    priors: dict[str, PriorDistribution]
    provider_queries: int
    hits: int = 0
    lookups: int = 0


@dataclass
class OfflineResult:
    prior_source: str
    seed: int
    q: np.ndarray
    state_index: dict[str, int]
    curve: list[dict] = field(default_factory=list)
    epochs_to_converge: int = 0
    query_ratio: float | None = None
    final_performance: float = 0.0
    mean_logsumexp: float = 0.0

    def as_row(self) -> dict:
        return {
            "variant": self.prior_source,
            "seed": self.seed,
            "normalized_performance": self.final_performance,
            "epochs_to_converge": self.epochs_to_converge,
            "query_ratio": self.query_ratio,
            "mean_logsumexp": self.mean_logsumexp,
        }


def annotate_priors(
    dataset: OfflineDataset, env, provider, cfg: ExperimentConfig, prior_source: str
) -> Annotation:
    """Attach a prior to every source state of the dataset.

    Cache-backed sources stream the transitions through a semantic cache in
    collection order; the prior kept for a state is the one served at its
    last lookup. Refresh is never drawn here.
    """
    if prior_source not in PRIOR_SOURCES:
        raise ValueError(f"Unknown prior source: {prior_source}")
    if prior_source == "none":
        return Annotation(priors={}, provider_queries=0)
    if prior_source == "uncached":
        priors = {sid: provider.query(env.state_from_id(sid)) for sid in dataset.distinct_states()}
        return Annotation(priors=priors, provider_queries=provider.stats.query_count)

    embed = make_embedder(cfg, env)
    cache = SemanticCache(cfg.cache.initial_params(), dim=cfg.embedding.dim)
    learner = QTable(env.actions, gamma=cfg.rl.gamma, lr=cfg.rl.lr)
    adaptive = prior_source == "adaptive_cache" and cfg.meta.enabled
    priors: dict[str, PriorDistribution] = {}
    recent: list[tuple[float, bool, float]] = []

    for now, t in enumerate(dataset.transitions):
        state = env.state_from_id(t.s)
        key = embed(state)
        result = cache.lookup(key, now)
        if result.hit:
            prior = result.prior
        else:
            prior = provider.query(state)
            cache.insert(key, prior, now, source_state_id=t.s)
        priors[t.s] = prior

        q_before = learner.get(t.s, learner.key_for(t.a))
        recent.append((q_update(learner, t), result.hit, q_before))
        if len(recent) >= cfg.rl.batch_size:
            if adaptive:
                cache.set_params(update_params(cache.params, batch_metrics(recent), cfg.meta))
            recent.clear()

    logger.info(
        "Annotated %d states with %s: %d queries, hit rate %.3f, final K=%.1f delta=%.3f",
        len(priors), prior_source, provider.stats.query_count, cache.hit_rate, cache.params.k, cache.params.delta,
    )
    return Annotation(
        priors=priors,
        provider_queries=provider.stats.query_count,
        hits=cache.hits,
        lookups=cache.hits + cache.misses,
    )


def prior_matrix(priors: dict[str, PriorDistribution], state_index: dict[str, int], actions) -> np.ndarray:
    """Rows of prior probabilities; states without a prior stay NaN and fail the loss row check."""
    table = np.full((len(state_index), len(actions)), np.nan)
    for sid, prior in priors.items():
        table[state_index[sid]] = prior.vector(actions)
    return table


class GreedyEvaluator:
    """Average return of a policy over ``episodes`` fixed episode starts."""

    def __init__(self, env, episodes: int, seed: int):
        self.env = env
        self.episodes = episodes
        self.seed = seed + EVAL_SEED_OFFSET

    def mean_return(self, policy) -> float:
        returns = []
        for i in range(self.episodes):
            rng = np.random.default_rng([self.seed, i])
            _, total, _ = rollout(self.env, policy, rng)
            returns.append(total)
        return float(np.mean(returns))

    def greedy(self, q: np.ndarray, state_index: dict[str, int]):
        actions = self.env.actions

        def policy(state, rng):
            row = state_index.get(self.env.state_id(state))
            if row is None:
                return random_action(self.env, rng)
            return actions[int(np.argmax(q[row]))]

        return policy


def normalized(value: float, low: float, high: float) -> float:
    if high - low <= 1e-12:
        return 1.0 if value >= high else 0.0
    return (value - low) / (high - low)


def epochs_to_converge(curve: list[tuple[int, float]], epochs: int, window: int, tolerance: float) -> int:
    """First evaluation epoch after which performance stays within ``tolerance`` of its final value
    for at least ``window`` epochs; ``epochs`` when that never happens."""
    if not curve:
        return epochs
    final_epoch, final = curve[-1]
    candidate = None
    for epoch, perf in reversed(curve):
        if abs(perf - final) > tolerance:
            break
        candidate = epoch
    if candidate is None or final_epoch - candidate < window:
        return epochs
    return candidate


def train_offline(
    dataset: OfflineDataset,
    cfg: ExperimentConfig,
    prior_source: str,
    seed: int,
    env=None,
    provider=None,
) -> OfflineResult:
    env = env or EnvironmentFactory.get(cfg.env)
    if env.hybrid:
        raise ValueError("offline CQL needs a discrete-action environment")
    provider = provider or ProviderFactory.get(cfg.provider, env)
    off = cfg.offline

    annotation = annotate_priors(dataset, env, provider, cfg, prior_source)
    states = dataset.distinct_states()
    state_index = {sid: i for i, sid in enumerate(states)}
    action_index = {a: i for i, a in enumerate(env.actions)}
    batch = TransitionBatch.from_transitions(dataset.transitions, state_index, action_index)
    behavior = behavior_policy(batch, len(states), len(env.actions))
    beta = off.beta_prior if prior_source != "none" else 0.0
    prior = prior_matrix(annotation.priors, state_index, env.actions) if beta > 0 else None

    evaluator = GreedyEvaluator(env, off.eval_episodes, seed)
    low = evaluator.mean_return(lambda state, rng: random_action(env, rng))
    high = evaluator.mean_return(lambda state, rng: env.expert_action(state))

    rng = np.random.default_rng(seed)
    q = np.zeros((len(states), len(env.actions)))
    result = OfflineResult(prior_source=prior_source, seed=seed, q=q, state_index=state_index)
    evaluations: list[tuple[int, float]] = []

    for epoch in range(1, off.epochs + 1):
        target = q.copy()
        order = rng.permutation(len(batch))
        losses = []
        for start in range(0, len(order), off.batch_size):
            loss, grad = cql_prior_loss(
                q, batch.take(order[start:start + off.batch_size]), behavior, prior,
                off.alpha_cql, beta, cfg.rl.gamma, target=target,
            )
            q -= off.lr * grad
            losses.append(loss)

        if epoch % off.eval_every == 0 or epoch == off.epochs:
            ret = evaluator.mean_return(evaluator.greedy(q, state_index))
            perf = normalized(ret, low, high)
            evaluations.append((epoch, perf))
            result.curve.append(
                {"variant": prior_source, "seed": seed, "epoch": epoch, "loss": float(np.mean(losses)),
                 "mean_return": ret, "normalized_performance": perf}
            )
            logger.debug("epoch %d: loss %.5f, normalized performance %.3f", epoch, np.mean(losses), perf)

    result.final_performance = evaluations[-1][1]
    result.epochs_to_converge = epochs_to_converge(evaluations, off.epochs, off.window, off.tolerance)
    result.mean_logsumexp = float(np.mean(logsumexp(q[batch.s], axis=1)))
    if prior_source != "none":
        result.query_ratio = annotation.provider_queries / len(states)
    logger.info(
        "Offline %s seed %d: performance %.3f, converged at epoch %d, query ratio %s",
        prior_source, seed, result.final_performance, result.epochs_to_converge,
        "n/a" if result.query_ratio is None else f"{result.query_ratio:.3f}",
    )
    return result


def run_offline(cfg: ExperimentConfig, prior_sources=PRIOR_SOURCES, seeds: list[int] | None = None) -> list[OfflineResult]:
    """Every prior source trained on the same per-seed dataset."""
    results = []
    for seed in seeds or cfg.run.seeds:
        env = EnvironmentFactory.get(cfg.env)
        dataset = generate_offline(env, cfg.offline.dataset, cfg.offline.episodes, seed)
        for source in prior_sources:
            results.append(train_offline(dataset, cfg, source, seed, env=env))
    return results


def summarize_offline(results: list[OfflineResult]) -> list[dict]:
    """One row per prior source: means and sample std over seeds."""
    rows = []
    for source in dict.fromkeys(r.prior_source for r in results):
        group = [r for r in results if r.prior_source == source]
        perf = np.array([r.final_performance for r in group])
        conv = np.array([r.epochs_to_converge for r in group], dtype=float)
        ratios = [r.query_ratio for r in group if r.query_ratio is not None]
        rows.append(
            {
                "variant": source,
                "seeds": len(group),
                "normalized_performance": float(perf.mean()),
                "normalized_performance_std": float(perf.std(ddof=1)) if len(group) > 1 else 0.0,
                "epochs_to_converge": float(conv.mean()),
                "epochs_to_converge_std": float(conv.std(ddof=1)) if len(group) > 1 else 0.0,
                "query_ratio": float(np.mean(ratios)) if ratios else None,
            }
        )
    return rows
