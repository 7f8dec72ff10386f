# app/services/fewshot.py

"""Few-shot adaptation of the mock prior: cross-entropy on the demos and greedy-prior success."""

import logging

import numpy as np

from app.environments import EnvironmentFactory, rollout
from app.providers import MockPriorProvider, adapt_prior, expert_demos, greedy_prior_action
from app.schemas import ExperimentConfig

logger = logging.getLogger("app.services.fewshot")

FEWSHOT_COLUMNS = (
    "seed",
    "shots",
    "ce_before",
    "ce_after",
    "ce_reduction",
    "success_before",
    "success_after",
)


def greedy_prior_success(env, provider, episodes: int, seed: int) -> float:
    """Success rate of always taking the most probable prior action."""
    wins = 0
    for i in range(episodes):
        _, _, success = rollout(env, lambda state, rng: greedy_prior_action(provider, state), np.random.default_rng([seed, i]))
        wins += int(success)
    return wins / episodes


def fewshot_experiment(cfg: ExperimentConfig, seed: int) -> dict:
    fs = cfg.fewshot
    env = EnvironmentFactory.get(cfg.env)
    provider = MockPriorProvider(env, sharpness=cfg.provider.sharpness, latency=cfg.provider.latency)
    demos = expert_demos(EnvironmentFactory.get(cfg.env), fs.shots, seed, fs.lambda_ent)

    success_before = greedy_prior_success(env, provider, fs.eval_episodes, seed)
    adapt_prior(provider, demos, fs.steps, fs.lr)
    success_after = greedy_prior_success(env, provider, fs.eval_episodes, seed)

    ce_before = provider.adaptation_history[0].cross_entropy
    ce_after = provider.adaptation_history[-1].cross_entropy
    row = {
        "seed": seed,
        "shots": len(demos.demos),
        "ce_before": ce_before,
        "ce_after": ce_after,
        "ce_reduction": 1.0 - ce_after / ce_before if ce_before > 0 else 0.0,
        "success_before": success_before,
        "success_after": success_after,
    }
    logger.info(
        "Few-shot seed %d: cross-entropy %.4f -> %.4f, greedy success %.2f -> %.2f",
        seed, ce_before, ce_after, success_before, success_after,
    )
    return row


def run_fewshot(cfg: ExperimentConfig, seeds: list[int] | None = None) -> list[dict]:
    return [fewshot_experiment(cfg, seed) for seed in seeds or cfg.run.seeds]
