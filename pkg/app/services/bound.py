# app/services/bound.py

"""
Empirical checks of the cached-prior error bound.

``bound_experiment`` perturbs the priors a trained agent would be served and
compares the measured KL between cached and exact posteriors with the bound.
``refresh_decay_experiment`` changes the deployed prior mid-run and tracks how
fast refreshing washes the stale entries out of the cache.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from scipy.special import softmax

from app.environments import EnvironmentFactory
from app.operations.kl import (
    FLOOR,
    DecayCheck,
    decay_bound,
    decay_check,
    measured_kl,
    prior_error,
    q_error,
    kl_bound,
)
from app.operations.posterior import posterior_weights
from app.operations.rl import value_iteration
from app.providers import adapt_prior, expert_demos
from app.schemas import BoundInputs, ExperimentConfig, PriorDistribution
from app.services.online import OnlineRun

logger = logging.getLogger("app.services.bound")

BOUND_COLUMNS = ("noise_level", "state_id", "kappa", "epsilon", "rho", "tau", "measured_kl", "bound", "violated")
DECAY_COLUMNS = (
    "refresh",
    "strategy",
    "window",
    "episode",
    "expected_kappa",
    "mean_epsilon",
    "mean_epsilon_over_tau",
    "tau",
    "refreshes",
)


def _require_oracle(run: OnlineRun) -> None:
    if run.env.hybrid or not hasattr(run.env, "all_states"):
        raise ValueError(f"{run.env.name} has no exact value-iteration oracle")
    if not hasattr(run.provider, "peek_prior"):
        raise ValueError(f"{run.provider.kind} provider cannot report fresh priors without a query")


def perturb(prior: PriorDistribution, sigma: float, direction: np.ndarray) -> PriorDistribution:
    """``sigma`` times a standard-normal ``direction`` added to the floored log-probabilities, renormalised."""
    if sigma == 0:
        return prior
    direction = np.asarray(direction, dtype=float)
    if direction.shape != (len(prior.actions),):
        raise ValueError(f"noise direction has shape {direction.shape}, expected ({len(prior.actions)},)")
    logp = np.log(np.maximum(prior.vector(), FLOOR)) + sigma * direction
    return PriorDistribution.from_weights(prior.actions, softmax(logp))


def served_prior(run: OnlineRun, state) -> PriorDistribution:
    """The prior the cache would serve at ``state`` right now, or the fresh one on a miss."""
    entry, _ = run.cache.peek(run.agent.embed(state))
    return entry.prior if entry is not None else run.provider.peek_prior(state)


def _noise_plan(samples: int, mu: np.ndarray, n_actions: int, rng: np.random.Generator):
    """
    Visitation-weighted state picks with their noise directions.

    Picks come in antithetic pairs: the same state twice, with directions z
    and -z.
    """
    half = (samples + 1) // 2
    picks = rng.choice(len(mu), size=half, replace=True, p=mu / mu.sum())
    z = rng.standard_normal((half, n_actions))
    picks = np.repeat(picks, 2)[:samples]
    directions = np.stack([z, -z], axis=1).reshape(-1, n_actions)[:samples]
    return picks, directions


@dataclass
class BoundReport:
    rows: list[dict] = field(default_factory=list)

    @property
    def violations(self) -> int:
        return sum(row["violated"] for row in self.rows)

    def level_means(self) -> list[dict]:
        out = []
        for level in dict.fromkeys(row["noise_level"] for row in self.rows):
            group = [row for row in self.rows if row["noise_level"] == level]
            out.append(
                {
                    "noise_level": level,
                    "samples": len(group),
                    "violations": sum(row["violated"] for row in group),
                    **{
                        f"mean_{name}": float(np.mean([row[name] for row in group]))
                        for name in ("kappa", "epsilon", "measured_kl", "bound")
                    },
                }
            )
        return out


def bound_experiment(cfg: ExperimentConfig, seed: int, run: OnlineRun | None = None) -> BoundReport:
    if run is None:
        run = OnlineRun(cfg, "cached", seed)
        run.run()
    env = run.env
    _require_oracle(run)
    if run.cache is None:
        raise ValueError("bound experiment needs a cached run")

    q_star = value_iteration(env, cfg.rl.gamma)
    visited = sorted(run.visitation)
    mu = np.array([run.visitation[s] for s in visited], dtype=float)
    rho = mu / mu.mean()
    tau = run.agent.tau
    picks, directions = _noise_plan(cfg.bound.samples, mu, len(env.actions), np.random.default_rng([seed, 1]))
    report = BoundReport()

    # every noise level reuses the same states and directions, so only sigma varies
    for sigma in cfg.bound.noise_levels:
        for i, direction in zip(picks, directions):
            sid = visited[i]
            state = env.state_from_id(sid)
            fresh = run.provider.peek_prior(state)
            cached = perturb(served_prior(run, state), sigma, direction)
            learned = {a: run.q.get(sid, a) for a in env.actions}
            exact = {a: q_star[(sid, a)] for a in env.actions}

            inputs = BoundInputs(
                kappa=prior_error(cached, fresh), epsilon=q_error(learned, exact), tau=tau, rho=float(rho[i])
            )
            kl = measured_kl(posterior_weights(cached, learned, tau), posterior_weights(fresh, exact, tau))
            bound = kl_bound(inputs)
            report.rows.append(
                {
                    "noise_level": float(sigma),
                    "state_id": sid,
                    "kappa": inputs.kappa,
                    "epsilon": inputs.epsilon,
                    "rho": inputs.rho,
                    "tau": tau,
                    "measured_kl": kl,
                    "bound": bound,
                    "violated": kl > bound,
                }
            )

    if report.violations:
        logger.warning("Bound violated at %d of %d sampled states", report.violations, len(report.rows))
    else:
        logger.info("Bound held at all %d sampled states", len(report.rows))
    return report


@dataclass
class DecayReport:
    refresh: bool
    strategy: str
    rows: list[dict] = field(default_factory=list)
    check: DecayCheck | None = None
    asymptote: float | None = None

    @property
    def history(self) -> list[float]:
        return [row["expected_kappa"] for row in self.rows]


def refresh_decay_experiment(
    cfg: ExperimentConfig, seed: int, refresh: bool = True, strategy: str = "visitation"
) -> DecayReport:
    """Cached run whose provider is few-shot adapted at ``bound.drift_episode``.

    From the drift on, every ``bound.window_episodes`` episodes the
    visitation-weighted mean log-prior error over the states visited in that
    window is recorded; the first value is taken right after the drift.
    """
    cache_cfg = cfg.cache.model_copy(update={"refresh": refresh, "refresh_strategy": strategy})
    cfg = cfg.model_copy(update={"cache": cache_cfg})
    bc = cfg.bound
    run = OnlineRun(cfg, "cached", seed)
    _require_oracle(run)
    q_star = value_iteration(run.env, cfg.rl.gamma)
    report = DecayReport(refresh=refresh, strategy=strategy)
    window_visits: Counter[str] = Counter()
    seen = Counter(run.visitation)

    def measure(episode: int) -> None:
        env = run.env
        states = sorted(window_visits)
        weights = np.array([window_visits[s] for s in states], dtype=float)
        kappas, epsilons = [], []
        for sid in states:
            state = env.state_from_id(sid)
            kappas.append(prior_error(served_prior(run, state), run.provider.peek_prior(state)))
            epsilons.append(
                q_error({a: run.q.get(sid, a) for a in env.actions}, {a: q_star[(sid, a)] for a in env.actions})
            )
        tau = run.agent.tau
        mean_eps = float(np.average(epsilons, weights=weights))
        report.rows.append(
            {
                "refresh": refresh,
                "strategy": strategy,
                "window": len(report.rows),
                "episode": episode,
                "expected_kappa": float(np.average(kappas, weights=weights)),
                "mean_epsilon": mean_eps,
                "mean_epsilon_over_tau": mean_eps / tau,
                "tau": tau,
                "refreshes": run.refreshes,
            }
        )
        window_visits.clear()

    def on_episode_end(episode: int, current: OnlineRun) -> None:
        nonlocal seen
        window_visits.update(current.visitation - seen)
        seen = Counter(current.visitation)
        done = episode + 1
        if done == bc.drift_episode:
            demos = expert_demos(EnvironmentFactory.get(cfg.env), cfg.fewshot.shots, seed, cfg.fewshot.lambda_ent)
            adapt_prior(current.provider, demos, cfg.fewshot.steps, cfg.fewshot.lr)
            logger.info("Provider adapted at episode %d; cached priors are now stale", done)
            measure(done)
        elif done > bc.drift_episode and (done - bc.drift_episode) % bc.window_episodes == 0:
            measure(done)

    run.run(episodes=bc.drift_episode + bc.windows * bc.window_episodes, on_episode_end=on_episode_end)

    report.check = decay_check(report.history)
    if report.check.passed:
        last = report.rows[-1]
        report.asymptote = decay_bound(
            report.history[0], report.check.beta_hat, last["mean_epsilon"], cfg.schedule.floor, 1.0, len(report.rows) - 1
        )
    logger.info(
        "Decay with refresh=%s (%s): E[kappa] %s, beta_hat=%.3f",
        refresh, strategy, ", ".join(f"{k:.4f}" for k in report.history), report.check.beta_hat,
    )
    return report
