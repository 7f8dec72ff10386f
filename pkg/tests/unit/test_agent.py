# tests/unit/test_agent.py

import math

import numpy as np
import pytest

from app.models import GaussianHead, HitRateWindow, PolicySnapshot, PosteriorAgent, QTable, SemanticCache, sample_symbolic
from app.operations.embedding import embed_numeric, embed_text
from app.operations.posterior import temperature
from app.schemas import CacheParams, PriorDistribution, TemperatureSchedule


def grid_agent(grid, provider, mode="cached", **kwargs) -> PosteriorAgent:
    cache = SemanticCache(CacheParams(k=100, delta=0.97, r=0.01), dim=128) if mode == "cached" else None
    return PosteriorAgent(
        grid,
        provider,
        QTable(grid.actions),
        lambda s: embed_text(grid.describe(s), dim=128),
        TemperatureSchedule(),
        cache=cache,
        mode=mode,
        **kwargs,
    )


# ---------------------------------------------
# Hit-rate window and snapshot
# ---------------------------------------------


def test_empty_window_reads_zero():
    assert HitRateWindow(5).rate == 0.0


def test_window_drops_oldest():
    window = HitRateWindow(3)
    for hit in (True, True, False, False, False):
        window.record(hit)
    assert window.rate == 0.0
    window.record(True)
    assert window.rate == pytest.approx(1 / 3)


@pytest.mark.parametrize("tau, k", [(0.0, 5), (0.5, 0)], ids=["zero_tau", "zero_k"])
def test_snapshot_rejects_bad_values(tau, k):
    with pytest.raises(ValueError):
        PolicySnapshot(q_values={}, tau=tau, k=k)


# ---------------------------------------------
# Candidate sampling
# ---------------------------------------------


def test_full_support_when_k_exceeds_it(rng):
    prior = PriorDistribution.from_weights(["a", "b", "c"], [0.2, 0.3, 0.5])
    snapshot = PolicySnapshot(q_values={"a": 0.0, "b": 1.0, "c": -1.0}, tau=0.5, k=10)
    _, candidates, _ = sample_symbolic(prior, snapshot, rng)
    assert candidates == ["a", "b", "c"]


def test_candidates_are_distinct_and_in_support(rng):
    weights = [0.1, 0.0, 0.2, 0.3, 0.4, 0.0]
    actions = ["a", "b", "c", "d", "e", "f"]
    prior = PriorDistribution.from_weights(actions, weights)
    snapshot = PolicySnapshot(q_values=dict.fromkeys(actions, 0.0), tau=1.0, k=2)
    for _ in range(200):
        choice, candidates, post = sample_symbolic(prior, snapshot, rng)
        assert len(set(candidates)) == 2
        assert set(candidates) <= {"a", "c", "d", "e"}
        assert choice in candidates
        assert math.fsum(post.probs.values()) == pytest.approx(1.0, abs=1e-9)


def test_one_hot_prior_always_picks_its_action(rng):
    prior = PriorDistribution(probs={"a": 0.0, "b": 1.0})
    snapshot = PolicySnapshot(q_values={"a": 10.0, "b": -10.0}, tau=0.1, k=5)
    assert {sample_symbolic(prior, snapshot, rng)[0] for _ in range(100)} == {"b"}


@pytest.mark.slow
def test_sampling_frequency_matches_posterior():
    """
    Steps:
    1. Uniform prior over two actions, q = (1, 0), tau = 1.
    2. Draw 10^5 actions.
    3. The first action's frequency lies within binomial 3-sigma of e / (e + 1).
    """
    rng = np.random.default_rng(7)
    prior = PriorDistribution.uniform(["a", "b"])
    snapshot = PolicySnapshot(q_values={"a": 1.0, "b": 0.0}, tau=1.0, k=5)
    n = 100_000
    count = sum(sample_symbolic(prior, snapshot, rng)[0] == "a" for _ in range(n))
    assert abs(count / n - math.e / (math.e + 1)) < 0.005


# ---------------------------------------------
# Agent prior paths
# ---------------------------------------------


def test_cached_agent_hits_on_revisit(grid, mock_provider, rng):
    agent = grid_agent(grid, mock_provider)
    state = grid.reset(rng)

    _, first_hit, first = agent.select_action(state, rng, now=0)
    _, second_hit, second = agent.select_action(state, rng, now=1)

    assert (first_hit, second_hit) == (False, True)
    assert agent.provider_calls == 1
    assert mock_provider.stats.query_count == 1
    assert second.similarity == pytest.approx(1.0)
    assert first.tau == pytest.approx(0.8)
    assert agent.tau == pytest.approx(temperature(0.5, TemperatureSchedule()))


def test_uncached_agent_queries_every_step(grid, mock_provider, rng):
    agent = grid_agent(grid, mock_provider, mode="uncached")
    state = grid.reset(rng)
    for now in range(4):
        _, hit, _ = agent.select_action(state, rng, now)
        assert not hit
    assert agent.provider_calls == mock_provider.stats.query_count == 4


def test_uniform_agent_never_calls_provider(grid, rng):
    agent = grid_agent(grid, provider=None, mode="uniform")
    state = grid.reset(rng)
    action, hit, trace = agent.select_action(state, rng, now=0)
    assert action.symbolic in grid.actions
    assert not hit
    assert agent.provider_calls == 0
    assert len(trace.candidates) == 5


def test_fixed_and_kl_temperatures(grid, mock_provider):
    assert grid_agent(grid, mock_provider, fixed_tau=0.3).tau == 0.3
    assert grid_agent(grid, mock_provider, kl_alpha=2.0).tau == 2.0


def test_trace_records_the_decision(grid, mock_provider, rng):
    agent = grid_agent(grid, mock_provider, k=6)
    state = grid.reset(rng)
    action, _, trace = agent.select_action(state, rng, now=0)
    row = trace.to_dict()
    assert row["state_id"] == grid.state_id(state)
    assert row["action"] == action.symbolic
    assert row["candidates"] == list(grid.actions)
    assert math.fsum(row["weights"]) == pytest.approx(1.0, abs=1e-9)
    assert row["continuous"] == []


def test_reprovide_queries_source_state(grid, mock_provider, rng):
    agent = grid_agent(grid, mock_provider)
    state = grid.reset(rng)
    agent.select_action(state, rng, now=0)
    prior = agent.reprovide(grid.state_id(state))
    assert prior == mock_provider.peek_prior(state)
    assert agent.provider_calls == 2


def test_hybrid_agent_samples_bounded_continuous_part(point, rng):
    from app.providers import MockPriorProvider

    low, high = point.feature_bounds
    agent = PosteriorAgent(
        point,
        MockPriorProvider(point),
        QTable(point.actions, u_bins=5),
        lambda s: embed_numeric(point.features(s), low, high, dim=64),
        TemperatureSchedule(),
        cache=SemanticCache(CacheParams(k=100, delta=0.97, r=0.01), dim=64),
        head=GaussianHead(),
    )
    state = point.reset(rng)
    action, _, trace = agent.select_action(state, rng, now=0)
    assert action.symbolic in point.actions
    assert len(action.continuous) == 1
    assert 0.0 <= action.continuous[0] <= 1.0
    assert trace.continuous == list(action.continuous)


# ---------------------------------------------
# Construction errors
# ---------------------------------------------


def test_unknown_mode(grid, mock_provider):
    with pytest.raises(ValueError, match="unknown prior mode"):
        grid_agent(grid, mock_provider, mode="sometimes")


def test_cached_mode_needs_cache(grid, mock_provider):
    with pytest.raises(ValueError, match="needs a cache"):
        PosteriorAgent(grid, mock_provider, QTable(grid.actions), lambda s: None, TemperatureSchedule())


def test_hybrid_needs_head(point):
    with pytest.raises(ValueError, match="Gaussian head"):
        PosteriorAgent(point, None, QTable(point.actions), lambda s: None, TemperatureSchedule(), mode="uniform")
