# tests/unit/test_cql.py

import math

import numpy as np
import pytest

from app.models import HybridAction, Transition
from app.operations.cql import TransitionBatch, behavior_policy, cql_prior_loss


def random_batch(rng, n_states=4, n_actions=3, n=12) -> TransitionBatch:
    return TransitionBatch(
        s=rng.integers(0, n_states, n),
        a=rng.integers(0, n_actions, n),
        reward=rng.normal(size=n),
        s_next=rng.integers(0, n_states, n),
        done=(rng.random(n) < 0.2).astype(float),
    )


def random_rows(rng, n_states=4, n_actions=3) -> np.ndarray:
    return rng.dirichlet(np.ones(n_actions), size=n_states)


# ---------------------------------------------
# Loss values
# ---------------------------------------------


def test_single_state_conservatism_is_log_two():
    batch = TransitionBatch(
        s=np.array([0]), a=np.array([0]), reward=np.array([0.0]), s_next=np.array([0]), done=np.array([1.0])
    )
    loss, _ = cql_prior_loss(np.zeros((1, 2)), batch, np.full((1, 2), 0.5), None, 1.0, 0.0, 0.9)
    assert loss == pytest.approx(math.log(2), abs=1e-12)
    assert loss == pytest.approx(0.69315, abs=1e-5)


def test_zero_beta_equals_plain_cql(rng):
    q = rng.normal(size=(4, 3))
    batch = random_batch(rng)
    behavior = random_rows(rng)
    with_prior = cql_prior_loss(q, batch, behavior, random_rows(rng), 0.5, 0.0, 0.9)
    without = cql_prior_loss(q, batch, behavior, None, 0.5, 0.0, 0.9)
    assert with_prior[0] == without[0]
    np.testing.assert_array_equal(with_prior[1], without[1])


def test_td_only_when_both_weights_vanish(rng):
    q = rng.normal(size=(4, 3))
    batch = random_batch(rng)
    loss, _ = cql_prior_loss(q, batch, random_rows(rng), None, 0.0, 0.0, 0.9)
    y = batch.reward + 0.9 * (1 - batch.done) * q[batch.s_next].max(axis=1)
    assert loss == pytest.approx(np.mean((q[batch.s, batch.a] - y) ** 2), rel=1e-12)


def test_prior_term_lowers_loss_for_favoured_actions():
    batch = TransitionBatch(
        s=np.array([0]), a=np.array([0]), reward=np.array([0.0]), s_next=np.array([0]), done=np.array([1.0])
    )
    q = np.array([[1.0, 0.0]])
    prior = np.array([[1.0, 0.0]])
    base, _ = cql_prior_loss(q, batch, np.full((1, 2), 0.5), prior, 0.0, 0.0, 0.9)
    bonus, _ = cql_prior_loss(q, batch, np.full((1, 2), 0.5), prior, 0.0, 0.5, 0.9)
    assert bonus == pytest.approx(base - 0.5)


# ---------------------------------------------
# Gradient
# ---------------------------------------------


def test_gradient_matches_finite_differences():
    """
    Steps:
    1. Draw 20 random Q-tables, batches, behaviour and prior rows.
    2. Freeze the bootstrap target at the drawn table.
    3. Compare the analytic gradient with central differences entry by entry.
    """
    rng = np.random.default_rng(42)
    h = 1e-6
    for _ in range(20):
        q = rng.normal(size=(4, 3))
        target = q.copy()
        batch = random_batch(rng)
        behavior, prior = random_rows(rng), random_rows(rng)
        args = (batch, behavior, prior, 0.7, 0.3, 0.9)
        _, grad = cql_prior_loss(q, *args, target=target)
        numeric = np.zeros_like(q)
        for idx in np.ndindex(q.shape):
            up, down = q.copy(), q.copy()
            up[idx] += h
            down[idx] -= h
            numeric[idx] = (cql_prior_loss(up, *args, target=target)[0] - cql_prior_loss(down, *args, target=target)[0]) / (2 * h)
        np.testing.assert_allclose(grad, numeric, rtol=1e-5, atol=1e-8)


def test_gradient_step_lowers_loss(rng):
    q = rng.normal(size=(4, 3))
    target = q.copy()
    batch = random_batch(rng)
    args = (batch, random_rows(rng), random_rows(rng), 0.5, 0.2, 0.9)
    before, grad = cql_prior_loss(q, *args, target=target)
    after, _ = cql_prior_loss(q - 0.01 * grad, *args, target=target)
    assert after < before


# ---------------------------------------------
# Inputs
# ---------------------------------------------


def test_missing_prior_row(rng):
    prior = random_rows(rng)
    prior[2] = np.nan
    batch = TransitionBatch(
        s=np.array([2]), a=np.array([0]), reward=np.array([0.0]), s_next=np.array([1]), done=np.array([0.0])
    )
    with pytest.raises(ValueError, match="no prior distribution for state index 2"):
        cql_prior_loss(np.zeros((4, 3)), batch, random_rows(rng), prior, 1.0, 0.5, 0.9)


def test_prior_required_when_beta_positive(rng):
    with pytest.raises(ValueError, match="needs prior"):
        cql_prior_loss(np.zeros((4, 3)), random_batch(rng), random_rows(rng), None, 1.0, 0.5, 0.9)


def test_empty_batch(rng):
    empty = TransitionBatch(*(np.array([], dtype=int) for _ in range(5)))
    with pytest.raises(ValueError, match="empty batch"):
        cql_prior_loss(np.zeros((4, 3)), empty, random_rows(rng), None, 1.0, 0.0, 0.9)


def test_behavior_policy_is_smoothed_frequency():
    batch = TransitionBatch(
        s=np.array([0, 0, 0]), a=np.array([1, 1, 0]), reward=np.zeros(3), s_next=np.zeros(3, dtype=int), done=np.zeros(3)
    )
    beh = behavior_policy(batch, n_states=2, n_actions=2)
    np.testing.assert_allclose(beh[0], [2 / 5, 3 / 5])
    np.testing.assert_allclose(beh[1], [0.5, 0.5])


def test_batch_from_transitions():
    ts = [Transition("x", HybridAction("b"), 1.0, "y", True), Transition("y", HybridAction("a"), 0.0, "x", False)]
    batch = TransitionBatch.from_transitions(ts, {"x": 0, "y": 1}, {"a": 0, "b": 1})
    assert batch.s.tolist() == [0, 1]
    assert batch.a.tolist() == [1, 0]
    assert batch.done.tolist() == [1.0, 0.0]
    with pytest.raises(ValueError, match="not indexed"):
        TransitionBatch.from_transitions(ts, {"x": 0}, {"a": 0, "b": 1})
