# app/operations/cql.py

"""
Tabular conservative Q-learning loss with a prior bonus.

    L = mean (Q(s,a) - y)^2
        + alpha * mean [logsumexp_a Q(s,.) - E_behavior Q(s,.)]
        - beta  * mean E_prior Q(s,.)

``y`` bootstraps from a frozen target table, so the gradient below is the
exact gradient of ``L`` with respect to the live table.
"""

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy.special import logsumexp, softmax

from app.models.rl import Transition

logger = logging.getLogger("app.operations")


@dataclass(frozen=True)
class TransitionBatch:
    s: np.ndarray
    a: np.ndarray
    reward: np.ndarray
    s_next: np.ndarray
    done: np.ndarray

    def __len__(self) -> int:
        return int(self.s.shape[0])

    @classmethod
    def from_transitions(
        cls,
        transitions: Sequence[Transition],
        state_index: Mapping[str, int],
        action_index: Mapping[str, int],
    ) -> "TransitionBatch":
        try:
            s = [state_index[t.s] for t in transitions]
            s_next = [state_index[t.s_next] for t in transitions]
            a = [action_index[t.a.symbolic] for t in transitions]
        except KeyError as exc:
            raise ValueError(f"state or action {exc.args[0]!r} is not indexed") from exc
        return cls(
            s=np.array(s, dtype=int),
            a=np.array(a, dtype=int),
            reward=np.array([t.reward for t in transitions], dtype=float),
            s_next=np.array(s_next, dtype=int),
            done=np.array([t.done for t in transitions], dtype=float),
        )

    def take(self, idx: np.ndarray) -> "TransitionBatch":
        return TransitionBatch(self.s[idx], self.a[idx], self.reward[idx], self.s_next[idx], self.done[idx])


def behavior_policy(batch: TransitionBatch, n_states: int, n_actions: int, smoothing: float = 1.0) -> np.ndarray:
    """Empirical state-conditional action frequencies with additive smoothing."""
    counts = np.full((n_states, n_actions), smoothing, dtype=float)
    np.add.at(counts, (batch.s, batch.a), 1.0)
    return counts / counts.sum(axis=1, keepdims=True)


def _check_rows(table: np.ndarray, rows: np.ndarray, label: str) -> None:
    sums = table[rows].sum(axis=1)
    bad = ~np.isfinite(sums) | (np.abs(sums - 1.0) > 1e-6)
    if bad.any():
        raise ValueError(f"no {label} distribution for state index {int(rows[np.argmax(bad)])}")


def cql_prior_loss(
    q: np.ndarray,
    batch: TransitionBatch,
    behavior: np.ndarray,
    prior: np.ndarray | None,
    alpha_cql: float,
    beta_prior: float,
    gamma: float,
    target: np.ndarray | None = None,
) -> tuple[float, np.ndarray]:
    """Loss and its gradient with respect to every entry of ``q``."""
    n = len(batch)
    if n == 0:
        raise ValueError("empty batch")
    target = q if target is None else target
    _check_rows(behavior, batch.s, "behavior")
    use_prior = beta_prior > 0
    if use_prior:
        if prior is None:
            raise ValueError("beta_prior > 0 needs prior distributions")
        _check_rows(prior, batch.s, "prior")

    rows = q[batch.s]
    y = batch.reward + gamma * (1.0 - batch.done) * target[batch.s_next].max(axis=1)
    td = rows[np.arange(n), batch.a] - y
    loss = float(np.mean(td**2))

    grad = np.zeros_like(q)
    np.add.at(grad, (batch.s, batch.a), 2.0 * td / n)

    if alpha_cql > 0:
        beh = behavior[batch.s]
        cons = logsumexp(rows, axis=1) - np.sum(beh * rows, axis=1)
        loss += alpha_cql * float(np.mean(cons))
        np.add.at(grad, batch.s, alpha_cql * (softmax(rows, axis=1) - beh) / n)

    if use_prior:
        pri = prior[batch.s]
        loss -= beta_prior * float(np.mean(np.sum(pri * rows, axis=1)))
        np.add.at(grad, batch.s, -beta_prior * pri / n)

    return loss, grad
