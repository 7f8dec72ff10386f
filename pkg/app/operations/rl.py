# app/operations/rl.py

import logging
from typing import Sequence

import numpy as np

from app.models.rl import GaussianHead, QTable, Transition
from app.schemas import BatchMetrics

logger = logging.getLogger("app.operations")


def q_update(q: QTable, t: Transition) -> float:
    """One Q-learning step on ``t``; returns |td| for batch metrics."""
    key = q.key_for(t.a)
    target = t.reward + (0.0 if t.done else q.gamma * q.max_value(t.s_next))
    td = target - q.get(t.s, key)
    q.set(t.s, key, q.get(t.s, key) + q.lr * td)
    return abs(td)


def gaussian_head_update(head: GaussianHead, t: Transition, gamma: float) -> GaussianHead:
    """Advantage-weighted move of the Gaussian mean towards the executed u."""
    if not t.a.continuous:
        raise ValueError("transition has no continuous action part")
    u = np.asarray(t.a.continuous, dtype=float)
    bootstrap = 0.0 if t.done else gamma * head.value(t.s_next)
    advantage = t.reward + bootstrap - head.value(t.s)
    mean = head.mean(t.s, t.a.symbolic)
    head.means[(t.s, t.a.symbolic)] = mean + head.lr_u * advantage * (u - mean)
    head.value_baseline[t.s] = head.value(t.s) + head.lr_v * advantage
    return head


def batch_metrics(recent: Sequence[tuple[float, bool, float]]) -> BatchMetrics:
    """Mean |td|, hit fraction and population std of Q(s_i, a_i) over a batch."""
    if not recent:
        raise ValueError("batch_metrics needs at least one record")
    td = np.array([abs(r[0]) for r in recent], dtype=float)
    hits = np.array([bool(r[1]) for r in recent], dtype=float)
    qv = np.sort(np.array([r[2] for r in recent], dtype=float))
    return BatchMetrics(
        mean_td_error=float(np.sort(td).mean()),
        hit_rate=float(hits.mean()),
        policy_variability=float(qv.std()),
    )


def value_iteration(env, gamma: float, tol: float = 1e-12, max_iter: int = 100_000) -> dict[tuple[str, str], float]:
    """Exact Q* by synchronous sweeps over ``env.all_states()`` with ``env.transition``."""
    states = env.all_states()
    model = {
        (env.state_id(s), a): env.transition(s, a) for s in states for a in env.actions
    }
    q = {key: 0.0 for key in model}

    def v(state_id: str) -> float:
        return max(q[(state_id, a)] for a in env.actions)

    for sweep in range(max_iter):
        delta = 0.0
        new_q = {}
        for key, (nxt, reward, done) in model.items():
            value = reward + (0.0 if done else gamma * v(env.state_id(nxt)))
            delta = max(delta, abs(value - q[key]))
            new_q[key] = value
        q = new_q
        if delta < tol:
            logger.debug("value iteration converged after %d sweeps", sweep + 1)
            break
    return q
