# app/operations/fewshot.py

"""Few-shot prior adaptation objective and the Adam optimiser that minimises it."""

import logging

import numpy as np
from scipy.special import log_softmax

logger = logging.getLogger("app.operations")


def adaptation_loss(logits: np.ndarray, targets: np.ndarray, lambda_ent: float) -> tuple[float, np.ndarray]:
    """sum_j ||softmax(z_j) - onehot(a*_j)||^2 - lambda_ent * H(softmax(z_j)), with d/dz."""
    logp = log_softmax(logits, axis=1)
    p = np.exp(logp)
    onehot = np.zeros_like(p)
    onehot[np.arange(len(targets)), targets] = 1.0
    entropy = -np.sum(p * logp, axis=1)
    loss = float(np.sum((p - onehot) ** 2) - lambda_ent * np.sum(entropy))
    dp = 2.0 * (p - onehot) + lambda_ent * (logp + 1.0)
    grad = p * (dp - np.sum(p * dp, axis=1, keepdims=True))
    return loss, grad


def cross_entropy(logits: np.ndarray, targets: np.ndarray) -> float:
    logp = log_softmax(logits, axis=1)
    return float(-np.mean(logp[np.arange(len(targets)), targets]))


class Adam:
    def __init__(self, lr: float = 0.1, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m: np.ndarray | None = None
        self.v: np.ndarray | None = None
        self.t = 0

    def step(self, params: np.ndarray, grad: np.ndarray) -> np.ndarray:
        if self.m is None:
            self.m = np.zeros_like(params)
            self.v = np.zeros_like(params)
        self.t += 1
        self.m = self.beta1 * self.m + (1 - self.beta1) * grad
        self.v = self.beta2 * self.v + (1 - self.beta2) * grad**2
        m_hat = self.m / (1 - self.beta1**self.t)
        v_hat = self.v / (1 - self.beta2**self.t)
        return params - self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
