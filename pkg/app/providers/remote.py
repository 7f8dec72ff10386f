# app/providers/remote.py

"""HTTP client for a remote prior service speaking the ``POST /prior`` JSON protocol."""

import logging
import math
import time
from typing import Sequence

import httpx

from app.exceptions import ProviderError
from app.schemas import PriorDistribution, ProviderStats

logger = logging.getLogger("app.providers")


def remote_prior(client: httpx.Client, state_description: str, actions: Sequence[str]) -> PriorDistribution:
    """POST the description, renormalise the returned probabilities over ``actions``."""
    try:
        response = client.post("/prior", json={"state": state_description, "actions": list(actions)})
        response.raise_for_status()
        payload = response.json()
    except httpx.HTTPStatusError as exc:
        raise ProviderError(f"prior endpoint answered {exc.response.status_code}: {exc.response.text[:200]}") from exc
    except httpx.HTTPError as exc:
        raise ProviderError(f"prior endpoint unreachable: {exc}") from exc
    except ValueError as exc:
        raise ProviderError(f"prior endpoint returned malformed JSON: {exc}") from exc

    probs = payload.get("probs") if isinstance(payload, dict) else None
    if not isinstance(probs, dict):
        raise ProviderError(f"prior response has no 'probs' object: {str(payload)[:200]}")
    weights = []
    for action in actions:
        value = probs.get(action, 0.0)
        try:
            value = float(value)
        except (TypeError, ValueError) as exc:
            raise ProviderError(f"probability for {action!r} is not a number: {value!r}") from exc
        if not math.isfinite(value) or value < 0:
            raise ProviderError(f"probability for {action!r} must be finite and >= 0, got {value}")
        weights.append(value)
    if sum(weights) <= 0:
        raise ProviderError("prior response has all-zero probabilities")
    return PriorDistribution.from_weights(list(actions), weights)


class RemotePriorProvider:
    kind = "remote"
    adaptable = False

    def __init__(
        self,
        env,
        url: str = "http://127.0.0.1:8000",
        timeout_ms: float = 5000.0,
        fallback: str = "abort",
        client: httpx.Client | None = None,
    ):
        if fallback not in ("abort", "uniform"):
            raise ValueError(f"unknown fallback: {fallback}")
        self.env = env
        self.fallback = fallback
        self.client = client or httpx.Client(base_url=url, timeout=timeout_ms / 1000.0)
        self.stats = ProviderStats()
        self.last_latency_ms = 0.0

    def prior_for(self, description: str, actions: Sequence[str]) -> PriorDistribution:
        start = time.perf_counter()
        try:
            return remote_prior(self.client, description, actions)
        except ProviderError as exc:
            if self.fallback == "uniform":
                logger.warning("Remote prior failed, using uniform prior: %s", exc)
                return PriorDistribution.uniform(list(actions))
            logger.error("Remote prior failed: %s", exc)
            raise
        finally:
            self.last_latency_ms = (time.perf_counter() - start) * 1000.0
            self.stats.record(self.last_latency_ms)

    def query(self, state) -> PriorDistribution:
        return self.prior_for(self.env.describe(state), self.env.actions)

    def close(self) -> None:
        self.client.close()
