# app/providers/__init__.py

from typing import Protocol

import httpx

from app.providers.mock import MockPriorProvider, adapt_prior, expert_demos, greedy_prior_action
from app.providers.remote import RemotePriorProvider, remote_prior
from app.schemas import PriorDistribution, ProviderConfig, ProviderStats


class PriorProvider(Protocol):
    kind: str
    adaptable: bool
    stats: ProviderStats
    last_latency_ms: float

    def query(self, state) -> PriorDistribution: ...


class ProviderFactory:
    """Builds the configured prior provider for an environment."""

    _map = {
        "mock": lambda cfg, env, client: MockPriorProvider(env, sharpness=cfg.sharpness, latency=cfg.latency),
        "remote": lambda cfg, env, client: RemotePriorProvider(
            env,
            url=cfg.remote.url,
            timeout_ms=cfg.remote.timeout_ms,
            fallback=cfg.remote.fallback,
            client=client,
        ),
    }

    @classmethod
    def get(cls, cfg: ProviderConfig, env, client: httpx.Client | None = None) -> PriorProvider:
        if cfg.kind not in cls._map:
            raise ValueError(f"Unknown provider kind: {cfg.kind}")
        return cls._map[cfg.kind](cfg, env, client)


__all__ = [
    "MockPriorProvider",
    "PriorProvider",
    "ProviderFactory",
    "RemotePriorProvider",
    "adapt_prior",
    "expert_demos",
    "greedy_prior_action",
    "remote_prior",
]
