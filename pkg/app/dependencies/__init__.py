# app/dependencies/__init__.py

"""
Dependencies for the reference prior endpoint.

The server scores states with the mock oracle built from the experiment
config named by ``PRIOR_CONFIG`` (built-in defaults when unset).
"""

import logging
import os
from functools import lru_cache

from app.config import load_config
from app.environments import EnvironmentFactory
from app.providers import MockPriorProvider

logger = logging.getLogger("app.dependencies")


@lru_cache(maxsize=1)
def get_prior_oracle() -> MockPriorProvider:
    path = os.getenv("PRIOR_CONFIG") or None
    cfg = load_config(path)
    env = EnvironmentFactory.get(cfg.env)
    logger.info("Prior oracle ready: %s environment, sharpness %.2f", cfg.env.name, cfg.provider.sharpness)
    return MockPriorProvider(env, sharpness=cfg.provider.sharpness, latency=cfg.provider.latency)
