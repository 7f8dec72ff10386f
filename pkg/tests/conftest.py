# tests/conftest.py

import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
import requests

from app.environments import PointReach, TextGrid
from app.providers import MockPriorProvider
from app.schemas import ExperimentConfig

SERVER_URL = "http://127.0.0.1:8000"
CONFIG_DIR = Path(__file__).resolve().parents[1] / "configs"

# ---------------------------------------------
# Shared Fixtures
# ---------------------------------------------


@pytest.fixture
def rng():
    """A fresh seeded generator per test."""
    return np.random.default_rng(1234)


@pytest.fixture
def grid():
    return TextGrid()


@pytest.fixture
def point():
    return PointReach()


@pytest.fixture
def mock_provider(grid):
    return MockPriorProvider(grid)


def small_config(**sections) -> ExperimentConfig:
    """TextGrid profile with short runs, for tests that train an agent.

    Keyword arguments are merged into the matching config sections.
    """
    data = {
        "env": {"name": "textgrid"},
        "embedding": {"dim": 128},
        "cache": {"delta0": 0.97},
        "run": {"episodes": 30, "seeds": [0, 1]},
        "offline": {"episodes": 30, "epochs": 40, "eval_every": 10, "eval_episodes": 5, "window": 10},
        "bound": {"samples": 50, "windows": 3, "window_episodes": 5, "drift_episode": 10},
        "fewshot": {"steps": 100, "eval_episodes": 5},
    }
    for name, values in sections.items():
        data.setdefault(name, {}).update(values)
    return ExperimentConfig.model_validate(data)


@pytest.fixture
def small_cfg():
    return small_config()


# ---------------------------------------------
# Live prior server
# ---------------------------------------------


@pytest.fixture(scope="session")
def fastapi_server():
    """
    Start the reference prior server with ``main.py`` and stop it after the session.
    """
    # same interpreter as the test run, so the server sees the same packages
    process = subprocess.Popen([sys.executable, "main.py"])

    timeout = 30  # seconds
    start = time.time()
    server_up = False
    while time.time() - start < timeout:
        try:
            if requests.get(f"{SERVER_URL}/health").status_code == 200:
                server_up = True
                break
        except requests.exceptions.ConnectionError:
            pass
        time.sleep(0.5)

    if not server_up:
        process.terminate()
        raise RuntimeError("Prior server failed to start within timeout period.")

    yield SERVER_URL

    process.terminate()
    process.wait()
