# tests/integration/test_prior_api.py

import math

import pytest
from fastapi.testclient import TestClient

from app.environments import GridState, TextGrid
from app.exceptions import ProviderError
from app.providers import MockPriorProvider, RemotePriorProvider, remote_prior
from app.services.online import OnlineRun
from main import app
from tests.conftest import small_config

# ---------------------------------------------
# Pytest Fixture: client
# ---------------------------------------------


@pytest.fixture
def client():
    """TestClient for the prior server; it is also an httpx.Client, so providers can use it directly."""
    with TestClient(app) as client:
        yield client


def describe(x: int, y: int, has_key: bool = False) -> str:
    return TextGrid().describe(GridState(x, y, has_key))


# ---------------------------------------------
# POST /prior
# ---------------------------------------------


def test_health(client):
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "ok"}


def test_prior_scores_all_actions(client):
    """
    Steps:
    1. POST a grid description with the full action vocabulary.
    2. Expect 200 and a normalised distribution.
    3. The distribution matches a fresh mock oracle at the same state.
    """
    grid = TextGrid()
    response = client.post("/prior", json={"state": describe(1, 1), "actions": list(grid.actions)})
    assert response.status_code == 200, response.text
    probs = response.json()["probs"]
    assert math.fsum(probs.values()) == pytest.approx(1.0, abs=1e-9)
    expected = MockPriorProvider(grid).peek_prior(GridState(1, 1))
    for action, p in expected.probs.items():
        assert probs[action] == pytest.approx(p, rel=1e-12)


def test_prior_subset_of_actions(client):
    response = client.post("/prior", json={"state": describe(0, 0), "actions": ["north", "east"]})
    assert response.status_code == 200
    assert set(response.json()["probs"]) == {"north", "east"}


@pytest.mark.parametrize(
    "payload, fragment",
    [
        ({"state": "somewhere nice", "actions": ["north"]}, "unknown state"),
        ({"state": describe(0, 0), "actions": ["north", "teleport"]}, "unknown actions: teleport"),
    ],
    ids=["bad_description", "unknown_action"],
)
def test_prior_rejects_with_400(client, payload, fragment):
    response = client.post("/prior", json=payload)
    assert response.status_code == 400
    assert fragment in response.json()["error"]


@pytest.mark.parametrize(
    "payload, field",
    [
        ({"state": describe(0, 0)}, "actions"),
        ({"state": describe(0, 0), "actions": []}, "actions"),
        ({"state": "", "actions": ["north"]}, "state"),
    ],
    ids=["missing_actions", "empty_actions", "empty_state"],
)
def test_prior_validation_errors(client, payload, field):
    response = client.post("/prior", json=payload)
    assert response.status_code == 400
    assert response.json()["error"].startswith(f"{field}:")


# ---------------------------------------------
# Remote provider against the app
# ---------------------------------------------


def test_remote_prior_over_the_wire(client):
    prior = remote_prior(client, describe(1, 1), ["north", "south"])
    assert prior.actions == ("north", "south")
    assert prior.probs["north"] > prior.probs["south"]


def test_remote_provider_raises_on_400(client):
    provider = RemotePriorProvider(TextGrid(), client=client)
    with pytest.raises(ProviderError, match="answered 400"):
        provider.prior_for("not a grid", ["north"])
    assert provider.stats.query_count == 1


def test_remote_provider_uniform_fallback_on_400(client):
    provider = RemotePriorProvider(TextGrid(), client=client, fallback="uniform")
    prior = provider.prior_for("not a grid", ["north", "south"])
    assert prior.probs == {"north": 0.5, "south": 0.5}


def test_online_run_with_remote_provider(client):
    cfg = small_config(provider={"kind": "remote"}, run={"episodes": 3, "seeds": [0]})
    run = OnlineRun(cfg, "cached", 0, client=client)
    metrics = run.run()
    assert len(metrics.returns) == 3
    assert metrics.provider_queries > 0
    assert run.query_accounting_ok()
