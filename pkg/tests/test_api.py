import dataclasses

import pytest
from fastapi.testclient import TestClient

from twowell import api


@pytest.fixture
def client() -> TestClient:
    return TestClient(api.app)


@pytest.fixture
def secured(monkeypatch) -> str:
    monkeypatch.setattr(api, "settings", dataclasses.replace(api.settings, API_TOKEN="s3cret"))
    return "s3cret"


def test_health(client) -> None:
    assert client.get("/health").json() == {"ok": True}
    assert client.get("/").json()["ok"] is True


def test_eval(client) -> None:
    r = client.post("/api/v1/eval", json={"matrix": [1, 0, 0, 1], "lambda": 1.5})
    assert r.status_code == 200
    doc = r.json()
    assert doc["W"] == pytest.approx(0.25 + 1 / 9)
    assert doc["region"] == "second_order"


def test_domain_errors_are_422(client) -> None:
    r = client.post("/api/v1/eval", json={"matrix": [1, 0, 0, 1], "lambda": 0.5})
    assert r.status_code == 422
    assert r.json()["error"] == "DomainError"
    r = client.post("/api/v1/eval", json={"matrix": [1, 0, 0, 1], "theta": "bogus"})
    assert r.status_code == 422
    assert r.json()["error"] == "ThetaError"
    # pydantic validation
    assert client.post("/api/v1/eval", json={"matrix": [1, 0, 0]}).status_code == 422


def test_laminate(client) -> None:
    r = client.post("/api/v1/laminate", json={"matrix": [1, 0, 0, 1]})
    assert r.status_code == 200
    assert r.json()["passed"] is True
    assert r.json()["laminate"]["depth"] == 2


def test_phase_diagram(client) -> None:
    r = client.post("/api/v1/phase-diagram", json={"a_range": [0.5, 1.5, 3], "b_range": [-0.5, 0.5, 3]})
    assert r.status_code == 200
    assert len(r.json()["rows"]) == 9
    r = client.post("/api/v1/phase-diagram", json={"a_range": [0.5, 1.5, 500]})
    assert r.status_code == 422


def test_bearer(client, secured) -> None:
    body = {"matrix": [1, 0, 0, 1]}
    assert client.post("/api/v1/eval", json=body).status_code == 401
    assert client.post("/api/v1/eval", json=body, headers={"Authorization": "Bearer nope"}).status_code == 403
    ok = client.post("/api/v1/eval", json=body, headers={"Authorization": f"Bearer {secured}"})
    assert ok.status_code == 200
    assert client.post("/api/v1/eval", json=body, headers={"Authorization": f"bearer  {secured}"}).status_code == 200
    assert client.post("/api/v1/eval", json=body, headers={"Authorization": f"Basic {secured}"}).status_code == 401
    assert client.post("/api/v1/eval", json=body, headers={"Authorization": "Bearer "}).status_code == 401
    assert client.get("/health").status_code == 200
