# -*- coding: utf-8 -*-

"""HTTP surface of the scenario service."""

import pytest
from fastapi.testclient import TestClient

from pipeline_server import app


@pytest.fixture
def client():
    return TestClient(app)


def test_health(client):
    assert client.get("/").json() == {"status": "ok"}


def test_chi2_threshold(client):
    body = client.get("/chi2-threshold", params={"n_y": 2, "m": 100}).json()
    assert body["alpha"] == pytest.approx(9.2103404, rel=1e-6)


def test_chi2_threshold_rejects_bad_dimension(client):
    assert client.get("/chi2-threshold", params={"n_y": 0, "m": 100}).status_code == 400


def test_zone(client):
    res = client.post("/zone", json={"case_path": "case39.txt", "targets": [10, 11]})
    assert res.status_code == 200
    body = res.json()
    assert body["boundary"] == [3, 9, 16]
    assert body["d_max"] == 3


def test_zone_errors(client):
    assert client.post("/zone", json={"case_path": "nowhere.txt", "targets": [1]}).status_code == 404
    assert client.post("/zone", json={"case_path": "case39.txt", "targets": [99]}).status_code == 400
    assert client.post("/zone", json={"case_path": "case39.txt", "targets": []}).status_code == 422


def test_unknown_job(client):
    assert client.get("/scenario/status/nope").status_code == 404


def test_bad_scenario_is_rejected_up_front(client, tmp_path):
    res = client.post("/scenario/run", json={"config_path": str(tmp_path / "absent.yaml")})
    assert res.status_code == 400
    assert "not found" in res.json()["detail"]
