"""HTTP service endpoints exercised through the in-process test client."""

import json

import pytest
from fastapi.testclient import TestClient

from curveflow.service import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


MINIMAL_RUN = {
    "variant": "flow1",
    "n": 1.0,
    "family": "circle",
    "params": {"r": 1.0},
    "grid_size": 64,
    "cfl_safety": 0.8,
    "t_end": 0.5,
    "sample_dt": 0.1,
}


class TestHealth:
    def test_health(self, client):
        reply = client.get("/health")
        assert reply.status_code == 200
        body = reply.json()
        assert body["status"] == "ok"
        assert body["version"]


class TestRunEndpoint:
    def test_circle_run(self, client):
        reply = client.post("/run", json=MINIMAL_RUN)
        assert reply.status_code == 200
        body = reply.json()
        assert body["status"] == "converged"
        assert body["exit_code"] == 0
        assert body["summary"]["checks_passed"] is True
        assert body["summary"]["limit_circle"]["radius"] == pytest.approx(1.0, abs=1e-10)

    def test_run_writes_when_output_dir_given(self, client, tmp_path):
        doc = dict(MINIMAL_RUN, output_dir=str(tmp_path / "svc"))
        reply = client.post("/run", json=doc)
        assert reply.status_code == 200
        assert (tmp_path / "svc" / "timeseries.csv").exists()

    def test_validation_error_is_422_naming_field(self, client):
        doc = dict(MINIMAL_RUN, n=0.5)
        reply = client.post("/run", json=doc)
        assert reply.status_code == 422
        assert any(err["loc"][-1] == "n" for err in reply.json()["detail"])

    def test_unknown_key_rejected(self, client):
        doc = dict(MINIMAL_RUN, wobble=3)
        reply = client.post("/run", json=doc)
        assert reply.status_code == 422
        assert "wobble" in json.dumps(reply.json())

    def test_nonconvex_input_maps_to_exit_3(self, client):
        doc = dict(MINIMAL_RUN, family="cosine", params={"r0": 1.0, "eps": 1.2, "m": 2})
        reply = client.post("/run", json=doc)
        assert reply.status_code == 200
        body = reply.json()
        assert body["exit_code"] == 3
        assert body["status"] == "invalid_input"


class TestSweepEndpoint:
    def test_inline_manifests(self, client, tmp_path):
        doc = {
            "manifests": [MINIMAL_RUN, dict(MINIMAL_RUN, params={"r": 2.0})],
            "output_root": str(tmp_path),
        }
        reply = client.post("/sweep", json=doc)
        assert reply.status_code == 200
        body = reply.json()
        assert body["worst_exit_code"] == 0
        assert len(body["results"]) == 2
        assert (tmp_path / "run_000" / "summary.json").exists()


class TestFuzzEndpoint:
    def test_small_fuzz(self, client):
        reply = client.post("/fuzz", json={"count": 20, "seed": 1, "n_values": [1.0],
                                           "grid_size": 64})
        assert reply.status_code == 200
        body = reply.json()
        assert body["passed"] is True
        assert body["profiles_checked"] == 20

    def test_replay_with_mode1(self, client):
        reply = client.post(
            "/fuzz",
            json={"count": 1, "seed": 0, "n_values": [1.0], "grid_size": 64,
                  "replay": [{"a0": 1.0, "sin1": 0.1}]},
        )
        assert reply.status_code == 200
        assert len(reply.json()["invalid_inputs"]) == 1


class TestVerifyEndpoint:
    def test_small_verify(self, client):
        reply = client.post("/verify", json={"sizes": [128], "horizon": 0.02})
        assert reply.status_code == 200
        body = reply.json()
        assert body["circle_drift"]["passed"] is True
        assert body["cases"][0]["size"] == 128
