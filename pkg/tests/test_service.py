import io

import pytest
from fastapi.testclient import TestClient

from gutsim.metrics import metrics_from_csv
from gutsim.scenario import demo_scenario, scenario_to_yaml
from gutsim.service import app


@pytest.fixture(scope="module")
def client():
    return TestClient(app)


def small_scenario_dict(count=2, budget=5):
    sc = demo_scenario()
    sc = sc.model_copy(update={"oois": sc.oois.model_copy(update={"count": count})})
    sc = sc.model_copy(update={"budget": sc.budget.model_copy(update={"max_decisions": budget})})
    return sc.model_dump(by_alias=True, mode="json")


def test_health(client):
    body = client.get("/health").json()
    assert body["status"] == "ok"
    assert body["service"] == "gutsim"


class TestValidateEndpoint:
    def test_valid_scenario_inline_yaml(self, client):
        resp = client.post(
            "/scenario/validate", json={"scenario_yaml": scenario_to_yaml(demo_scenario())}
        )
        assert resp.status_code == 200
        assert resp.json() == {"valid": True, "errors": []}

    def test_schema_violation_reported(self, client):
        resp = client.post("/scenario/validate", json={"scenario_yaml": "version: 1\n"})
        body = resp.json()
        assert resp.status_code == 200
        assert body["valid"] is False
        assert body["errors"]

    def test_cross_field_violation_reported(self, client):
        data = small_scenario_dict()
        data["team"][0]["launch"] = [6, 6]  # impassable blob
        body = client.post("/scenario/validate", json={"scenario": data}).json()
        assert body["valid"] is False
        assert any("impassable" in e for e in body["errors"])

    def test_both_payload_forms_rejected_together(self, client):
        resp = client.post(
            "/scenario/validate",
            json={"scenario": small_scenario_dict(), "scenario_yaml": "x: 1"},
        )
        assert resp.status_code == 422


class TestRunEndpoint:
    def test_run_returns_all_artifacts(self, client):
        resp = client.post(
            "/run",
            json={"scenario": small_scenario_dict(), "seeds": [0, 1], "algorithm": "GUTS"},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert len(body["episodes"]) == 2
        assert body["csv"].startswith("algorithm,seed,")
        assert {m["algorithm"] for m in body["metrics"]["per_algorithm"]} == {"GUTS"}

    def test_csv_matches_direct_library_call(self, client):
        from gutsim.episode import run_many
        from gutsim.metrics import csv_text, rows_from_log
        from gutsim.scenario import scenario_from_dict

        data = small_scenario_dict()
        resp = client.post("/run", json={"scenario": data, "seeds": [3], "algorithm": "NATS"})
        logs = run_many(scenario_from_dict(data), [3], ["NATS"], jobs=1)
        expected = csv_text([row for log in logs for row in rows_from_log(log)])
        assert resp.json()["csv"] == expected

    def test_metrics_reconstructible_from_returned_csv(self, client):
        data = small_scenario_dict(count=3, budget=6)
        resp = client.post("/sweep", json={"scenario": data, "seeds": [0, 1],
                                           "algorithms": ["GUTS", "COVERAGE"]})
        body = resp.json()
        report = metrics_from_csv(io.StringIO(body["csv"]), n_agents=2, n_oois=3)
        assert report.to_dict()["per_algorithm"] == body["metrics"]["per_algorithm"]

    def test_run_without_override_uses_team_policies(self, client):
        resp = client.post("/run", json={"scenario": small_scenario_dict(), "seeds": [0]})
        assert resp.status_code == 200
        body = resp.json()
        assert body["episodes"][0]["algorithm"] == "GUTS"  # demo team policy

    def test_invalid_scenario_is_400(self, client):
        data = small_scenario_dict()
        data["team"][0]["launch"] = [6, 6]
        resp = client.post("/run", json={"scenario": data, "seeds": [0]})
        assert resp.status_code == 400
        assert "impassable" in resp.json()["detail"]

    def test_missing_seeds_is_400(self, client):
        data = small_scenario_dict()
        data["seeds"] = []  # scenario supplies none and the request omits them
        resp = client.post("/run", json={"scenario": data})
        assert resp.status_code == 400
        assert "seeds" in resp.json()["detail"]

    def test_scenario_seeds_used_as_fallback(self, client):
        resp = client.post("/run", json={"scenario": small_scenario_dict(), "algorithm": "COVERAGE"})
        assert resp.status_code == 200
        seeds = {e["seed"] for e in resp.json()["episodes"]}
        assert seeds == {0, 1, 2, 3, 4}  # the demo scenario's shipped seed list

    def test_subsample_override_applies(self, client):
        data = small_scenario_dict()
        resp = client.post(
            "/run",
            json={"scenario": data, "seeds": [0], "algorithm": "GUTS", "subsample": 0.05},
        )
        assert resp.status_code == 200

    def test_include_logs_false_omits_episodes(self, client):
        resp = client.post(
            "/run",
            json={
                "scenario": small_scenario_dict(),
                "seeds": [0],
                "algorithm": "GUTS",
                "include_logs": False,
            },
        )
        body = resp.json()
        assert body["episodes"] == []
        assert body["csv"]


class TestSweepEndpoint:
    def test_sweep_covers_grid(self, client):
        resp = client.post(
            "/sweep",
            json={
                "scenario": small_scenario_dict(),
                "seeds": [0, 1, 2],
                "algorithms": ["GUTS", "NATS", "COVERAGE"],
            },
        )
        body = resp.json()
        assert len(body["episodes"]) == 9
        labels = [(e["algorithm"], e["seed"]) for e in body["episodes"]]
        assert labels == sorted(labels)


class TestBenchEndpoint:
    def test_small_bench_runs(self, client):
        resp = client.post(
            "/bench",
            json={"cells": 400, "observations": 40, "candidates": 50, "subsample": 0.1},
        )
        assert resp.status_code == 200
        body = resp.json()
        assert body["n_cells"] == 400
        assert body["estep_max_abs_diff"] <= 1e-9
        assert body["naive_vs_fast_speedup"] > 0

    def test_non_square_grid_rejected(self, client):
        resp = client.post("/bench", json={"cells": 401})
        assert resp.status_code == 400
