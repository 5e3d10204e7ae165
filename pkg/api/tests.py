import factory
import pytest
from rest_framework.test import APIClient

from apps.scenarios.models import RoiResult, ScenarioRun

CLOSE_GROUND = "close range (20 m) ground"


class ScenarioRunFactory(factory.django.DjangoModelFactory):
    class Meta:
        model = ScenarioRun

    name = factory.Sequence(lambda n: f"roof-vs-grille/variant-{n}")
    scenario = "roof-vs-grille"
    variant = factory.Sequence(lambda n: f"variant-{n}")
    config_sha256 = factory.Faker("sha256")
    seed = 1
    timesteps = 256
    r_thresh = 0.4
    reference_resolution = "256x512"
    metadata = factory.LazyAttribute(lambda run: {"scenario": run.scenario, "seed": run.seed})


class RoiResultFactory(factory.django.DjangoModelFactory):
    class Meta:
        model = RoiResult

    run = factory.SubFactory(ScenarioRunFactory)
    position = factory.Sequence(lambda n: n)
    roi = CLOSE_GROUND
    grid = "ground-fine"
    mean_blind_spot_radius = 0.3
    mean_detection_probability = 0.8
    nonempty_cell_count = 5000


@pytest.fixture
def client():
    return APIClient()


@pytest.mark.django_db
class TestHealthCheck:
    def test_ok(self, client):
        response = client.get("/api/health/")
        assert response.status_code == 200
        assert response.json()["status"] == "ok"

    def test_schema_documents_health_and_compare(self, client):
        response = client.get("/api/schema/", {"format": "json"})
        assert response.status_code == 200
        schema = response.content.decode()
        assert "HealthCheck" in schema
        assert "/api/runs/compare/" in schema


@pytest.mark.django_db
class TestScenarioRuns:
    def test_list_is_paginated_and_wrapped(self, client):
        ScenarioRunFactory.create_batch(3)
        body = client.get("/api/runs/").json()
        assert body["success"] is True
        assert body["data"]["count"] == 3
        assert "roi_results" not in body["data"]["results"][0]

    def test_list_filters_by_scenario(self, client):
        ScenarioRunFactory.create_batch(2)
        ScenarioRunFactory(scenario="camera-trio")
        body = client.get("/api/runs/", {"scenario": "camera-trio"}).json()
        assert [run["scenario"] for run in body["data"]["results"]] == ["camera-trio"]

    def test_detail_includes_roi_table(self, client):
        result = RoiResultFactory(mean_detection_probability=None, mean_blind_spot_radius=None)
        body = client.get(f"/api/runs/{result.run.id}/").json()
        assert body["success"] is True
        [row] = body["data"]["roi_results"]
        assert row["roi"] == CLOSE_GROUND
        assert row["mean_detection_probability"] is None
        assert body["data"]["metadata"]["seed"] == 1

    def test_detail_not_found(self, client):
        assert client.get("/api/runs/999/").status_code == 404

    def test_runs_are_read_only(self, client):
        assert client.post("/api/runs/", {"name": "x"}).status_code in (403, 405)


@pytest.mark.django_db
class TestCompare:
    def test_compare_two_runs(self, client):
        a = RoiResultFactory(mean_detection_probability=0.9, mean_blind_spot_radius=0.5).run
        b = RoiResultFactory(mean_detection_probability=0.7, mean_blind_spot_radius=0.2).run
        response = client.get("/api/runs/compare/", {"a": a.id, "b": b.id})
        assert response.status_code == 200
        data = response.json()["data"]
        assert (data["a"], data["b"]) == (a.name, b.name)
        [row] = data["rows"]
        assert row["probability_winner"] == "A"
        assert row["radius_winner"] == "B"
        assert row["probability_delta"] == pytest.approx(0.2)

    def test_missing_query(self, client):
        response = client.get("/api/runs/compare/", {"a": 1})
        assert response.status_code == 400
        assert response.json()["success"] is False

    def test_unknown_run(self, client):
        a = RoiResultFactory().run
        response = client.get("/api/runs/compare/", {"a": a.id, "b": a.id + 100})
        assert response.status_code == 404

    def test_different_roi_sets(self, client):
        a = RoiResultFactory().run
        b = RoiResultFactory(roi="long range (160 m) ground").run
        response = client.get("/api/runs/compare/", {"a": a.id, "b": b.id})
        assert response.status_code == 400
        assert "ROI" in response.json()["message"]
