import pytest
from fastapi.testclient import TestClient

from kick2kit.checkpoint import ModelBundle
from kick2kit.model import ModelConfig, init_model
from kick2kit.service import ServiceConfig, create_app, load_service_config
from kick2kit.survey import SurveyStore
from kick2kit.tokens import source_vocabulary, target_vocabulary


@pytest.fixture(scope="module")
def bundle():
    config = ModelConfig(
        source_vocab_size=len(source_vocabulary()),
        target_vocab_size=len(target_vocabulary()),
        hidden_size=8,
        layer_count=1,
    )
    return ModelBundle(init_model(config, 2), source_vocabulary(), target_vocabulary())


@pytest.fixture()
def client(bundle, tmp_path):
    store = SurveyStore(bundle, tmp_path / "log.ndjson", seed=11)
    return TestClient(create_app(store))


def beat_grid():
    return [[i % 12 == 0 for i in range(48)] for _ in range(4)]


def test_styles_endpoint(client):
    data = client.get("/api/styles").json()
    names = [s["name"] for s in data["styles"]]
    assert names == ["pop", "rock", "funk", "afrocuban"]
    assert all(s["tempo_bpm"] > 0 for s in data["styles"])


def test_create_groove_response_shape(client):
    response = client.post(
        "/api/grooves", json={"style": "pop", "kick_grid": beat_grid()}
    )
    assert response.status_code == 200
    data = response.json()
    assert set(data) == {"id", "style", "output_phrase", "steps"}
    assert "method" not in data  # raters stay blind
    assert set(data["steps"]) == {"C", "H", "S", "T", "t", "F"}
    assert len(data["output_phrase"].split()) == 196


def test_create_groove_rejects_bad_grid(client):
    bad = [[False] * 47 for _ in range(4)]
    response = client.post("/api/grooves", json={"style": "pop", "kick_grid": bad})
    assert response.status_code == 400
    assert "48" in response.json()["detail"]


def test_create_groove_rejects_unknown_style(client):
    response = client.post(
        "/api/grooves", json={"style": "polka", "kick_grid": beat_grid()}
    )
    assert response.status_code == 422


def test_rating_flow(client):
    groove = client.post(
        "/api/grooves", json={"style": "rock", "kick_grid": beat_grid()}
    ).json()
    ok = client.post(f"/api/grooves/{groove['id']}/rating", json={"rating": "good"})
    assert ok.status_code == 200
    again = client.post(f"/api/grooves/{groove['id']}/rating", json={"rating": "poor"})
    assert again.status_code == 409
    missing = client.post("/api/grooves/nope/rating", json={"rating": "good"})
    assert missing.status_code == 404
    invalid = client.post(
        f"/api/grooves/{groove['id']}/rating", json={"rating": "great"}
    )
    assert invalid.status_code == 422


def test_reports_cycle(client):
    for style, rating in (("pop", "good"), ("funk", "poor"), ("rock", "average")):
        groove = client.post(
            "/api/grooves", json={"style": style, "kick_grid": beat_grid()}
        ).json()
        client.post(f"/api/grooves/{groove['id']}/rating", json={"rating": rating})
    methods = client.get("/api/reports/methods").json()["methods"]
    assert sum(sum(m["raw"].values()) for m in methods) == 3
    brackets = client.get("/api/reports/brackets").json()["brackets"]
    assert len(brackets) == 9
    styles = client.get("/api/reports/styles").json()["styles"]
    assert styles["funk"]["poor_share"] == 1.0


def test_service_config_env_overrides(tmp_path):
    path = tmp_path / "config.json"
    path.write_text('{"port": 9000, "checkpoint_path": "m.ckpt"}')
    config = load_service_config(
        path, env={"KICK2KIT_PORT": "9100", "KICK2KIT_SEED": "4"}
    )
    assert config == ServiceConfig(
        port=9100, checkpoint_path="m.ckpt", seed=4
    )


def test_service_config_defaults():
    config = load_service_config(env={})
    assert config.host == "127.0.0.1"
    assert config.log_path == "survey-log.ndjson"
