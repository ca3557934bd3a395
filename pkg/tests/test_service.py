import json

import pytest
from fastapi.testclient import TestClient

from crashquery.audit import AuditLog
from crashquery.engine import QueryEngine
from crashquery.interpreter import InterpreterBackend
from crashquery.repair import Gazetteer, default_normalization_table
from crashquery.service import create_app

from .sample_frames import RANKING_FRAME_OBJ


@pytest.fixture(scope="module")
def engine(registry, dataset, places):
    gaz = Gazetteer.from_dataset(dataset).merged(Gazetteer.from_places(places))
    return QueryEngine(registry=registry, dataset=dataset, gazetteer=gaz,
                       table=default_normalization_table(),
                       backend=InterpreterBackend(kind="rule_based"),
                       audit=AuditLog())


@pytest.fixture(scope="module")
def client(engine):
    return TestClient(create_app(engine), raise_server_exceptions=False)


def test_health(client, dataset):
    resp = client.get("/health")
    assert resp.status_code == 200
    assert resp.json() == {"status": "ok", "dataset_version": dataset.version}


def test_dataset_version(client, dataset):
    assert client.get("/dataset/version").json() == {"dataset_version": dataset.version}


def test_registry_endpoint(client):
    doc = client.get("/registry").json()
    assert [e["name"] for e in doc["entities"]] == [
        "Crash", "Road", "School", "BusStop", "Crosswalk", "Town"]
    assert doc["relations"] == ["within_distance", "intersects", "contains", "nearest_to"]


def test_query_ranking(client):
    resp = client.post("/query", json={
        "text": "top 5 schools by pedestrian crashes within 500m in Boston"})
    assert resp.status_code == 200
    body = resp.json()
    assert len(body["ranking"]) == 5
    assert body["repair_report"]["repaired"] is True
    assert body["nl_summary"].startswith("Ranking the top 5 School")
    assert body["map"]["type"] == "FeatureCollection"
    roles = {f["properties"]["role"] for f in body["map"]["features"]}
    assert {"primary", "support", "scope"} <= roles
    assert body["graph_audit_text"]
    assert body["dataset_version"]
    assert "repair" in body["timings_ms"]


def test_query_unsupported_is_502(client):
    resp = client.post("/query", json={"text": "purchase me a sandwich"})
    assert resp.status_code == 502
    assert resp.json()["error"] == "interpretation_failure"


def test_query_ambiguous_anchor_candidates(client):
    resp = client.post("/query", json={"text": "show crashes near Main School"})
    assert resp.status_code == 422
    body = resp.json()
    assert body["error"] == "ambiguous_anchor"
    cands = body["candidates"][0]["candidates"]
    assert len(cands) == 2


def test_query_anchor_pick_resolves(client):
    r0 = client.post("/query", json={"text": "show crashes near Main School",
                                     "anchor_pick": 0})
    r1 = client.post("/query", json={"text": "show crashes near Main School",
                                     "anchor_pick": 1})
    assert r0.status_code == 200 and r1.status_code == 200
    loc0 = r0.json()["repaired_frame"]["references"][0]["resolved_location"]
    loc1 = r1.json()["repaired_frame"]["references"][0]["resolved_location"]
    assert loc0 != loc1


def test_interpret_stage(client):
    resp = client.post("/interpret", json={"text": "show fatal crashes in Quincy"})
    assert resp.status_code == 200
    body = resp.json()
    assert body["raw_frame"]["attribute_constraints"][0]["value"] == "fatal"
    assert body["backend"] == "rule_based"


def test_repair_stage(client):
    raw = json.loads(json.dumps(RANKING_FRAME_OBJ))
    raw["attribute_constraints"][0]["value"] = "cyclists"
    resp = client.post("/repair", json=raw)
    assert resp.status_code == 200
    body = resp.json()
    assert body["repaired_frame"]["attribute_constraints"][0]["value"] == "Collision with cyclist"
    assert body["repair_report"]["repaired"] is True
    assert body["repair_report"]["actions"][0]["kind"] == "value_normalization"


def test_repair_rejection_is_422(client):
    raw = json.loads(json.dumps(RANKING_FRAME_OBJ))
    raw["references"][0]["name"] = "Atlantis"
    resp = client.post("/repair", json=raw)
    assert resp.status_code == 422
    assert resp.json()["error"] == "repair_rejected"


def test_execute_rejects_unrepaired_frame(client):
    raw = json.loads(json.dumps(RANKING_FRAME_OBJ))
    raw["attribute_constraints"][0]["value"] = "cyclists"  # never passed repair
    raw["references"][0]["resolved_location"] = [-72.5, 42.4]
    resp = client.post("/execute", json=raw)
    assert resp.status_code == 422
    assert resp.json()["error"] == "invalid_frame"


def test_execute_rejects_unresolved_reference(client):
    resp = client.post("/execute", json=RANKING_FRAME_OBJ)
    assert resp.status_code == 422


def test_execute_valid_frame(client, engine):
    raw = json.loads(json.dumps(RANKING_FRAME_OBJ))
    fixed, _ = engine.repair_frame(__frame(raw))
    from crashquery.frames import frame_to_obj

    resp = client.post("/execute", json=frame_to_obj(fixed))
    assert resp.status_code == 200
    body = resp.json()
    assert len(body["ranking"]) == 5
    assert body["provenance"]


def __frame(obj):
    from crashquery.frames import frame_from_obj

    return frame_from_obj(obj)


def test_execute_malformed_frame_is_400(client):
    resp = client.post("/execute", json={"supported": True, "bogus_key": 1})
    assert resp.status_code == 400


def test_rejected_executions_leave_no_provenance(engine, client):
    """Audit soundness: rejected /execute calls never record node provenance."""
    before = len(engine.audit.entries())
    raw = json.loads(json.dumps(RANKING_FRAME_OBJ))
    raw["attribute_constraints"][0]["value"] = "not canonical at all"
    raw["references"][0]["resolved_location"] = [-72.5, 42.4]
    assert client.post("/execute", json=raw).status_code == 422
    new = engine.audit.entries()[before:]
    rejected = [e for e in new if e["stage"] == "execute"]
    assert rejected and all(e["status"] == "rejected" for e in rejected)
    assert all("provenance" not in e for e in rejected)


def test_query_response_always_has_repair_report(client):
    resp = client.post("/query", json={"text": "show crashes"})
    assert resp.status_code == 200
    assert "repair_report" in resp.json()
    assert resp.json()["repair_report"]["actions"] == []
