import json

import pytest

from crashquery.executor import execute
from crashquery.frames import frame_from_obj
from crashquery.graph import compile_frame
from crashquery.outputs import render_map, render_map_html, render_table, summarize_frame
from crashquery.repair import RepairAction, RepairReport

from .sample_frames import PROXIMITY_FRAME_OBJ, RANKING_FRAME_OBJ
from .test_executor import _resolved


@pytest.fixture(scope="module")
def proximity_result(registry, dataset):
    frame = _resolved(PROXIMITY_FRAME_OBJ, dataset)
    return execute(compile_frame(frame, registry), dataset, frame_echo=frame)


@pytest.fixture(scope="module")
def ranking_result(registry, dataset):
    frame = _resolved(RANKING_FRAME_OBJ, dataset)
    return execute(compile_frame(frame, registry), dataset, frame_echo=frame)


# -- map ----------------------------------------------------------------------

def test_map_features_match_role_records(proximity_result):
    doc = json.loads(render_map(proximity_result))
    assert doc["type"] == "FeatureCollection"
    by_role = {}
    for feat in doc["features"]:
        by_role.setdefault(feat["properties"]["role"], []).append(feat)
    for role, records in proximity_result.role_records.items():
        got = sorted(f["id"] for f in by_role.get(role, []))
        assert got == sorted(r.id for r in records)
    # scope feature is the town boundary polygon
    assert by_role["scope"][0]["geometry"]["type"] == "Polygon"
    assert doc["metadata"]["dataset_version"] == proximity_result.dataset_version
    assert "bbox" in doc["metadata"]


def test_map_ranked_features_carry_rank(ranking_result):
    doc = json.loads(render_map(ranking_result))
    ranked = {f["properties"]["rank"]: f for f in doc["features"]
              if "rank" in f["properties"]}
    assert set(ranked) == {1, 2, 3, 4, 5}
    assert ranked[1]["properties"]["metric_value"] >= ranked[5]["properties"]["metric_value"]


def test_map_empty_result(registry, dataset):
    from crashquery.executor import ResultSet

    empty = ResultSet(role_records={}, ranking_rows=None, provenance=[],
                      dataset_version=dataset.version)
    doc = json.loads(render_map(empty))
    assert doc["features"] == []
    assert doc["metadata"]["dataset_version"] == dataset.version


def test_map_deterministic(proximity_result):
    assert render_map(proximity_result) == render_map(proximity_result)


def test_map_html_is_self_contained(ranking_result):
    html = render_map_html(ranking_result)
    assert html.startswith("<!DOCTYPE html>")
    assert '"FeatureCollection"' in html


# -- table ---------------------------------------------------------------------

def test_ranking_table_csv(ranking_result):
    text = render_table(ranking_result, "csv")
    lines = text.strip().splitlines()
    assert lines[0] == "rank,id,name,crash_count"
    assert len(lines) == 6  # header + top 5
    first = lines[1].split(",")
    assert first[0] == "1"


def test_empty_ranking_header_only(registry, dataset):
    from crashquery.executor import ResultSet

    empty = ResultSet(role_records={"primary": []}, ranking_rows=[], provenance=[],
                      dataset_version=dataset.version)
    text = render_table(empty, "csv")
    assert text.strip() == "rank,id,name,crash_count"


def test_record_export_mode(proximity_result):
    text = render_table(proximity_result, "csv")
    lines = text.strip().splitlines()
    assert lines[0].startswith("id,")
    assert len(lines) == 1 + len(proximity_result.role_records["primary"])
    assert "severity" in lines[0]


def test_table_json(ranking_result):
    rows = json.loads(render_table(ranking_result, "json"))
    assert len(rows) == 5
    assert rows[0]["rank"] == 1
    assert set(rows[0]) == {"rank", "id", "name", "crash_count"}


def test_table_bad_format(ranking_result):
    with pytest.raises(ValueError):
        render_table(ranking_result, "xml")


# -- summary ----------------------------------------------------------------------

def test_ranking_summary_text():
    frame = frame_from_obj(RANKING_FRAME_OBJ)
    text = summarize_frame(frame, RepairReport())
    assert text == ("Ranking the top 5 School by crash_count of Crash, "
                    "where first_hrmf = Collision with pedestrian, "
                    "within 500 m of School, scoped to Boston.")


def test_summary_no_repairs_no_sentences():
    frame = frame_from_obj(RANKING_FRAME_OBJ)
    text = summarize_frame(frame, RepairReport())
    assert "Interpreted" not in text and "Resolved" not in text


def test_summary_mentions_each_repair():
    frame = frame_from_obj(RANKING_FRAME_OBJ)
    report = RepairReport(actions=[
        RepairAction("value_normalization", "spatial_constraints[0].distance_m",
                     "half a mile", 804, "table:distance"),
        RepairAction("value_normalization", "attribute_constraints[0].value",
                     "pedestrian", "Collision with pedestrian", "table:first_hrmf"),
    ])
    text = summarize_frame(frame, report)
    assert "Interpreted 'half a mile' as 804 m." in text
    assert "Interpreted 'pedestrian' as 'Collision with pedestrian'." in text


def test_summary_anchor_resolution_sentence():
    obj = json.loads(json.dumps(RANKING_FRAME_OBJ))
    frame = frame_from_obj(obj)
    report = RepairReport(actions=[
        RepairAction("anchor_resolution", "references[0].resolved_location",
                     None, [-72.504, 42.367], "gazetteer:dataset_lookup"),
    ])
    text = summarize_frame(frame, report)
    assert "Resolved 'Boston' to (-72.504, 42.367)." in text


def test_summary_deterministic():
    frame = frame_from_obj(PROXIMITY_FRAME_OBJ)
    assert summarize_frame(frame, RepairReport()) == summarize_frame(frame, RepairReport())
