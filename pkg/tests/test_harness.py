import json

import pytest

from crashquery.frames import frame_from_obj, parse_frame
from crashquery.harness import (
    GROUP_SIZES,
    EvalCase,
    EvalReport,
    compare_intent,
    load_cases,
    load_overrides,
    report_render,
    run_suite,
)
from crashquery.interpreter import InterpreterBackend
from crashquery.repair import Gazetteer, default_normalization_table

from .sample_frames import RANKING_FRAME_OBJ


@pytest.fixture(scope="module")
def table():
    return default_normalization_table()


@pytest.fixture(scope="module")
def gaz(dataset, places):
    return Gazetteer.from_dataset(dataset).merged(Gazetteer.from_places(places))


@pytest.fixture(scope="module")
def cases():
    return load_cases()


@pytest.fixture(scope="module")
def backend():
    return InterpreterBackend(kind="rule_based")


def test_shipped_suite_shape(cases):
    sizes = {}
    for c in cases:
        sizes[c.group] = sizes.get(c.group, 0) + 1
    assert sizes == GROUP_SIZES
    assert len(cases) == 80
    assert len({c.id for c in cases}) == 80


def test_case_round_trip(cases):
    case = cases[0]
    again = EvalCase.from_obj(json.loads(json.dumps(case.to_obj())))
    assert again.id == case.id
    assert again.ground_truth == case.ground_truth


def test_compare_intent_identical():
    f = frame_from_obj(RANKING_FRAME_OBJ)
    ok, diff = compare_intent(f, f)
    assert ok and diff == []


def test_compare_intent_diff_localized():
    a = json.loads(json.dumps(RANKING_FRAME_OBJ))
    a["ranking"]["top_n"] = 9
    ok, diff = compare_intent(frame_from_obj(a), frame_from_obj(RANKING_FRAME_OBJ))
    assert not ok
    assert any("ranking.top_n" in d for d in diff)


def test_compare_intent_order_insensitive():
    a = json.loads(json.dumps(RANKING_FRAME_OBJ))
    a["targets"] = list(reversed(a["targets"]))
    ok, _ = compare_intent(frame_from_obj(a), frame_from_obj(RANKING_FRAME_OBJ))
    assert ok


def test_single_group_run(cases, backend, registry, table, gaz, dataset):
    g1 = [c for c in cases if c.group == "G1"]
    report = run_suite(g1, backend, registry, table, gaz, dataset)
    assert len(report.cases) == 6
    totals = report.totals()
    assert totals["exec_success"] == 6
    assert totals["intent_complete"] == 6
    rows = report.group_rows()
    assert len(rows) == 1 and rows[0]["group"] == "G1"


def test_empty_suite(backend, registry, table, gaz, dataset):
    report = run_suite([], backend, registry, table, gaz, dataset)
    assert report.totals()["n"] == 0
    text = report_render(report)
    assert "Overall" in text


def test_case_failure_recorded_not_thrown(backend, registry, table, gaz, dataset):
    bad = EvalCase(id="x-01", group="G1", query="show crashes in Atlantis",
                   ground_truth=frame_from_obj({"supported": True,
                                                "targets": [{"entity": "Crash", "role": "primary"}]}))
    report = run_suite([bad], backend, registry, table, gaz, dataset)
    case = report.cases[0]
    assert not case.exec_success
    assert case.error is not None and "Atlantis" in case.error


def test_override_changes_raw_frame(cases, backend, registry, table, gaz, dataset):
    case = next(c for c in cases if c.id == "g3-01")
    clean = run_suite([case], backend, registry, table, gaz, dataset,
                      overrides={case.id: case.ground_truth})
    assert clean.cases[0].repaired is False
    assert clean.cases[0].intent_complete


def test_report_render_rows(cases, backend, registry, table, gaz, dataset):
    subset = [c for c in cases if c.group in ("G1", "G5")]
    report = run_suite(subset, backend, registry, table, gaz, dataset)
    text = report_render(report)
    lines = text.splitlines()
    assert lines[0].startswith("| Group ")
    assert any("| G1 | Entity Retrieval |" in line for line in lines)
    assert any("| G5 | Spatial Rel. |" in line for line in lines)
    assert lines[-1].startswith("| **Overall**")


def test_report_totals_equal_group_sums(cases, backend, registry, table, gaz, dataset):
    subset = [c for c in cases if c.group in ("G1", "G4")]
    report = run_suite(subset, backend, registry, table, gaz, dataset)
    rows = report.group_rows()
    totals = report.totals()
    assert totals["n"] == sum(r["n"] for r in rows)
    assert totals["repaired"] == sum(r["repaired"] for r in rows)
    assert totals["exec_success"] == sum(r["exec_success"] for r in rows)


def test_overrides_loadable(cases):
    overrides = load_overrides()
    assert set(overrides) == {c.id for c in cases}
    # the seeded g3-01 override carries the raw severity surface form
    raw = overrides["g3-01"]
    assert raw.attribute_constraints[0].value == "fatal"
