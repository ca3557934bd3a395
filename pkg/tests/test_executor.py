import json

import numpy as np
import pytest

from crashquery.executor import (
    ExecutionTypeError,
    eval_attribute_filter,
    eval_rank,
    eval_relation_snap,
    eval_spatial_match,
    execute,
)
from crashquery.frames import (
    AttributeConstraint,
    RankingSpec,
    RelationLink,
    SpatialConstraint,
    frame_from_obj,
)
from crashquery.geo import Dataset, EntityRecord, point, polyline
from crashquery.geo.store import ExecutionDataError
from crashquery.graph import compile_frame

from .frame_gen import random_validated_frame
from .reference_eval import ref_distance_m, ref_execute
from .sample_frames import PROXIMITY_FRAME_OBJ, RANKING_FRAME_OBJ


def _resolved(obj, dataset):
    obj = json.loads(json.dumps(obj))
    towns = {r.attributes["name"]: r for r in dataset.records("Town")}
    for ref in obj.get("references", []):
        if ref.get("resolved_location") is None and ref["entity"] == "Town":
            ring = towns[ref["name"]].geometry.rings[0]
            ref["resolved_location"] = [
                round(sum(p[0] for p in ring[:-1]) / (len(ring) - 1), 6),
                round(sum(p[1] for p in ring[:-1]) / (len(ring) - 1), 6),
            ]
    return frame_from_obj(obj)


def _ids(records):
    return sorted(r.id for r in records)


# -- whole-graph execution vs the brute-force oracle ---------------------------

def test_proximity_query_matches_oracle(registry, dataset):
    frame = _resolved(PROXIMITY_FRAME_OBJ, dataset)
    graph = compile_frame(frame, registry)
    result = execute(graph, dataset, frame_echo=frame)
    truth = ref_execute(frame, dataset)
    assert _ids(result.role_records["primary"]) == truth["role_records"]["primary"]
    assert _ids(result.role_records["support"]) == truth["role_records"]["support"]
    assert result.ranking_rows is None
    assert len(result.provenance) == len(graph.nodes)
    assert result.dataset_version == dataset.version
    # non-trivial: some crashes near schools in Quincy, fewer than all
    n_primary = len(result.role_records["primary"])
    assert 0 < n_primary < len(dataset.records("Crash"))


def test_ranking_query_matches_oracle(registry, dataset):
    frame = _resolved(RANKING_FRAME_OBJ, dataset)
    graph = compile_frame(frame, registry)
    result = execute(graph, dataset, frame_echo=frame)
    truth = ref_execute(frame, dataset)
    assert result.ranking_rows is not None
    assert [(r.record_id, r.value) for r in result.ranking_rows] == truth["ranking"]
    assert len(result.ranking_rows) == 5


def test_bare_retrieval_returns_all_records(registry, dataset):
    frame = frame_from_obj({"supported": True,
                            "targets": [{"entity": "Crash", "role": "primary"}]})
    result = execute(compile_frame(frame, registry), dataset)
    assert _ids(result.role_records["primary"]) == _ids(dataset.records("Crash"))


def test_empty_ranking_is_success(registry, dataset):
    obj = json.loads(json.dumps(RANKING_FRAME_OBJ))
    # a filter nothing satisfies: fatal pedestrian crashes at an impossible hour range
    obj["attribute_constraints"].append({
        "target_role": "support", "field": "crash_time", "operator": "between",
        "value": [1, 0],
    })
    del obj["attribute_constraints"][0]
    obj["attribute_constraints"].append({
        "target_role": "support", "field": "first_hrmf", "operator": "eq",
        "value": "Collision with pedestrian",
    })
    frame = _resolved(obj, dataset)
    result = execute(compile_frame(frame, registry), dataset)
    assert result.ranking_rows is not None
    assert all(row.value == 0 for row in result.ranking_rows)


def test_missing_entity_raises(registry, dataset):
    ds = Dataset(registry)  # nothing loaded
    frame = frame_from_obj({"supported": True,
                            "targets": [{"entity": "Crash", "role": "primary"}]})
    with pytest.raises(ExecutionDataError):
        execute(compile_frame(frame, registry), ds)


def test_missing_scope_name_raises(registry, dataset):
    obj = json.loads(json.dumps(PROXIMITY_FRAME_OBJ))
    obj["references"][0]["name"] = "Nowhere"
    obj["references"][0]["resolved_location"] = [-72.5, 42.4]
    with pytest.raises(ExecutionDataError):
        execute(compile_frame(frame_from_obj(obj), registry), dataset)


def test_execution_deterministic(registry, dataset):
    frame = _resolved(RANKING_FRAME_OBJ, dataset)
    graph = compile_frame(frame, registry)
    a = execute(graph, dataset)
    b = execute(graph, dataset)
    assert _ids(a.role_records["support"]) == _ids(b.role_records["support"])
    assert [(r.record_id, r.value) for r in a.ranking_rows] == \
           [(r.record_id, r.value) for r in b.ranking_rows]


def test_random_frames_match_oracle(registry, dataset):
    rng = np.random.default_rng(123)
    for _ in range(12):
        frame = random_validated_frame(rng, dataset, registry)
        graph = compile_frame(frame, registry)
        result = execute(graph, dataset, frame_echo=frame)
        truth = ref_execute(frame, dataset)
        for role, ids in truth["role_records"].items():
            assert _ids(result.role_records[role]) == ids, frame
        if frame.ranking is not None:
            assert [(r.record_id, r.value) for r in result.ranking_rows] == truth["ranking"], frame


# -- eval_spatial_match ----------------------------------------------------------

def _pt_rec(rid, lon, lat, entity="Crash"):
    return EntityRecord(rid, entity, point(lon, lat), {})


def test_within_distance_matches_brute_force(dataset):
    crashes = dataset.records("Crash")
    school = dataset.records("School")[3]
    constraint = SpatialConstraint("within_distance", "primary", "support", 500.0)
    got = eval_spatial_match(constraint, crashes, [school])
    expected = [c.id for c in crashes if ref_distance_m(c.geometry, school.geometry) <= 500.0]
    assert _ids(got) == sorted(expected)


def test_within_distance_zero_only_coincident():
    a = _pt_rec("a", -72.5, 42.4)
    b = _pt_rec("b", -72.5, 42.4)
    c = _pt_rec("c", -72.501, 42.4)
    constraint = SpatialConstraint("within_distance", "primary", "support", 0.0)
    got = eval_spatial_match(constraint, [a, c], [b])
    assert _ids(got) == ["a"]


def test_nearest_tie_breaks_smaller_id():
    # 2^-13 degree offsets are exactly representable, so both distances are
    # bit-identical and the tie is real
    off = 2.0 ** -13
    ref = _pt_rec("r", -72.5, 42.5, "School")
    t1 = _pt_rec("t1", -72.5, 42.5 + off)
    t2 = _pt_rec("t2", -72.5, 42.5 - off)
    constraint = SpatialConstraint("nearest_to", "primary", "support")
    got = eval_spatial_match(constraint, [t1, t2], [ref])
    assert _ids(got) == ["t1"]


def test_contains_point_sets_is_type_error():
    constraint = SpatialConstraint("contains", "primary", "support")
    with pytest.raises(ExecutionTypeError):
        eval_spatial_match(constraint, [_pt_rec("a", -72.5, 42.4)],
                           [_pt_rec("b", -72.5, 42.4, "School")])


def test_monotonicity_in_distance(dataset):
    crashes = dataset.records("Crash")
    stops = dataset.records("BusStop")[:5]
    previous: set = set()
    for d in (50.0, 150.0, 400.0, 900.0):
        constraint = SpatialConstraint("within_distance", "primary", "support", d)
        got = {r.id for r in eval_spatial_match(constraint, crashes, stops)}
        assert previous <= got
        previous = got


# -- eval_attribute_filter ---------------------------------------------------------

def _attr_rec(rid, **attrs):
    return EntityRecord(rid, "Crash", point(-72.5, 42.4), attrs)


def test_attribute_operators():
    recs = [
        _attr_rec("a", severity="Fatal injury", crash_time=960, speed_limit=40),
        _attr_rec("b", severity="Non-fatal injury", crash_time=1200, speed_limit=None),
        _attr_rec("c", severity="Fatal injury", crash_time=1201, speed_limit=25),
    ]
    eq = AttributeConstraint("primary", "severity", "eq", "Fatal injury")
    assert _ids(eval_attribute_filter(eq, recs)) == ["a", "c"]
    between = AttributeConstraint("primary", "crash_time", "between", (960, 1200))
    assert _ids(eval_attribute_filter(between, recs)) == ["a", "b"]
    gt = AttributeConstraint("primary", "speed_limit", "gt", 30)
    assert _ids(eval_attribute_filter(gt, recs)) == ["a"]  # null excluded
    isnull = AttributeConstraint("primary", "speed_limit", "is_null", None)
    assert _ids(eval_attribute_filter(isnull, recs)) == ["b"]
    inop = AttributeConstraint("primary", "severity", "in",
                               ("Fatal injury", "Non-fatal injury"))
    assert len(eval_attribute_filter(inop, recs)) == 3


def test_incompatible_comparison_is_type_error():
    recs = [_attr_rec("a", severity="Fatal injury")]
    bad = AttributeConstraint("primary", "severity", "gt", 30)
    with pytest.raises(ExecutionTypeError):
        eval_attribute_filter(bad, recs)


def test_date_ordering_is_lexicographic_iso():
    recs = [_attr_rec("a", crash_date="2025-01-06"), _attr_rec("b", crash_date="2025-02-05"),
            _attr_rec("c", crash_date="2025-11-30")]
    between = AttributeConstraint("primary", "crash_date", "between",
                                  ("2025-01-06", "2025-02-05"))
    assert _ids(eval_attribute_filter(between, recs)) == ["a", "b"]


# -- eval_relation_snap --------------------------------------------------------------

def _road_rec(rid, verts):
    return EntityRecord(rid, "Road", polyline(verts), {})


def test_snap_within_tolerance():
    road = _road_rec("road-1", [(-72.51, 42.40), (-72.49, 42.40)])
    crash = _pt_rec("c1", -72.50, 42.40004)  # ~4.5 m north of the line
    link = RelationLink("snap_to_road", "support", "primary", 20.0)
    assert eval_relation_snap(link, [crash], [road]) == {"c1": "road-1"}
    d = ref_distance_m(crash.geometry, road.geometry)
    assert d < 20.0


def test_snap_beyond_tolerance_unassigned():
    road = _road_rec("road-1", [(-72.51, 42.40), (-72.49, 42.40)])
    crash = _pt_rec("c1", -72.50, 42.4003)  # ~33 m away
    link = RelationLink("snap_to_road", "support", "primary", 20.0)
    assert eval_relation_snap(link, [crash], [road]) == {}


def test_snap_equidistant_takes_lower_id():
    off = 2.0 ** -13  # ~13.6 m, exactly representable either side
    r1 = _road_rec("road-1", [(-72.51, 42.5 - off), (-72.49, 42.5 - off)])
    r2 = _road_rec("road-2", [(-72.51, 42.5 + off), (-72.49, 42.5 + off)])
    crash = _pt_rec("c1", -72.50, 42.5)  # exactly midway
    link = RelationLink("snap_to_road", "support", "primary", 20.0)
    assert eval_relation_snap(link, [crash], [r1, r2]) == {"c1": "road-1"}


# -- eval_rank -------------------------------------------------------------------------

def test_rank_orders_and_truncates():
    primaries = [_pt_rec(f"s{i}", -72.5, 42.4, "School") for i in range(4)]
    counts = {"s0": 2, "s1": 9, "s2": 0, "s3": 9}
    spec = RankingSpec("crash_count", "primary", "highest", 3)
    rows = eval_rank(spec, primaries, counts)
    assert [(r.record_id, r.value) for r in rows] == [("s1", 9), ("s3", 9), ("s0", 2)]
    lowest = eval_rank(RankingSpec("crash_count", "primary", "lowest", 2), primaries, counts)
    assert [(r.record_id, r.value) for r in lowest] == [("s2", 0), ("s0", 2)]


def test_rank_top_n_larger_than_population():
    primaries = [_pt_rec("s0", -72.5, 42.4, "School")]
    rows = eval_rank(RankingSpec("crash_count", "primary", "highest", 10), primaries, {"s0": 1})
    assert len(rows) == 1


def test_count_consistency_ranking(registry, dataset):
    """Each ranking row's value equals the brute-force per-school count."""
    frame = _resolved(RANKING_FRAME_OBJ, dataset)
    result = execute(compile_frame(frame, registry), dataset)
    schools = {r.id: r for r in dataset.records("School")}
    supports = result.role_records["support"]
    for row in result.ranking_rows:
        school = schools[row.record_id]
        count = sum(1 for s in supports
                    if ref_distance_m(s.geometry, school.geometry) <= 500.0)
        assert count == row.value
