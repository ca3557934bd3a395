import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from crashquery.frames import (
    FrameParseError,
    FrameShapeError,
    SemanticFrame,
    canonicalize,
    frame_diff,
    frame_to_json,
    frame_to_obj,
    frames_equal,
    parse_frame,
)

from .sample_frames import RANKING_FRAME_JSON, RANKING_FRAME_OBJ


def test_parse_ranking_frame():
    f = parse_frame(RANKING_FRAME_JSON)
    assert f.supported
    assert len(f.targets) == 3
    assert len(f.references) == 1
    assert f.references[0].name == "Boston"
    assert len(f.spatial_constraints) == 1
    assert f.spatial_constraints[0].distance_m == 500.0
    assert len(f.attribute_constraints) == 1
    assert f.attribute_constraints[0].value == "Collision with pedestrian"
    assert f.ranking is not None and f.ranking.top_n == 5


def test_parse_unsupported_frame():
    f = parse_frame('{"supported": false}')
    assert not f.supported
    assert f.targets == () and f.references == ()
    assert f.ranking is None


def test_parse_bare_retrieval_frame():
    f = parse_frame('{"supported": true, "targets": [{"entity": "Crash", "role": "primary"}]}')
    assert len(f.targets) == 1
    assert f.spatial_constraints == ()


def test_parse_rejects_malformed_json():
    with pytest.raises(FrameParseError):
        parse_frame("{nope")


def test_parse_rejects_unknown_top_level_key():
    with pytest.raises(FrameShapeError):
        parse_frame('{"supported": true, "intent": "x"}')


def test_parse_rejects_unknown_nested_key():
    with pytest.raises(FrameShapeError):
        parse_frame('{"targets": [{"entity": "Crash", "role": "primary", "why": 1}]}')


def test_parse_preserves_raw_values_for_repair():
    f = parse_frame(json.dumps({
        "supported": True,
        "targets": [{"entity": "Crash", "role": "primary"}],
        "spatial_constraints": [{"relation": "within_distance", "target_role": "primary",
                                 "reference_role": "anchor", "distance_m": "1km"}],
        "attribute_constraints": [{"target_role": "primary", "field": "severity",
                                   "operator": "eq", "value": "fatal"}],
    }))
    assert f.spatial_constraints[0].distance_m == "1km"
    assert f.attribute_constraints[0].value == "fatal"


def test_serialize_round_trip():
    f = parse_frame(RANKING_FRAME_JSON)
    again = parse_frame(frame_to_json(f))
    assert again == f


def test_wire_keys_exact():
    f = parse_frame(RANKING_FRAME_JSON)
    obj = frame_to_obj(f)
    assert set(obj) == {"supported", "targets", "references", "spatial_constraints",
                        "attribute_constraints", "relations", "ranking"}
    assert set(obj["spatial_constraints"][0]) == {"relation", "target_role",
                                                  "reference_role", "distance_m"}
    assert set(obj["ranking"]) == {"metric", "target_role", "order", "top_n"}


def test_canonicalize_order_insensitive():
    shuffled = dict(RANKING_FRAME_OBJ)
    shuffled["targets"] = list(reversed(RANKING_FRAME_OBJ["targets"]))
    a = parse_frame(RANKING_FRAME_JSON)
    b = parse_frame(json.dumps(shuffled))
    assert canonicalize(a) == canonicalize(b)
    assert frame_to_json(canonicalize(a)) == frame_to_json(canonicalize(b))


def test_canonicalize_numeric_normalization():
    base = json.loads(RANKING_FRAME_JSON)
    base["spatial_constraints"][0]["distance_m"] = 500
    a = parse_frame(json.dumps(base))
    b = parse_frame(RANKING_FRAME_JSON)  # 500.0
    assert frames_equal(a, b)


def test_canonicalize_idempotent_on_ranking_frame():
    f = parse_frame(RANKING_FRAME_JSON)
    once = canonicalize(f)
    assert canonicalize(once) == once


def test_frames_equal_distance_differs():
    base = json.loads(RANKING_FRAME_JSON)
    base["spatial_constraints"][0]["distance_m"] = 1000.0
    assert not frames_equal(parse_frame(json.dumps(base)), parse_frame(RANKING_FRAME_JSON))


def test_frame_diff_pinpoints_field():
    base = json.loads(RANKING_FRAME_JSON)
    base["ranking"]["top_n"] = 7
    diffs = frame_diff(parse_frame(json.dumps(base)), parse_frame(RANKING_FRAME_JSON))
    assert any("ranking.top_n" in d for d in diffs)


def test_reference_resolution_fields():
    f = parse_frame(json.dumps({
        "supported": True,
        "targets": [{"entity": "School", "role": "anchor"}],
        "references": [{"entity": "School", "role": "anchor", "name": "X",
                        "resolved_location": [-72.5, 42.4]}],
    }))
    assert f.references[0].resolved_location == (-72.5, 42.4)
    f2 = parse_frame(json.dumps({
        "supported": True,
        "targets": [{"entity": "School", "role": "anchor"}],
        "references": [{"entity": "School", "role": "anchor", "name": "X",
                        "candidates": [{"name": "X1", "location": [-72.5, 42.4]},
                                       {"name": "X2", "location": [-72.6, 42.5]}]}],
    }))
    assert len(f2.references[0].candidates) == 2


# ---------------------------------------------------------------------------
# property tests

_roles = st.sampled_from(["primary", "support", "scope", "anchor", "filter"])
_entities = st.sampled_from(["Crash", "Road", "School", "BusStop", "Crosswalk", "Town"])


@st.composite
def frame_objects(draw):
    n_targets = draw(st.integers(0, 4))
    targets = [{"entity": draw(_entities), "role": draw(_roles)} for _ in range(n_targets)]
    n_attr = draw(st.integers(0, 3))
    attrs = [
        {"target_role": draw(_roles), "field": draw(st.sampled_from(["severity", "speed_limit"])),
         "operator": draw(st.sampled_from(["eq", "gt", "between"])),
         "value": draw(st.one_of(
             st.text(max_size=8),
             st.integers(-100, 4000),
             st.floats(-1000, 4000, allow_nan=False),
             st.lists(st.integers(0, 1440), min_size=2, max_size=2),
         ))}
        for _ in range(n_attr)
    ]
    n_spatial = draw(st.integers(0, 2))
    spatial = [
        {"relation": draw(st.sampled_from(["within_distance", "intersects", "contains", "nearest_to"])),
         "target_role": draw(_roles), "reference_role": draw(_roles),
         "distance_m": draw(st.floats(0.5, 10000, allow_nan=False))}
        for _ in range(n_spatial)
    ]
    return {
        "supported": True,
        "targets": targets,
        "references": [],
        "spatial_constraints": spatial,
        "attribute_constraints": attrs,
        "relations": [],
    }


@given(frame_objects())
@settings(max_examples=60, deadline=None)
def test_parse_serialize_round_trip_property(obj):
    f = parse_frame(json.dumps(obj))
    assert parse_frame(frame_to_json(f)) == f


@given(frame_objects(), st.randoms())
@settings(max_examples=60, deadline=None)
def test_canonicalize_permutation_invariant_property(obj, rnd):
    f = parse_frame(json.dumps(obj))
    shuffled = dict(obj)
    for key in ("targets", "spatial_constraints", "attribute_constraints"):
        items = list(obj[key])
        rnd.shuffle(items)
        shuffled[key] = items
    g = parse_frame(json.dumps(shuffled))
    assert frame_to_json(canonicalize(f)) == frame_to_json(canonicalize(g))
    once = canonicalize(f)
    assert canonicalize(once) == once
