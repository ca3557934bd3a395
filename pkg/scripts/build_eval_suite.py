#!/usr/bin/env python3
"""Author and freeze the shipped 80-case evaluation suite.

Ground-truth frames are written out explicitly here (the conventions are
the helper defaults: "near" = within 250 m, "without sidewalks" = both
sides "no", "top" = highest). Anchor coordinates are looked up in fixture
seed 1 so the frozen truths carry resolved references.

The script verifies, before writing anything, that the rule-based
interpreter plus repair reproduces every ground truth, and that the seeded
override corpus yields exactly 23 repaired cases with a 22:3
value/structural action split. Run from the repo root:

    python scripts/build_eval_suite.py
"""

import json
import os
import sys
from copy import deepcopy

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from crashquery.frames import frame_from_obj, frames_equal, frame_diff
from crashquery.geo import generate_fixture
from crashquery.harness import GROUP_SIZES
from crashquery.interpreter import rule_based_interpret
from crashquery.registry import default_registry
from crashquery.repair import (
    Gazetteer,
    default_normalization_table,
    repair,
    validate_frame,
)

OUT_DIR = os.path.join(os.path.dirname(__file__), "..", "src", "crashquery", "data", "eval")

registry = default_registry()
dataset, places = generate_fixture(1, registry=registry)
gazetteer = Gazetteer.from_dataset(dataset).merged(Gazetteer.from_places(places))
table = default_normalization_table()

_PLACES = {p["name"]: p["location"] for p in places}


def town_centroid(name):
    for rec in dataset.records("Town"):
        if rec.attributes["name"] == name:
            ring = rec.geometry.rings[0]
            return [round(sum(p[0] for p in ring[:-1]) / (len(ring) - 1), 6),
                    round(sum(p[1] for p in ring[:-1]) / (len(ring) - 1), 6)]
    raise KeyError(name)


def named_point(entity, fieldname, name):
    for rec in dataset.records(entity):
        if rec.attributes.get(fieldname) == name:
            return list(rec.geometry.coords)
    raise KeyError(f"{entity} {name!r}")


def anchor_location(entity, name):
    if entity == "School":
        return named_point("School", "name", name)
    if entity == "BusStop":
        return named_point("BusStop", "stop_name", name)
    return list(_PLACES[name])


def gt(primary, *, support=None, filt=None, scope=None, anchor=None,
       attrs=(), spatial=(), ranking=None):
    """Ground-truth frame object. attrs: (role, field, op, value);
    spatial: (relation, target_role, reference_role, distance_m|None);
    anchor: (entity, name); ranking: (order, top_n)."""
    targets = [{"entity": primary, "role": "primary"}]
    references = []
    if support:
        targets.append({"entity": support, "role": "support"})
    if filt:
        targets.append({"entity": filt, "role": "filter"})
    if scope:
        targets.append({"entity": "Town", "role": "scope"})
        references.append({"entity": "Town", "role": "scope", "name": scope,
                           "resolved_location": town_centroid(scope)})
    if anchor:
        entity, name = anchor
        targets.append({"entity": entity, "role": "anchor"})
        references.append({"entity": entity, "role": "anchor", "name": name,
                           "resolved_location": anchor_location(entity, name)})
    spatial_list = []
    for relation, target_role, reference_role, distance in spatial:
        c = {"relation": relation, "target_role": target_role,
             "reference_role": reference_role}
        if distance is not None:
            c["distance_m"] = float(distance)
        spatial_list.append(c)
    obj = {
        "supported": True,
        "targets": targets,
        "references": references,
        "spatial_constraints": spatial_list,
        "attribute_constraints": [
            {"target_role": r, "field": f, "operator": op, "value": v}
            if v is not None else {"target_role": r, "field": f, "operator": op}
            for r, f, op, v in attrs
        ],
        "relations": [],
    }
    if ranking:
        order, top_n = ranking
        obj["ranking"] = {"metric": "crash_count", "target_role": "primary",
                          "order": order, "top_n": top_n}
    return obj


PEDESTRIAN = "Collision with pedestrian"
CYCLIST = "Collision with cyclist"
FATAL = "Fatal injury"
INJURY = "Non-fatal injury"
PDO = "Property damage only (none injured)"

# (id, query, ground-truth object)
CASES = [
    # G1: entity retrieval
    ("g1-01", "show crashes in Quincy", gt("Crash", scope="Quincy")),
    ("g1-02", "show roads in Amherst", gt("Road", scope="Amherst")),
    ("g1-03", "show schools in Boston", gt("School", scope="Boston")),
    ("g1-04", "show bus stops in Quincy", gt("BusStop", scope="Quincy")),
    ("g1-05", "show crosswalks in Amherst", gt("Crosswalk", scope="Amherst")),
    ("g1-06", "show crashes", gt("Crash")),

    # G2: spatial scoping (places, buffers)
    ("g2-01", "show crashes around Amherst Center within 1km",
     gt("Crash", anchor=("Place", "Amherst Center"),
        spatial=[("within_distance", "primary", "anchor", 1000)])),
    ("g2-02", "show schools within 1km around Amherst Center",
     gt("School", anchor=("Place", "Amherst Center"),
        spatial=[("within_distance", "primary", "anchor", 1000)])),
    ("g2-03", "show crashes near Palmer St @ Brockton Ave bus stop",
     gt("Crash", anchor=("BusStop", "Palmer St @ Brockton Ave"),
        spatial=[("within_distance", "primary", "anchor", 250)])),
    ("g2-04", "show crashes around Amherst Regional High School within 500m",
     gt("Crash", anchor=("School", "Amherst Regional High School"),
        spatial=[("within_distance", "primary", "anchor", 500)])),
    ("g2-05", "show crashes around Quincy Center within half a mile",
     gt("Crash", anchor=("Place", "Quincy Center"),
        spatial=[("within_distance", "primary", "anchor", 804)])),
    ("g2-06", "show bus stops around Boston Center within 1km",
     gt("BusStop", anchor=("Place", "Boston Center"),
        spatial=[("within_distance", "primary", "anchor", 1000)])),
    ("g2-07", "show sidewalk conditions within 1km of Amherst Regional High School",
     gt("Road", anchor=("School", "Amherst Regional High School"),
        spatial=[("within_distance", "primary", "anchor", 1000)])),
    ("g2-08", "show crashes around Boston Center within 800 m",
     gt("Crash", anchor=("Place", "Boston Center"),
        spatial=[("within_distance", "primary", "anchor", 800)])),

    # G3: attribute filters
    ("g3-01", "show fatal crashes in Quincy",
     gt("Crash", scope="Quincy", attrs=[("primary", "severity", "eq", FATAL)])),
    ("g3-02", "show pedestrian crashes in Amherst",
     gt("Crash", scope="Amherst", attrs=[("primary", "first_hrmf", "eq", PEDESTRIAN)])),
    ("g3-03", "show cyclist crashes in Quincy",
     gt("Crash", scope="Quincy", attrs=[("primary", "first_hrmf", "eq", CYCLIST)])),
    ("g3-04", "show injury crashes in Boston",
     gt("Crash", scope="Boston", attrs=[("primary", "severity", "eq", INJURY)])),
    ("g3-05", "show pdo crashes in Amherst",
     gt("Crash", scope="Amherst", attrs=[("primary", "severity", "eq", PDO)])),
    ("g3-06", "show crashes with speed limit above 30 in Quincy",
     gt("Crash", scope="Quincy", attrs=[("primary", "speed_limit", "gt", 30)])),
    ("g3-07", "show roads without sidewalks in Amherst",
     gt("Road", scope="Amherst", attrs=[("primary", "sidewalk_left", "eq", "no"),
                                        ("primary", "sidewalk_right", "eq", "no")])),
    ("g3-08", "show bike crashes in Boston",
     gt("Crash", scope="Boston", attrs=[("primary", "first_hrmf", "eq", CYCLIST)])),
    ("g3-09", "show roads with speed limit above 40 in Boston",
     gt("Road", scope="Boston", attrs=[("primary", "speed_limit", "gt", 40)])),
    ("g3-10", "show crashes with speed limit below 30 in Amherst",
     gt("Crash", scope="Amherst", attrs=[("primary", "speed_limit", "lt", 30)])),
    ("g3-11", "show property damage crashes in Quincy",
     gt("Crash", scope="Quincy", attrs=[("primary", "severity", "eq", PDO)])),
    ("g3-12", "show roads with no sidewalks in Quincy",
     gt("Road", scope="Quincy", attrs=[("primary", "sidewalk_left", "eq", "no"),
                                       ("primary", "sidewalk_right", "eq", "no")])),

    # G4: temporal filters
    ("g4-01", "show crashes between 7am and 10am in Quincy",
     gt("Crash", scope="Quincy", attrs=[("primary", "crash_time", "between", [420, 600])])),
    ("g4-02", "show crashes between January 6 2025 and February 5 2025",
     gt("Crash", attrs=[("primary", "crash_date", "between", ["2025-01-06", "2025-02-05"])])),
    ("g4-03", "show crashes between 4pm and 8pm in Amherst",
     gt("Crash", scope="Amherst", attrs=[("primary", "crash_time", "between", [960, 1200])])),
    ("g4-04", "show crashes after 5pm in Boston",
     gt("Crash", scope="Boston", attrs=[("primary", "crash_time", "gt", 1020)])),
    ("g4-05", "show crashes before 9am in Quincy",
     gt("Crash", scope="Quincy", attrs=[("primary", "crash_time", "lt", 540)])),
    ("g4-06", "show crashes between March 1 2025 and March 31 2025 in Amherst",
     gt("Crash", scope="Amherst",
        attrs=[("primary", "crash_date", "between", ["2025-03-01", "2025-03-31"])])),
    ("g4-07", "show fatal crashes between 7am and 10am in Boston",
     gt("Crash", scope="Boston", attrs=[("primary", "severity", "eq", FATAL),
                                        ("primary", "crash_time", "between", [420, 600])])),

    # G5: spatial relationships between entity types
    ("g5-01", "show crashes near crosswalks in Amherst",
     gt("Crash", support="Crosswalk", scope="Amherst",
        spatial=[("within_distance", "primary", "support", 250)])),
    ("g5-02", "show crashes near bus stops in Quincy",
     gt("Crash", support="BusStop", scope="Quincy",
        spatial=[("within_distance", "primary", "support", 250)])),
    ("g5-03", "show crashes within 200 m of schools in Boston",
     gt("Crash", support="School", scope="Boston",
        spatial=[("within_distance", "primary", "support", 200)])),
    ("g5-04", "show pedestrian crashes near crosswalks in Boston",
     gt("Crash", support="Crosswalk", scope="Boston",
        attrs=[("primary", "first_hrmf", "eq", PEDESTRIAN)],
        spatial=[("within_distance", "primary", "support", 250)])),
    ("g5-05", "show crashes within 300 m of bus stops in Amherst",
     gt("Crash", support="BusStop", scope="Amherst",
        spatial=[("within_distance", "primary", "support", 300)])),

    # G6: infrastructure ranking
    ("g6-01", "top 10 schools by crashes within 500m in Quincy",
     gt("School", support="Crash", scope="Quincy",
        spatial=[("within_distance", "support", "primary", 500)],
        ranking=("highest", 10))),
    ("g6-02", "top 10 schools by crashes within 500m between 7am and 10am",
     gt("School", support="Crash",
        attrs=[("support", "crash_time", "between", [420, 600])],
        spatial=[("within_distance", "support", "primary", 500)],
        ranking=("highest", 10))),
    ("g6-03", "top 5 bus stops by pedestrian crashes within 250 m in Boston",
     gt("BusStop", support="Crash", scope="Boston",
        attrs=[("support", "first_hrmf", "eq", PEDESTRIAN)],
        spatial=[("within_distance", "support", "primary", 250)],
        ranking=("highest", 5))),
    ("g6-04", "top 10 bus stops by crashes within 250 m in Amherst",
     gt("BusStop", support="Crash", scope="Amherst",
        spatial=[("within_distance", "support", "primary", 250)],
        ranking=("highest", 10))),
    ("g6-05", "top 5 schools by cyclist crashes within 500m in Amherst",
     gt("School", support="Crash", scope="Amherst",
        attrs=[("support", "first_hrmf", "eq", CYCLIST)],
        spatial=[("within_distance", "support", "primary", 500)],
        ranking=("highest", 5))),
    ("g6-06", "top 5 crosswalks by crashes within 100 m in Quincy",
     gt("Crosswalk", support="Crash", scope="Quincy",
        spatial=[("within_distance", "support", "primary", 100)],
        ranking=("highest", 5))),
    ("g6-07", "top 10 schools by fatal crashes within 1km in Boston",
     gt("School", support="Crash", scope="Boston",
        attrs=[("support", "severity", "eq", FATAL)],
        spatial=[("within_distance", "support", "primary", 1000)],
        ranking=("highest", 10))),
    ("g6-08", "top 5 bus stops by crashes within 200 m between 4pm and 8pm in Quincy",
     gt("BusStop", support="Crash", scope="Quincy",
        attrs=[("support", "crash_time", "between", [960, 1200])],
        spatial=[("within_distance", "support", "primary", 200)],
        ranking=("highest", 5))),
    ("g6-09", "top 10 schools by crashes within half a mile in Boston",
     gt("School", support="Crash", scope="Boston",
        spatial=[("within_distance", "support", "primary", 804)],
        ranking=("highest", 10))),
    ("g6-10", "top 3 schools by injury crashes within 500m in Quincy",
     gt("School", support="Crash", scope="Quincy",
        attrs=[("support", "severity", "eq", INJURY)],
        spatial=[("within_distance", "support", "primary", 500)],
        ranking=("highest", 3))),

    # G7: town ranking
    ("g7-01", "top 20 towns by crashes",
     gt("Town", support="Crash", ranking=("highest", 20))),
    ("g7-02", "top 10 towns by crashes within 500m of schools",
     gt("Town", support="Crash", filt="School",
        spatial=[("within_distance", "support", "filter", 500)],
        ranking=("highest", 10))),
    ("g7-03", "top 3 towns by pedestrian crashes",
     gt("Town", support="Crash",
        attrs=[("support", "first_hrmf", "eq", PEDESTRIAN)],
        ranking=("highest", 3))),
    ("g7-04", "top 10 towns by crashes near bus stops with speed limit above 30",
     gt("Town", support="Crash", filt="BusStop",
        attrs=[("support", "speed_limit", "gt", 30)],
        spatial=[("within_distance", "support", "filter", 250)],
        ranking=("highest", 10))),
    ("g7-05", "top 3 towns by fatal crashes",
     gt("Town", support="Crash", attrs=[("support", "severity", "eq", FATAL)],
        ranking=("highest", 3))),
    ("g7-06", "top 3 towns by crashes between 7am and 10am",
     gt("Town", support="Crash",
        attrs=[("support", "crash_time", "between", [420, 600])],
        ranking=("highest", 3))),
    ("g7-07", "top 3 towns by crashes near crosswalks",
     gt("Town", support="Crash", filt="Crosswalk",
        spatial=[("within_distance", "support", "filter", 250)],
        ranking=("highest", 3))),
    ("g7-08", "top 2 towns by the fewest crashes",
     gt("Town", support="Crash", ranking=("lowest", 2))),

    # G8: road segment ranking
    ("g8-01", "top 10 road segments by pedestrian crashes in Amherst",
     gt("Road", support="Crash", scope="Amherst",
        attrs=[("support", "first_hrmf", "eq", PEDESTRIAN)],
        ranking=("highest", 10))),
    ("g8-02", "top 10 road segments by crashes without sidewalks in Amherst",
     gt("Road", support="Crash", scope="Amherst",
        attrs=[("support", "sidewalk_left", "eq", "no"),
               ("support", "sidewalk_right", "eq", "no")],
        ranking=("highest", 10))),
    ("g8-03", "top 20 road segments with no sidewalks on both sides and the most pedestrian crashes",
     gt("Road", support="Crash",
        attrs=[("primary", "sidewalk_left", "eq", "no"),
               ("primary", "sidewalk_right", "eq", "no"),
               ("support", "first_hrmf", "eq", PEDESTRIAN)],
        ranking=("highest", 20))),
    ("g8-04", "top 5 road segments by cyclist crashes in Quincy",
     gt("Road", support="Crash", scope="Quincy",
        attrs=[("support", "first_hrmf", "eq", CYCLIST)],
        ranking=("highest", 5))),
    ("g8-05", "top 10 road segments by crashes in Boston",
     gt("Road", support="Crash", scope="Boston", ranking=("highest", 10))),
    ("g8-06", "top 5 road segments by fatal crashes in Amherst",
     gt("Road", support="Crash", scope="Amherst",
        attrs=[("support", "severity", "eq", FATAL)],
        ranking=("highest", 5))),
    ("g8-07", "top 10 road segments by crashes between 4pm and 8pm in Quincy",
     gt("Road", support="Crash", scope="Quincy",
        attrs=[("support", "crash_time", "between", [960, 1200])],
        ranking=("highest", 10))),
    ("g8-08", "top 5 road segments with speed limit above 30 by crashes in Boston",
     gt("Road", support="Crash", scope="Boston",
        attrs=[("primary", "speed_limit", "gt", 30)],
        ranking=("highest", 5))),

    # G9: combined multi-constraint queries
    ("g9-01", "top 10 schools by pedestrian crashes within 500m in Quincy between 7am and 10am",
     gt("School", support="Crash", scope="Quincy",
        attrs=[("support", "first_hrmf", "eq", PEDESTRIAN),
               ("support", "crash_time", "between", [420, 600])],
        spatial=[("within_distance", "support", "primary", 500)],
        ranking=("highest", 10))),
    ("g9-02", "show fatal pedestrian crashes in Quincy",
     gt("Crash", scope="Quincy", attrs=[("primary", "severity", "eq", FATAL),
                                        ("primary", "first_hrmf", "eq", PEDESTRIAN)])),
    ("g9-03", "show pedestrian crashes around Amherst Regional High School within 500m",
     gt("Crash", anchor=("School", "Amherst Regional High School"),
        attrs=[("primary", "first_hrmf", "eq", PEDESTRIAN)],
        spatial=[("within_distance", "primary", "anchor", 500)])),
    ("g9-04", "show fatal crashes between 7am and 10am near bus stops in Quincy",
     gt("Crash", support="BusStop", scope="Quincy",
        attrs=[("primary", "severity", "eq", FATAL),
               ("primary", "crash_time", "between", [420, 600])],
        spatial=[("within_distance", "primary", "support", 250)])),
    ("g9-05", "top 10 towns by pedestrian crashes between 4pm and 8pm",
     gt("Town", support="Crash",
        attrs=[("support", "first_hrmf", "eq", PEDESTRIAN),
               ("support", "crash_time", "between", [960, 1200])],
        ranking=("highest", 10))),
    ("g9-06", "top 5 schools by crashes within 500m between January 6 2025 and February 5 2025 in Amherst",
     gt("School", support="Crash", scope="Amherst",
        attrs=[("support", "crash_date", "between", ["2025-01-06", "2025-02-05"])],
        spatial=[("within_distance", "support", "primary", 500)],
        ranking=("highest", 5))),
    ("g9-07", "show cyclist crashes near crosswalks in Quincy",
     gt("Crash", support="Crosswalk", scope="Quincy",
        attrs=[("primary", "first_hrmf", "eq", CYCLIST)],
        spatial=[("within_distance", "primary", "support", 250)])),
    ("g9-08", "top 5 road segments by pedestrian crashes without sidewalks in Boston",
     gt("Road", support="Crash", scope="Boston",
        attrs=[("support", "first_hrmf", "eq", PEDESTRIAN),
               ("support", "sidewalk_left", "eq", "no"),
               ("support", "sidewalk_right", "eq", "no")],
        ranking=("highest", 5))),
    ("g9-09", "show injury crashes with speed limit above 30 in Amherst",
     gt("Crash", scope="Amherst", attrs=[("primary", "severity", "eq", INJURY),
                                         ("primary", "speed_limit", "gt", 30)])),
    ("g9-10", "top 3 towns by fatal crashes near schools",
     gt("Town", support="Crash", filt="School",
        attrs=[("support", "severity", "eq", FATAL)],
        spatial=[("within_distance", "support", "filter", 250)],
        ranking=("highest", 3))),
    ("g9-11", "show pdo crashes between 9am and 5pm in Boston",
     gt("Crash", scope="Boston", attrs=[("primary", "severity", "eq", PDO),
                                        ("primary", "crash_time", "between", [540, 1020])])),
    ("g9-12", "top 10 bus stops by pedestrian crashes within 250 m in Quincy",
     gt("BusStop", support="Crash", scope="Quincy",
        attrs=[("support", "first_hrmf", "eq", PEDESTRIAN)],
        spatial=[("within_distance", "support", "primary", 250)],
        ranking=("highest", 10))),
    ("g9-13", "show fatal crashes around Quincy Center within 1km",
     gt("Crash", anchor=("Place", "Quincy Center"),
        attrs=[("primary", "severity", "eq", FATAL)],
        spatial=[("within_distance", "primary", "anchor", 1000)])),
    ("g9-14", "top 5 schools by injury crashes within 500m between 7am and 10am in Boston",
     gt("School", support="Crash", scope="Boston",
        attrs=[("support", "severity", "eq", INJURY),
               ("support", "crash_time", "between", [420, 600])],
        spatial=[("within_distance", "support", "primary", 500)],
        ranking=("highest", 5))),
    ("g9-15", "show pedestrian crashes with speed limit above 30 near crosswalks in Amherst",
     gt("Crash", support="Crosswalk", scope="Amherst",
        attrs=[("primary", "first_hrmf", "eq", PEDESTRIAN),
               ("primary", "speed_limit", "gt", 30)],
        spatial=[("within_distance", "primary", "support", 250)])),
    ("g9-16", "top 2 towns by the fewest pedestrian crashes",
     gt("Town", support="Crash",
        attrs=[("support", "first_hrmf", "eq", PEDESTRIAN)],
        ranking=("lowest", 2))),
]


# ---------------------------------------------------------------------------
# seeded override corpus (the repair-rate reproduction)
#
# 23 cases get raw frames mutated away from ground truth: 22 value-level
# normalizations plus 3 structural corrections (25 actions total, two
# cases carrying two actions each). All other cases get their ground truth
# verbatim, so nothing else is flagged repaired. References stay resolved.

def set_attr_raw(obj, fieldname, raw):
    for c in obj["attribute_constraints"]:
        if c["field"] == fieldname:
            c["value"] = raw
            return obj
    raise KeyError(fieldname)


def set_distance_raw(obj, raw):
    obj["spatial_constraints"][0]["distance_m"] = raw
    return obj


def set_order_raw(obj, raw):
    obj["ranking"]["order"] = raw
    return obj


def dup_attr(obj):
    obj["attribute_constraints"].append(deepcopy(obj["attribute_constraints"][0]))
    return obj


def add_spurious_anchor(obj):
    obj["targets"].append({"entity": "Place", "role": "anchor"})
    obj["references"].append({"entity": "Place", "role": "anchor",
                              "name": "Amherst Center",
                              "resolved_location": list(_PLACES["Amherst Center"])})
    return obj


OVERRIDE_MUTATIONS = {
    # G3: 3 value normalizations
    "g3-01": [lambda o: set_attr_raw(o, "severity", "fatal")],
    "g3-02": [lambda o: set_attr_raw(o, "first_hrmf", "pedestrian")],
    "g3-03": [lambda o: set_attr_raw(o, "first_hrmf", "cyclists")],
    # G4: 1 value normalization (the printed time-range phrase)
    "g4-03": [lambda o: set_attr_raw(o, "crash_time", "between 4pm and 8pm")],
    # G5: 2 value + 1 structural (spurious anchor removal)
    "g5-01": [add_spurious_anchor],
    "g5-03": [lambda o: set_distance_raw(o, "200 m")],
    "g5-04": [lambda o: set_attr_raw(o, "first_hrmf", "pedestrians")],
    # G6: 2 value normalizations
    "g6-02": [lambda o: set_attr_raw(o, "crash_time", ["7am", "10am"])],
    "g6-09": [lambda o: set_distance_raw(o, "half a mile")],
    # G7: 2 value normalizations
    "g7-03": [lambda o: set_attr_raw(o, "first_hrmf", "pedestrian")],
    "g7-08": [lambda o: set_order_raw(o, "fewest")],
    # G8: 3 value normalizations
    "g8-03": [lambda o: set_order_raw(o, "most")],
    "g8-04": [lambda o: set_attr_raw(o, "first_hrmf", "cyclist")],
    "g8-06": [lambda o: set_attr_raw(o, "severity", "fatal")],
    # G9: 9 repaired cases, 9 value + 2 structural actions
    "g9-01": [dup_attr, add_spurious_anchor],                      # 2 structural
    "g9-02": [lambda o: set_attr_raw(o, "severity", "fatal")],
    "g9-03": [lambda o: set_attr_raw(o, "first_hrmf", "pedestrian")],
    "g9-05": [lambda o: set_attr_raw(o, "crash_time", ["4pm", "8pm"])],
    "g9-07": [lambda o: set_attr_raw(o, "first_hrmf", "bike")],
    "g9-11": [lambda o: set_attr_raw(o, "severity", "pdo")],
    "g9-12": [lambda o: set_attr_raw(o, "first_hrmf", "pedestrians")],
    "g9-13": [lambda o: set_attr_raw(o, "severity", "fatal"),     # 2 value actions
              lambda o: set_distance_raw(o, "1km")],
    "g9-14": [lambda o: set_attr_raw(o, "severity", "injury")],
}

EXPECTED_REPAIRED_BY_GROUP = {"G1": 0, "G2": 0, "G3": 3, "G4": 1, "G5": 3,
                              "G6": 2, "G7": 2, "G8": 3, "G9": 9}


def main():
    by_group = {}
    for cid, _, _ in CASES:
        group = "G" + cid[1]
        by_group[group] = by_group.get(group, 0) + 1
    assert by_group == GROUP_SIZES, f"group sizes wrong: {by_group}"
    assert len(CASES) == 80

    failures = []
    case_objs = []
    for cid, query, truth_obj in CASES:
        group = "G" + cid[1]
        truth = frame_from_obj(truth_obj)
        violations = validate_frame(registry, truth)
        if violations:
            failures.append(f"{cid}: ground truth invalid: {violations}")
            continue
        raw = rule_based_interpret(query)
        if not raw.supported:
            failures.append(f"{cid}: grammar cannot parse {query!r}")
            continue
        fixed, report = repair(registry, table, gazetteer, raw)
        if not frames_equal(fixed, truth):
            failures.append(f"{cid}: pipeline != truth: {frame_diff(fixed, truth)[:4]}")
            continue
        case_objs.append({
            "id": cid, "group": group, "query": query,
            "expect_repair": report.repaired,
            "ground_truth": truth_obj,
        })

    if failures:
        print(f"{len(failures)} case failures:")
        for f in failures:
            print("  " + f)
        sys.exit(1)

    # overrides: verify accounting before writing anything
    value_actions = structural_actions = repaired_cases = 0
    override_objs = {}
    for cid, query, truth_obj in CASES:
        raw_obj = deepcopy(truth_obj)
        for mutate in OVERRIDE_MUTATIONS.get(cid, []):
            raw_obj = mutate(raw_obj)
        override_objs[cid] = raw_obj
        fixed, report = repair(registry, table, gazetteer, frame_from_obj(raw_obj))
        truth = frame_from_obj(truth_obj)
        if not frames_equal(fixed, truth):
            failures.append(f"{cid}: override does not repair to truth: "
                            f"{frame_diff(fixed, truth)[:4]}")
        counts = report.counts_by_kind()
        if counts.get("anchor_resolution"):
            failures.append(f"{cid}: override triggered anchor resolution")
        value_actions += counts.get("value_normalization", 0)
        structural_actions += counts.get("structural", 0)
        repaired_cases += 1 if report.repaired else 0
        expected = 1 if cid in OVERRIDE_MUTATIONS else 0
        if bool(expected) != report.repaired:
            failures.append(f"{cid}: override repaired={report.repaired}, wanted {bool(expected)}")

    if failures:
        print(f"{len(failures)} override failures:")
        for f in failures:
            print("  " + f)
        sys.exit(1)

    assert repaired_cases == 23, repaired_cases
    assert value_actions == 22, value_actions
    assert structural_actions == 3, structural_actions

    cases_dir = os.path.join(OUT_DIR, "cases")
    overrides_dir = os.path.join(OUT_DIR, "overrides")
    os.makedirs(cases_dir, exist_ok=True)
    os.makedirs(overrides_dir, exist_ok=True)
    for obj in case_objs:
        with open(os.path.join(cases_dir, f"{obj['id']}.json"), "w", encoding="utf-8") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
    for cid, raw_obj in override_objs.items():
        with open(os.path.join(overrides_dir, f"{cid}.json"), "w", encoding="utf-8") as fh:
            json.dump(raw_obj, fh, indent=2, sort_keys=True)
            fh.write("\n")

    print(f"wrote {len(case_objs)} cases and {len(override_objs)} overrides to {OUT_DIR}")
    print(f"override accounting: repaired={repaired_cases}, "
          f"value={value_actions}, structural={structural_actions}")


if __name__ == "__main__":
    main()
