"""Deterministic synthetic municipality generator.

Produces a desk-scale dataset with the shape of a real deployment: town
polygons, road grids with speed/sidewalk attributes, schools, bus stops,
crosswalks, and crash points clustered along roads. Identical seed
and spec always yield an identical dataset. Town and landmark names reuse
the query vocabulary of the shipped evaluation suite ("Quincy", "Amherst",
"Boston", "Amherst Center", ...), so example queries resolve out of the box.
"""

from __future__ import annotations

import json
import math

import numpy as np

from ..registry import SchemaRegistry, default_registry
from .geometry import Geometry, point, polygon, polyline
from .store import Dataset, EntityRecord, point_in_polygon

DEFAULT_COUNTS = {
    "towns": 3,
    "roads": 36,
    "schools": 18,
    "bus_stops": 21,
    "crosswalks": 30,
    "crashes": 800,
}

_TOWN_NAMES = ("Quincy", "Amherst", "Boston", "Springfield")

# school name templates per town slot; slot 4 is the deliberate duplicate
# ("Main School" in both Quincy and Amherst) exercising anchor ambiguity
_SCHOOL_TEMPLATES = (
    "{town} High School",
    "{town} Elementary School",
    "{town} Middle School",
    "{town} Academy",
    "Main School",
    "{town} Technical School",
    "{town} Charter School",
    "{town} Montessori School",
)

_STREETS = ("Palmer St", "Main St", "Brockton Ave", "Pleasant St", "Oak St",
            "Triangle St", "Lincoln Ave", "College St", "Mill Rd", "East Ave")

_SEVERITIES = ("Property damage only (none injured)", "Non-fatal injury", "Fatal injury", "Unknown")
_SEVERITY_W = (0.55, 0.35, 0.06, 0.04)

_HRMF_COMMON = (
    "Collision with motor vehicle in traffic",
    "Collision with pedestrian",
    "Collision with cyclist",
    "Collision with fixed object",
    "Collision with animal",
    "Collision with parked motor vehicle",
    "Ran off road",
    "Unknown",
)
_HRMF_W = (0.40, 0.14, 0.10, 0.14, 0.05, 0.08, 0.05, 0.04)

_JUNCTIONS = ("At intersection", "Not at intersection", "Driveway", "Roundabout", "Ramp", "Unknown")
_JUNCTION_W = (0.38, 0.42, 0.08, 0.04, 0.03, 0.05)

_SIDEWALK = ("yes", "no", "unknown")
_SIDEWALK_W = (0.45, 0.40, 0.15)

_SPEEDS = (20, 25, 30, 35, 40, 45, 50)

# town grid origin (lon, lat) and per-town footprint in degrees
_ORIGIN = (-72.60, 42.35)
_TOWN_W = 0.042
_TOWN_H = 0.034
_TOWN_GAP = 0.006


def generate_fixture(seed: int, counts: dict | None = None,
                     registry: SchemaRegistry | None = None) -> tuple[Dataset, list[dict]]:
    """Build (dataset, gazetteer place entries) for the given seed and counts."""
    spec = dict(DEFAULT_COUNTS)
    if counts:
        unknown = set(counts) - set(DEFAULT_COUNTS)
        if unknown:
            raise ValueError(f"unknown fixture count keys: {sorted(unknown)}")
        spec.update(counts)
    n_towns = spec["towns"]
    if not (2 <= n_towns <= 4):
        raise ValueError("fixture supports 2-4 towns")
    registry = registry or default_registry()
    rng = np.random.default_rng(seed)

    towns = _make_towns(rng, n_towns)
    roads = _make_roads(rng, towns, spec["roads"])
    schools = _make_schools(rng, towns, spec["schools"])
    bus_stops = _make_bus_stops(rng, towns, spec["bus_stops"])
    crosswalks = _make_crosswalks(rng, roads, spec["crosswalks"])
    crashes = _make_crashes(rng, towns, roads, spec["crashes"])

    ds = Dataset(registry)
    ds.install_records("Town", towns)
    ds.install_records("Road", roads)
    ds.install_records("School", schools)
    ds.install_records("BusStop", bus_stops)
    ds.install_records("Crosswalk", crosswalks)
    ds.install_records("Crash", crashes)

    places = []
    for i, town in enumerate(towns):
        cx, cy = _poly_center(town.geometry)
        places.append({"name": f"{town.attributes['name']} Center", "location": [cx, cy]})
    return ds, places


def write_fixture_dir(path: str, seed: int, counts: dict | None = None) -> Dataset:
    """Generate and persist a fixture data directory (plus places.json)."""
    import os

    ds, places = generate_fixture(seed, counts)
    ds.save_dir(path)
    with open(os.path.join(path, "places.json"), "w", encoding="utf-8") as fh:
        json.dump(places, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return ds


# ---------------------------------------------------------------------------

def _r6(x: float) -> float:
    return round(float(x), 6)


def _town_box(i: int) -> tuple[float, float, float, float]:
    x0 = _ORIGIN[0] + i * (_TOWN_W + _TOWN_GAP)
    y0 = _ORIGIN[1]
    return x0, y0, x0 + _TOWN_W, y0 + _TOWN_H


def _make_towns(rng, n_towns: int) -> list[EntityRecord]:
    towns = []
    for i in range(n_towns):
        x0, y0, x1, y1 = _town_box(i)
        # octagon: rectangle with jittered chamfered corners, convex
        cw = rng.uniform(0.15, 0.30) * (x1 - x0)
        ch = rng.uniform(0.15, 0.30) * (y1 - y0)
        ring = [
            (x0 + cw, y0), (x1 - cw, y0), (x1, y0 + ch), (x1, y1 - ch),
            (x1 - cw, y1), (x0 + cw, y1), (x0, y1 - ch), (x0, y0 + ch),
        ]
        ring = [(_r6(x), _r6(y)) for x, y in ring]
        ring.append(ring[0])
        towns.append(EntityRecord(
            id=f"town-{i:04d}",
            entity="Town",
            geometry=Geometry("polygon", (tuple(ring),)),
            attributes={"name": _TOWN_NAMES[i]},
        ))
    return towns


def _road_attrs(rng) -> dict:
    speed = int(rng.choice(_SPEEDS))
    return {
        "speed_limit": None if rng.random() < 0.05 else speed,
        "opp_speed_limit": None if rng.random() < 0.10 else speed,
        "sidewalk_left": str(rng.choice(_SIDEWALK, p=_SIDEWALK_W)),
        "sidewalk_right": str(rng.choice(_SIDEWALK, p=_SIDEWALK_W)),
    }


def _make_roads(rng, towns: list[EntityRecord], total: int) -> list[EntityRecord]:
    """Jittered grid per town plus one inter-town connector per gap."""
    n_towns = len(towns)
    connectors = n_towns - 1
    per_town = [(total - connectors) // n_towns] * n_towns
    for i in range((total - connectors) % n_towns):
        per_town[i] += 1

    roads = []
    rid = 0
    for i in range(n_towns):
        x0, y0, x1, y1 = _town_box(i)
        inset_x = 0.12 * (x1 - x0)
        inset_y = 0.12 * (y1 - y0)
        n = per_town[i]
        n_h = (n + 1) // 2
        n_v = n - n_h
        for k in range(n_h):
            y = y0 + inset_y + (y1 - y0 - 2 * inset_y) * (k + 0.5) / n_h
            verts = _jitter_line(rng, (x0 + inset_x, y), (x1 - inset_x, y), 6)
            roads.append(_road(rid, verts, rng))
            rid += 1
        for k in range(n_v):
            x = x0 + inset_x + (x1 - x0 - 2 * inset_x) * (k + 0.5) / n_v
            verts = _jitter_line(rng, (x, y0 + inset_y), (x, y1 - inset_y), 6)
            roads.append(_road(rid, verts, rng))
            rid += 1
    for i in range(connectors):
        _, y0, x1, y1 = _town_box(i)
        x2 = _town_box(i + 1)[0]
        y = (y0 + y1) / 2
        verts = _jitter_line(rng, (x1 - 0.008, y), (x2 + 0.008, y), 4)
        roads.append(_road(rid, verts, rng))
        rid += 1
    return roads


def _road(rid: int, verts, rng) -> EntityRecord:
    return EntityRecord(
        id=f"road-{rid:04d}",
        entity="Road",
        geometry=polyline(verts),
        attributes=_road_attrs(rng),
    )


def _jitter_line(rng, a, b, n_verts: int):
    """Near-straight polyline from a to b with small perpendicular jitter."""
    ax, ay = a
    bx, by = b
    out = []
    for i in range(n_verts):
        t = i / (n_verts - 1)
        x = ax + (bx - ax) * t
        y = ay + (by - ay) * t
        if 0 < i < n_verts - 1:
            x += rng.uniform(-1, 1) * 0.0006
            y += rng.uniform(-1, 1) * 0.0006
        out.append((_r6(x), _r6(y)))
    return out


def _spread_over_towns(total: int, n_towns: int) -> list[int]:
    per = [total // n_towns] * n_towns
    for i in range(total % n_towns):
        per[i] += 1
    return per


def _school_name(town_name: str, slot: int) -> str:
    if slot % len(_SCHOOL_TEMPLATES) == 0 and town_name == "Amherst":
        return "Amherst Regional High School"
    template = _SCHOOL_TEMPLATES[slot % len(_SCHOOL_TEMPLATES)]
    if template == "Main School" and town_name not in ("Quincy", "Amherst"):
        return f"{town_name} Main Street School"
    return template.format(town=town_name)


def _make_schools(rng, towns, total: int) -> list[EntityRecord]:
    out = []
    sid = 0
    for ti, n in enumerate(_spread_over_towns(total, len(towns))):
        town_name = towns[ti].attributes["name"]
        for k in range(n):
            name = _school_name(town_name, k)
            loc = _point_in_town(rng, towns[ti])
            out.append(EntityRecord(
                id=f"school-{sid:04d}", entity="School",
                geometry=loc, attributes={"name": name},
            ))
            sid += 1
    return out


def _make_bus_stops(rng, towns, total: int) -> list[EntityRecord]:
    out = []
    bid = 0
    for ti, n in enumerate(_spread_over_towns(total, len(towns))):
        for k in range(n):
            s1 = _STREETS[int(rng.integers(0, len(_STREETS)))]
            s2 = _STREETS[int(rng.integers(0, len(_STREETS)))]
            while s2 == s1:
                s2 = _STREETS[int(rng.integers(0, len(_STREETS)))]
            name = f"{s1} @ {s2}"
            if ti == 0 and k == 0:
                name = "Palmer St @ Brockton Ave"
            loc = _point_in_town(rng, towns[ti])
            out.append(EntityRecord(
                id=f"stop-{bid:04d}", entity="BusStop",
                geometry=loc, attributes={"stop_id": f"S{bid:05d}", "stop_name": name},
            ))
            bid += 1
    return out


def _make_crosswalks(rng, roads, total: int) -> list[EntityRecord]:
    """Small squares (~12 m) centered on road vertices."""
    out = []
    half = 0.00006  # ~6 m in longitude at this latitude band
    for i in range(total):
        road = roads[int(rng.integers(0, len(roads)))]
        verts = road.geometry.coords
        vx, vy = verts[int(rng.integers(1, len(verts) - 1))]
        ring = [
            (_r6(vx - half), _r6(vy - half)), (_r6(vx + half), _r6(vy - half)),
            (_r6(vx + half), _r6(vy + half)), (_r6(vx - half), _r6(vy + half)),
        ]
        ring.append(ring[0])
        out.append(EntityRecord(
            id=f"crosswalk-{i:04d}", entity="Crosswalk",
            geometry=Geometry("polygon", (tuple(ring),)),
            attributes={"crosswalk_id": f"X{i:05d}"},
        ))
    return out


def _make_crashes(rng, towns, roads, total: int) -> list[EntityRecord]:
    out = []
    for i in range(total):
        road, loc = _point_near_road(rng, towns, roads)
        minutes = int(rng.integers(0, 1440))
        day = int(rng.integers(0, 365))
        month, dom = _day_to_date(day)
        attrs = {
            "severity": str(rng.choice(_SEVERITIES, p=_SEVERITY_W)),
            "first_hrmf": str(rng.choice(_HRMF_COMMON, p=_HRMF_W)),
            "crash_date": f"2025-{month:02d}-{dom:02d}",
            "crash_time": minutes,
            "sidewalk_left": road.attributes["sidewalk_left"],
            "sidewalk_right": road.attributes["sidewalk_right"],
            "speed_limit": road.attributes["speed_limit"],
            "junction_type": str(rng.choice(_JUNCTIONS, p=_JUNCTION_W)),
        }
        out.append(EntityRecord(
            id=f"crash-{i:05d}", entity="Crash", geometry=loc, attributes=attrs,
        ))
    return out


_CUM_DAYS = (31, 59, 90, 120, 151, 181, 212, 243, 273, 304, 334, 365)


def _day_to_date(day: int) -> tuple[int, int]:
    prev = 0
    for m, cum in enumerate(_CUM_DAYS, start=1):
        if day < cum:
            return m, day - prev + 1
        prev = cum
    return 12, 31


def _point_in_town(rng, town: EntityRecord) -> Geometry:
    ring = town.geometry.rings[0]
    xs = [p[0] for p in ring]
    ys = [p[1] for p in ring]
    while True:
        x = _r6(rng.uniform(min(xs), max(xs)))
        y = _r6(rng.uniform(min(ys), max(ys)))
        pt = point(x, y)
        if point_in_polygon(pt, town.geometry):
            return pt


def _point_near_road(rng, towns, roads) -> tuple[EntityRecord, Geometry]:
    """Point jittered off a random road segment, rejected until inside a town."""
    while True:
        road = roads[int(rng.integers(0, len(roads)))]
        verts = road.geometry.coords
        si = int(rng.integers(0, len(verts) - 1))
        t = rng.random()
        x = verts[si][0] + (verts[si + 1][0] - verts[si][0]) * t
        y = verts[si][1] + (verts[si + 1][1] - verts[si][1]) * t
        x = _r6(x + rng.uniform(-1, 1) * 0.00035)
        y = _r6(y + rng.uniform(-1, 1) * 0.00035)
        pt = point(x, y)
        for town in towns:
            if point_in_polygon(pt, town.geometry):
                return road, pt


def _poly_center(poly: Geometry) -> tuple[float, float]:
    ring = poly.rings[0]
    xs = [p[0] for p in ring[:-1]]
    ys = [p[1] for p in ring[:-1]]
    return _r6(sum(xs) / len(xs)), _r6(sum(ys) / len(ys))
