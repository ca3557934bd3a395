"""Semantic frame model: the intermediate representation between language and execution.

A frame captures analytical intent as role-tagged entity targets plus
spatial/attribute constraints, entity relations, and an optional ranking
block. The JSON wire shape is part of the external contract:

    {"supported": ..., "targets": [...], "references": [...],
     "spatial_constraints": [...], "attribute_constraints": [...],
     "relations": [...], "ranking": {...} | absent}

Raw frames straight from an interpreter may carry non-canonical values
("1km", "fatal", "7am"); the repair layer owns turning those into canonical
form. Parsing here is strictly structural: unknown keys are rejected
everywhere (silent acceptance of unrecognized intent would be unauditable),
but value-level problems are preserved for repair.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace


class FrameParseError(ValueError):
    """Input is not valid JSON."""


class FrameShapeError(ValueError):
    """JSON is well-formed but violates the frame wire shape."""


@dataclass(frozen=True)
class TargetBinding:
    entity: str
    role: str


@dataclass(frozen=True)
class Candidate:
    name: str
    location: tuple[float, float]  # lon, lat


@dataclass(frozen=True)
class GeoReference:
    entity: str
    role: str
    name: str
    resolved_location: tuple[float, float] | None = None
    candidates: tuple[Candidate, ...] = ()


@dataclass(frozen=True)
class SpatialConstraint:
    relation: str
    target_role: str
    reference_role: str
    distance_m: object = None  # number once canonical; raw strings allowed pre-repair


@dataclass(frozen=True)
class AttributeConstraint:
    target_role: str
    field: str
    operator: str
    value: object = None


@dataclass(frozen=True)
class RelationLink:
    kind: str
    from_role: str
    to_role: str
    tolerance_m: object = None


@dataclass(frozen=True)
class RankingSpec:
    metric: str
    target_role: str
    order: str
    top_n: int


@dataclass(frozen=True)
class SemanticFrame:
    supported: bool = True
    targets: tuple[TargetBinding, ...] = ()
    references: tuple[GeoReference, ...] = ()
    spatial_constraints: tuple[SpatialConstraint, ...] = ()
    attribute_constraints: tuple[AttributeConstraint, ...] = ()
    relations: tuple[RelationLink, ...] = ()
    ranking: RankingSpec | None = None

    def roles(self) -> set[str]:
        return {t.role for t in self.targets}

    def target_for_role(self, role: str) -> TargetBinding | None:
        for t in self.targets:
            if t.role == role:
                return t
        return None

    def references_for_role(self, role: str) -> tuple[GeoReference, ...]:
        return tuple(r for r in self.references if r.role == role)


# ---------------------------------------------------------------------------
# parsing

_TOP_KEYS = {
    "supported", "targets", "references", "spatial_constraints",
    "attribute_constraints", "relations", "ranking",
}


def parse_frame(json_text: str) -> SemanticFrame:
    """Parse frame JSON structurally; value-level violations survive for repair."""
    try:
        raw = json.loads(json_text)
    except json.JSONDecodeError as exc:
        raise FrameParseError(f"frame is not valid JSON: {exc}") from exc
    return frame_from_obj(raw)


def frame_from_obj(raw) -> SemanticFrame:
    if not isinstance(raw, dict):
        raise FrameShapeError("frame must be a JSON object")
    unknown = set(raw) - _TOP_KEYS
    if unknown:
        raise FrameShapeError(f"unknown frame keys: {sorted(unknown)}")

    supported = raw.get("supported", True)
    if not isinstance(supported, bool):
        raise FrameShapeError("'supported' must be a boolean")

    targets = tuple(_parse_target(t) for t in _expect_list(raw, "targets"))
    references = tuple(_parse_reference(r) for r in _expect_list(raw, "references"))
    spatial = tuple(_parse_spatial(c) for c in _expect_list(raw, "spatial_constraints"))
    attributes = tuple(_parse_attribute(c) for c in _expect_list(raw, "attribute_constraints"))
    relations = tuple(_parse_relation(r) for r in _expect_list(raw, "relations"))
    ranking = raw.get("ranking")
    return SemanticFrame(
        supported=supported,
        targets=targets,
        references=references,
        spatial_constraints=spatial,
        attribute_constraints=attributes,
        relations=relations,
        ranking=_parse_ranking(ranking) if ranking is not None else None,
    )


def _expect_list(raw: dict, key: str) -> list:
    val = raw.get(key, [])
    if not isinstance(val, list):
        raise FrameShapeError(f"'{key}' must be a list")
    return val


def _check_keys(obj, required, optional, what: str) -> None:
    if not isinstance(obj, dict):
        raise FrameShapeError(f"{what} must be an object")
    missing = required - set(obj)
    if missing:
        raise FrameShapeError(f"{what} missing keys: {sorted(missing)}")
    unknown = set(obj) - required - optional
    if unknown:
        raise FrameShapeError(f"{what} has unknown keys: {sorted(unknown)}")


def _parse_target(obj) -> TargetBinding:
    _check_keys(obj, {"entity", "role"}, set(), "target")
    return TargetBinding(entity=_as_str(obj["entity"], "target.entity"),
                         role=_as_str(obj["role"], "target.role"))


def _parse_reference(obj) -> GeoReference:
    _check_keys(obj, {"entity", "role", "name"}, {"resolved_location", "candidates"}, "reference")
    loc = obj.get("resolved_location")
    cands = obj.get("candidates") or []
    if not isinstance(cands, list):
        raise FrameShapeError("reference.candidates must be a list")
    parsed_cands = []
    for c in cands:
        _check_keys(c, {"name", "location"}, set(), "candidate")
        parsed_cands.append(Candidate(name=_as_str(c["name"], "candidate.name"),
                                      location=_as_lonlat(c["location"])))
    return GeoReference(
        entity=_as_str(obj["entity"], "reference.entity"),
        role=_as_str(obj["role"], "reference.role"),
        name=_as_str(obj["name"], "reference.name"),
        resolved_location=_as_lonlat(loc) if loc is not None else None,
        candidates=tuple(parsed_cands),
    )


def _parse_spatial(obj) -> SpatialConstraint:
    _check_keys(obj, {"relation", "target_role", "reference_role"}, {"distance_m"}, "spatial constraint")
    return SpatialConstraint(
        relation=_as_str(obj["relation"], "spatial.relation"),
        target_role=_as_str(obj["target_role"], "spatial.target_role"),
        reference_role=_as_str(obj["reference_role"], "spatial.reference_role"),
        distance_m=_freeze_value(obj.get("distance_m")),
    )


def _parse_attribute(obj) -> AttributeConstraint:
    _check_keys(obj, {"target_role", "field", "operator"}, {"value"}, "attribute constraint")
    return AttributeConstraint(
        target_role=_as_str(obj["target_role"], "attribute.target_role"),
        field=_as_str(obj["field"], "attribute.field"),
        operator=_as_str(obj["operator"], "attribute.operator"),
        value=_freeze_value(obj.get("value")),
    )


def _parse_relation(obj) -> RelationLink:
    _check_keys(obj, {"kind", "from_role", "to_role", "tolerance_m"}, set(), "relation link")
    return RelationLink(
        kind=_as_str(obj["kind"], "relation.kind"),
        from_role=_as_str(obj["from_role"], "relation.from_role"),
        to_role=_as_str(obj["to_role"], "relation.to_role"),
        tolerance_m=_freeze_value(obj["tolerance_m"]),
    )


def _parse_ranking(obj) -> RankingSpec:
    _check_keys(obj, {"metric", "target_role", "order", "top_n"}, set(), "ranking")
    top_n = obj["top_n"]
    if isinstance(top_n, bool) or not isinstance(top_n, int) or top_n < 1:
        raise FrameShapeError("ranking.top_n must be a positive integer")
    return RankingSpec(
        metric=_as_str(obj["metric"], "ranking.metric"),
        target_role=_as_str(obj["target_role"], "ranking.target_role"),
        order=_as_str(obj["order"], "ranking.order"),
        top_n=top_n,
    )


def _as_str(v, what: str) -> str:
    if not isinstance(v, str):
        raise FrameShapeError(f"{what} must be a string")
    return v


def _as_lonlat(v) -> tuple[float, float]:
    if (not isinstance(v, (list, tuple)) or len(v) != 2
            or not all(isinstance(x, (int, float)) and not isinstance(x, bool) for x in v)):
        raise FrameShapeError("location must be [lon, lat]")
    return (float(v[0]), float(v[1]))


def _freeze_value(v):
    """JSON value -> hashable frame value (lists become tuples)."""
    if isinstance(v, list):
        return tuple(_freeze_value(x) for x in v)
    if isinstance(v, dict):
        raise FrameShapeError("constraint values must be scalars or lists")
    return v


# ---------------------------------------------------------------------------
# serialization

def frame_to_obj(frame: SemanticFrame) -> dict:
    obj: dict = {
        "supported": frame.supported,
        "targets": [{"entity": t.entity, "role": t.role} for t in frame.targets],
        "references": [_reference_obj(r) for r in frame.references],
        "spatial_constraints": [_spatial_obj(c) for c in frame.spatial_constraints],
        "attribute_constraints": [_attribute_obj(c) for c in frame.attribute_constraints],
        "relations": [
            {"kind": r.kind, "from_role": r.from_role, "to_role": r.to_role,
             "tolerance_m": _thaw(r.tolerance_m)}
            for r in frame.relations
        ],
    }
    if frame.ranking is not None:
        obj["ranking"] = {
            "metric": frame.ranking.metric,
            "target_role": frame.ranking.target_role,
            "order": frame.ranking.order,
            "top_n": frame.ranking.top_n,
        }
    return obj


def _reference_obj(r: GeoReference) -> dict:
    obj = {"entity": r.entity, "role": r.role, "name": r.name}
    if r.resolved_location is not None:
        obj["resolved_location"] = list(r.resolved_location)
    if r.candidates:
        obj["candidates"] = [{"name": c.name, "location": list(c.location)} for c in r.candidates]
    return obj


def _spatial_obj(c: SpatialConstraint) -> dict:
    obj = {"relation": c.relation, "target_role": c.target_role, "reference_role": c.reference_role}
    if c.distance_m is not None:
        obj["distance_m"] = _thaw(c.distance_m)
    return obj


def _attribute_obj(c: AttributeConstraint) -> dict:
    obj = {"target_role": c.target_role, "field": c.field, "operator": c.operator}
    if c.value is not None:
        obj["value"] = _thaw(c.value)
    return obj


def _thaw(v):
    if isinstance(v, tuple):
        return [_thaw(x) for x in v]
    return v


def frame_to_json(frame: SemanticFrame, pretty: bool = False) -> str:
    obj = frame_to_obj(frame)
    if pretty:
        return json.dumps(obj, indent=2, sort_keys=True)
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


# ---------------------------------------------------------------------------
# canonical form

def canonicalize(frame: SemanticFrame) -> SemanticFrame:
    """Deterministic total order + fixed numeric precision; idempotent.

    Meters round to 3 decimals and serialize as floats; attribute values
    round to 3 decimals and collapse to ints when integral (times in
    minutes stay integers); coordinates round to 6 decimals.
    """
    targets = tuple(sorted(
        (replace(t) for t in frame.targets),
        key=lambda t: (t.role, t.entity),
    ))
    references = tuple(sorted(
        (_canon_reference(r) for r in frame.references),
        key=lambda r: (r.role, r.entity, r.name),
    ))
    spatial = tuple(sorted(
        (_canon_spatial(c) for c in frame.spatial_constraints),
        key=lambda c: (c.relation, c.target_role, c.reference_role, _value_key(c.distance_m)),
    ))
    attributes = tuple(sorted(
        (_canon_attribute(c) for c in frame.attribute_constraints),
        key=lambda c: (c.target_role, c.field, c.operator, _value_key(c.value)),
    ))
    relations = tuple(sorted(
        (replace(r, tolerance_m=_canon_meters(r.tolerance_m)) for r in frame.relations),
        key=lambda r: (r.kind, r.from_role, r.to_role, _value_key(r.tolerance_m)),
    ))
    return replace(
        frame,
        targets=targets,
        references=references,
        spatial_constraints=spatial,
        attribute_constraints=attributes,
        relations=relations,
    )


def _canon_reference(r: GeoReference) -> GeoReference:
    loc = r.resolved_location
    if loc is not None:
        loc = (round(loc[0], 6), round(loc[1], 6))
    cands = tuple(sorted(
        (Candidate(c.name, (round(c.location[0], 6), round(c.location[1], 6))) for c in r.candidates),
        key=lambda c: (c.name, c.location),
    ))
    return replace(r, resolved_location=loc, candidates=cands)


def _canon_spatial(c: SpatialConstraint) -> SpatialConstraint:
    return replace(c, distance_m=_canon_meters(c.distance_m))


def _canon_meters(v):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        return v  # raw strings pass through untouched; repair owns them
    return float(round(float(v), 3))


def _canon_attribute(c: AttributeConstraint) -> AttributeConstraint:
    return replace(c, value=_canon_value(c.value))


def _canon_value(v):
    if isinstance(v, tuple):
        return tuple(_canon_value(x) for x in v)
    if isinstance(v, bool):
        return v
    if isinstance(v, (int, float)):
        r = round(float(v), 3)
        return int(r) if r == int(r) else r
    return v


def _value_key(v) -> str:
    return json.dumps(_thaw(v), sort_keys=True, default=str)


def frames_equal(a: SemanticFrame, b: SemanticFrame) -> bool:
    """Intent-completeness predicate: equality of canonical forms."""
    return canonicalize(a) == canonicalize(b)


def frame_diff(a: SemanticFrame, b: SemanticFrame) -> list[str]:
    """Paths at which the canonical forms differ (debugging aid for the harness)."""
    ca = frame_to_obj(canonicalize(a))
    cb = frame_to_obj(canonicalize(b))
    diffs: list[str] = []
    _diff_obj(ca, cb, "", diffs)
    return diffs


def _diff_obj(a, b, path: str, out: list[str]) -> None:
    if type(a) is not type(b):
        out.append(path or "<root>")
        return
    if isinstance(a, dict):
        for key in sorted(set(a) | set(b)):
            sub = f"{path}.{key}" if path else key
            if key not in a or key not in b:
                out.append(sub)
            else:
                _diff_obj(a[key], b[key], sub, out)
    elif isinstance(a, list):
        if len(a) != len(b):
            out.append(f"{path} (length {len(a)} != {len(b)})")
            return
        for i, (x, y) in enumerate(zip(a, b)):
            _diff_obj(x, y, f"{path}[{i}]", out)
    elif a != b:
        out.append(f"{path} ({a!r} != {b!r})")
