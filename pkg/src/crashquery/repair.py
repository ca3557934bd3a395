"""Validation and repair: the governance boundary between language and execution.

A raw frame from any interpreter passes through a fixed pipeline --
validate, normalize values, resolve anchors, structural repair,
re-validate -- and either comes out schema-conformant with an auditable
report of every correction, or is rejected with the partial report
attached. Nothing reaches the compiler without passing through here.

Normalization is exact-match against curated tables (lowercased, trimmed)
plus unit/time/date parsers; there is deliberately no fuzzy matching, so
every repair is explainable by the rule that produced it.
"""

from __future__ import annotations

import csv
import datetime
import io
import json
import re
from dataclasses import dataclass, field, replace

from .frames import (
    AttributeConstraint,
    Candidate,
    GeoReference,
    SemanticFrame,
    SpatialConstraint,
    TargetBinding,
    frame_to_obj,
)
from .registry import OPERATORS, PLACE_ENTITY, RELATIONS, ROLES, SchemaRegistry, check_value_kind

VALUE_NORMALIZATION = "value_normalization"
ANCHOR_RESOLUTION = "anchor_resolution"
STRUCTURAL = "structural"

# rule identifiers a RepairAction may carry (table rules are "table:<context>")
RULE_IDS = frozenset({
    "canonical_case", "distance_parse", "time_parse", "date_parse", "number_parse",
    "gazetteer", "user_pick",
    "duplicate_target", "duplicate_attribute_constraint", "duplicate_spatial_constraint",
    "spurious_target", "dangling_constraint",
})


@dataclass(frozen=True)
class RepairAction:
    kind: str
    path: str
    before: object
    after: object
    rule_id: str

    def to_obj(self) -> dict:
        return {"kind": self.kind, "path": self.path, "before": _plain(self.before),
                "after": _plain(self.after), "rule_id": self.rule_id}


@dataclass
class RepairReport:
    actions: list[RepairAction] = field(default_factory=list)
    rejected: str | None = None

    @property
    def repaired(self) -> bool:
        return len(self.actions) > 0

    def counts_by_kind(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for a in self.actions:
            out[a.kind] = out.get(a.kind, 0) + 1
        return out

    def to_obj(self) -> dict:
        return {
            "repaired": self.repaired,
            "actions": [a.to_obj() for a in self.actions],
            "rejected": self.rejected,
        }


class RepairRejection(Exception):
    """Unrepairable frame; carries the partial report for the audit trail."""

    def __init__(self, reason: str, report: RepairReport):
        report.rejected = reason
        self.report = report
        super().__init__(reason)


@dataclass(frozen=True)
class Violation:
    path: str
    code: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


# ---------------------------------------------------------------------------
# normalization table

class NormalizationTable:
    """Exact-match (context, lowercased raw) -> canonical value mappings."""

    def __init__(self, entries: dict[tuple[str, str], object]):
        self.entries = entries

    @classmethod
    def from_csv(cls, text: str) -> "NormalizationTable":
        entries: dict[tuple[str, str], object] = {}
        reader = csv.DictReader(io.StringIO(text))
        required = {"context", "raw", "canonical"}
        if reader.fieldnames is None or required - set(reader.fieldnames):
            raise ValueError("normalization table needs columns: context, raw, canonical")
        for row in reader:
            canonical = row["canonical"]
            try:
                canonical = json.loads(canonical)
            except (json.JSONDecodeError, TypeError):
                pass
            if isinstance(canonical, list):
                canonical = tuple(canonical)
            entries[(row["context"], row["raw"].strip().lower())] = canonical
        return cls(entries)

    def lookup(self, context: str, raw) -> object | None:
        if not isinstance(raw, str):
            return None
        return self.entries.get((context, raw.strip().lower()))


def default_normalization_table() -> NormalizationTable:
    from importlib.resources import files

    return NormalizationTable.from_csv(
        files("crashquery.data").joinpath("normalization.csv").read_text("utf-8")
    )


# ---------------------------------------------------------------------------
# gazetteer

@dataclass(frozen=True)
class GazetteerEntry:
    name: str
    kind: str  # entity name or "Place"
    location: tuple[float, float]
    source: str = "fixture_file"


class Gazetteer:
    def __init__(self, entries: list[GazetteerEntry]):
        self.entries = list(entries)
        self._by_name: dict[str, list[GazetteerEntry]] = {}
        for e in self.entries:
            self._by_name.setdefault(e.name.strip().lower(), []).append(e)

    def lookup(self, name: str, kind: str | None = None) -> list[GazetteerEntry]:
        found = self._by_name.get(name.strip().lower(), [])
        if kind and kind != PLACE_ENTITY:
            found = [e for e in found if e.kind == kind]
        return sorted(found, key=lambda e: (e.name, e.location))

    @classmethod
    def from_dataset(cls, dataset) -> "Gazetteer":
        """Named point entities straight from the store, plus town centroids."""
        entries = []
        name_fields = {"School": "name", "BusStop": "stop_name"}
        for entity, fieldname in name_fields.items():
            if dataset.has_entity(entity):
                for rec in dataset.records(entity):
                    name = rec.attributes.get(fieldname)
                    if name:
                        entries.append(GazetteerEntry(
                            name=name, kind=entity,
                            location=rec.geometry.coords, source="dataset_lookup",
                        ))
        if dataset.has_entity("Town"):
            for rec in dataset.records("Town"):
                name = rec.attributes.get("name")
                if name:
                    ring = rec.geometry.rings[0]
                    lon = round(sum(p[0] for p in ring[:-1]) / (len(ring) - 1), 6)
                    lat = round(sum(p[1] for p in ring[:-1]) / (len(ring) - 1), 6)
                    entries.append(GazetteerEntry(
                        name=name, kind="Town", location=(lon, lat), source="dataset_lookup",
                    ))
        return cls(entries)

    @classmethod
    def from_places(cls, places: list[dict]) -> "Gazetteer":
        return cls([
            GazetteerEntry(name=p["name"], kind=p.get("kind", PLACE_ENTITY),
                           location=tuple(p["location"]), source="fixture_file")
            for p in places
        ])

    def merged(self, other: "Gazetteer") -> "Gazetteer":
        return Gazetteer(self.entries + other.entries)


# ---------------------------------------------------------------------------
# schema validation

def validate_frame(registry: SchemaRegistry, frame: SemanticFrame) -> list[Violation]:
    """Every schema violation in the frame; empty means conformant."""
    v: list[Violation] = []
    if not frame.supported:
        return v

    primaries = [t for t in frame.targets if t.role == "primary"]
    if len(primaries) == 0:
        v.append(Violation("targets", "no_primary", "supported frame needs exactly one primary target"))
    elif len(primaries) > 1:
        v.append(Violation("targets", "multiple_primary", "more than one primary target"))

    role_entities: dict[str, str] = {}
    seen_bindings: set[tuple[str, str]] = set()
    for i, t in enumerate(frame.targets):
        path = f"targets[{i}]"
        if t.role not in ROLES:
            v.append(Violation(path, "unknown_role", f"unknown role {t.role!r}"))
            continue
        spec = registry.entity(t.entity)
        if spec is None and not (t.entity == PLACE_ENTITY and t.role == "anchor"):
            v.append(Violation(path, "unknown_entity", f"unknown entity {t.entity!r}"))
            continue
        if t.role == "scope" and spec is not None and not spec.scope_capable:
            v.append(Violation(path, "role_capability", f"{t.entity} cannot take the scope role"))
        if t.role == "anchor" and spec is not None and not spec.anchor_capable:
            v.append(Violation(path, "role_capability", f"{t.entity} cannot take the anchor role"))
        if (t.entity, t.role) in seen_bindings:
            v.append(Violation(path, "duplicate_target", f"duplicate target ({t.entity}, {t.role})"))
        seen_bindings.add((t.entity, t.role))
        if t.role in role_entities and role_entities[t.role] != t.entity:
            v.append(Violation(path, "role_conflict",
                               f"role {t.role!r} bound to both {role_entities[t.role]!r} and {t.entity!r}"))
        role_entities.setdefault(t.role, t.entity)

    used_roles: set[str] = set()

    for i, r in enumerate(frame.references):
        path = f"references[{i}]"
        used_roles.add(r.role)
        if r.role not in role_entities:
            v.append(Violation(path, "untargeted_role", f"reference role {r.role!r} has no target"))
        elif r.entity != role_entities[r.role]:
            v.append(Violation(path, "reference_mismatch",
                               f"reference entity {r.entity!r} != target entity {role_entities[r.role]!r}"))
        if not r.name:
            v.append(Violation(path, "value", "reference needs a non-empty name"))

    seen_spatial: set = set()
    for i, c in enumerate(frame.spatial_constraints):
        path = f"spatial_constraints[{i}]"
        if c.relation not in RELATIONS:
            v.append(Violation(path, "unknown_relation", f"unknown relation {c.relation!r}"))
        for role in (c.target_role, c.reference_role):
            used_roles.add(role)
            if role not in role_entities:
                v.append(Violation(path, "untargeted_role", f"role {role!r} has no target"))
        if c.target_role == c.reference_role:
            v.append(Violation(path, "roles_equal", "target_role equals reference_role"))
        if c.relation == "within_distance":
            if isinstance(c.distance_m, bool) or not isinstance(c.distance_m, (int, float)):
                v.append(Violation(f"{path}.distance_m", "value",
                                   f"within_distance needs a numeric distance, got {c.distance_m!r}"))
            elif c.distance_m <= 0:
                v.append(Violation(f"{path}.distance_m", "value", "distance_m must be positive"))
        elif c.distance_m is not None:
            v.append(Violation(f"{path}.distance_m", "value",
                               f"{c.relation} takes no distance parameter"))
        if c in seen_spatial:
            v.append(Violation(path, "duplicate_constraint", "duplicate spatial constraint"))
        seen_spatial.add(c)

    seen_attr: set = set()
    for i, c in enumerate(frame.attribute_constraints):
        path = f"attribute_constraints[{i}]"
        used_roles.add(c.target_role)
        if c.target_role not in role_entities:
            v.append(Violation(path, "untargeted_role", f"role {c.target_role!r} has no target"))
        else:
            v.extend(_check_attribute(registry, role_entities[c.target_role], c, path))
        if c in seen_attr:
            v.append(Violation(path, "duplicate_constraint", "duplicate attribute constraint"))
        seen_attr.add(c)

    for i, link in enumerate(frame.relations):
        path = f"relations[{i}]"
        if link.kind != "snap_to_road":
            v.append(Violation(path, "unknown_relation", f"unknown relation kind {link.kind!r}"))
        for role in (link.from_role, link.to_role):
            used_roles.add(role)
            if role not in role_entities:
                v.append(Violation(path, "untargeted_role", f"role {role!r} has no target"))
        from_spec = registry.entity(role_entities.get(link.from_role, ""))
        to_spec = registry.entity(role_entities.get(link.to_role, ""))
        if from_spec is not None and from_spec.geometry_kind != "point":
            v.append(Violation(path, "relation_geometry", "snap_to_road from_role must be a point entity"))
        if to_spec is not None and to_spec.geometry_kind != "polyline":
            v.append(Violation(path, "relation_geometry", "snap_to_road to_role must be a polyline entity"))
        if isinstance(link.tolerance_m, bool) or not isinstance(link.tolerance_m, (int, float)) or link.tolerance_m <= 0:
            v.append(Violation(f"{path}.tolerance_m", "value", "tolerance_m must be a positive number"))

    if frame.ranking is not None:
        rk = frame.ranking
        used_roles.add(rk.target_role)
        if rk.metric not in registry.ranking_metrics:
            v.append(Violation("ranking.metric", "ranking", f"unknown metric {rk.metric!r}"))
        if rk.target_role != "primary":
            v.append(Violation("ranking.target_role", "ranking", "ranking must target the primary role"))
        if rk.order not in ("highest", "lowest"):
            v.append(Violation("ranking.order", "value", f"order must be highest/lowest, got {rk.order!r}"))

    # spurious targets: non-primary roles nothing points at
    for i, t in enumerate(frame.targets):
        if t.role == "primary" or t.role not in ROLES:
            continue
        if t.role == "scope":
            if not frame.references_for_role("scope"):
                v.append(Violation(f"targets[{i}]", "spurious_target",
                                   "scope target without a scope reference"))
            continue
        used = t.role in used_roles
        if t.role == "support" and frame.ranking is not None:
            used = True  # support carries the ranking measure
        if t.role == "anchor":
            # an anchor must be used by a spatial constraint, not merely referenced
            used = any(t.role in (c.target_role, c.reference_role) for c in frame.spatial_constraints)
            if used and not frame.references_for_role("anchor"):
                v.append(Violation(f"targets[{i}]", "missing_reference",
                                   "anchor target used by a constraint but has no reference"))
        if not used:
            v.append(Violation(f"targets[{i}]", "spurious_target",
                               f"target role {t.role!r} is not used by any constraint, reference, or ranking"))
    return v


def _check_attribute(registry, entity: str, c: AttributeConstraint, path: str) -> list[Violation]:
    v: list[Violation] = []
    spec = registry.entity(entity)
    if spec is None:
        return v  # entity violation already recorded
    fspec = spec.field(c.field)
    if fspec is None:
        v.append(Violation(path, "unknown_field", f"unknown field for entity: {entity}.{c.field}"))
        return v
    if c.operator not in OPERATORS:
        v.append(Violation(path, "unknown_operator", f"unknown operator {c.operator!r}"))
        return v

    if c.operator in ("is_null", "not_null"):
        if c.value is not None:
            v.append(Violation(f"{path}.value", "arity", f"{c.operator} takes no value"))
        return v
    if c.operator == "between":
        if not isinstance(c.value, tuple) or len(c.value) != 2:
            v.append(Violation(f"{path}.value", "arity", "between needs a two-element pair"))
            return v
        for elem in c.value:
            ok, reason = check_value_kind(fspec, elem)
            if not ok:
                v.append(Violation(f"{path}.value", "value", reason))
        try:
            if not v and c.value[0] > c.value[1]:
                v.append(Violation(f"{path}.value", "value", "between pair must be ordered low, high"))
        except TypeError:
            v.append(Violation(f"{path}.value", "value", "between pair elements must be comparable"))
        return v
    if c.operator == "in":
        if not isinstance(c.value, tuple) or len(c.value) == 0:
            v.append(Violation(f"{path}.value", "arity", "in needs a non-empty list"))
            return v
        for elem in c.value:
            ok, reason = check_value_kind(fspec, elem)
            if not ok:
                v.append(Violation(f"{path}.value", "value", reason))
        return v
    # scalar operators
    if isinstance(c.value, tuple) or c.value is None:
        v.append(Violation(f"{path}.value", "arity", f"{c.operator} needs a scalar value"))
        return v
    if c.operator in ("gt", "gte", "lt", "lte") and fspec.value_kind in ("categorical", "text"):
        v.append(Violation(f"{path}.value", "value",
                           f"ordering operator on non-ordered field {c.field!r}"))
        return v
    ok, reason = check_value_kind(fspec, c.value)
    if not ok:
        v.append(Violation(f"{path}.value", "value", reason))
    return v


# ---------------------------------------------------------------------------
# value normalization

_TIME_RE = re.compile(r"^\s*(\d{1,2})(?::(\d{2}))?\s*(am|pm)?\s*$", re.IGNORECASE)
_TIME_RANGE_RE = re.compile(r"^\s*(?:between\s+)?(.+?)\s+(?:and|to|-)\s+(.+?)\s*$", re.IGNORECASE)
_DISTANCE_RE = re.compile(
    r"^\s*([\d.]+)\s*(m|meter|meters|metre|metres|km|kilometer|kilometers|mi|mile|miles|ft|feet|foot)?\s*$",
    re.IGNORECASE,
)
_UNIT_M = {"m": 1.0, "meter": 1.0, "meters": 1.0, "metre": 1.0, "metres": 1.0,
           "km": 1000.0, "kilometer": 1000.0, "kilometers": 1000.0,
           "mi": 1609.344, "mile": 1609.344, "miles": 1609.344,
           "ft": 0.3048, "feet": 0.3048, "foot": 0.3048}

_MONTHS = {m.lower(): i + 1 for i, m in enumerate(
    ["January", "February", "March", "April", "May", "June", "July",
     "August", "September", "October", "November", "December"])}
_DATE_RE = re.compile(r"^\s*([A-Za-z]+)\s+(\d{1,2})(?:,)?\s+(\d{4})\s*$")


def parse_clock_time(raw: str) -> int | None:
    """'7am', '4:30pm', '16:00', 'noon' -> minutes since midnight."""
    s = raw.strip().lower()
    if s == "noon":
        return 720
    if s == "midnight":
        return 0
    m = _TIME_RE.match(s)
    if not m:
        return None
    hour = int(m.group(1))
    minute = int(m.group(2) or 0)
    ampm = (m.group(3) or "").lower()
    if ampm:
        if not (1 <= hour <= 12):
            return None
        hour = hour % 12
        if ampm == "pm":
            hour += 12
    if not (0 <= hour < 24 and 0 <= minute < 60):
        return None
    return hour * 60 + minute


def parse_time_range(raw: str) -> tuple[int, int] | None:
    m = _TIME_RANGE_RE.match(raw)
    if not m:
        return None
    a = parse_clock_time(m.group(1))
    b = parse_clock_time(m.group(2))
    if a is None or b is None:
        return None
    return (a, b)


def parse_distance_m(raw: str) -> float | None:
    """'1km', '500 m', '2 miles' -> meters (ints when integral)."""
    m = _DISTANCE_RE.match(raw)
    if not m:
        return None
    value = float(m.group(1)) * _UNIT_M[(m.group(2) or "m").lower()]
    value = round(value, 3)
    return int(value) if value == int(value) else value


def parse_date_iso(raw: str) -> str | None:
    s = raw.strip()
    try:
        return datetime.date.fromisoformat(s).isoformat()
    except ValueError:
        pass
    m = _DATE_RE.match(s)
    if not m:
        return None
    month = _MONTHS.get(m.group(1).lower())
    if month is None:
        return None
    try:
        return datetime.date(int(m.group(3)), month, int(m.group(2))).isoformat()
    except ValueError:
        return None


def normalize_values(table: NormalizationTable, registry: SchemaRegistry,
                     frame: SemanticFrame) -> tuple[SemanticFrame, list[RepairAction]]:
    """Replace raw surface forms with canonical values wherever a rule applies."""
    actions: list[RepairAction] = []
    role_entities = {t.role: t.entity for t in frame.targets}

    new_attrs = []
    for i, c in enumerate(frame.attribute_constraints):
        path = f"attribute_constraints[{i}].value"
        entity = role_entities.get(c.target_role)
        spec = registry.entity(entity) if entity else None
        fspec = spec.field(c.field) if spec else None
        if fspec is None or c.value is None:
            new_attrs.append(c)
            continue
        new_value, rule = _normalize_field_value(table, fspec, c.value)
        if rule is not None and new_value != c.value:
            actions.append(RepairAction(VALUE_NORMALIZATION, path, c.value, new_value, rule))
            c = replace(c, value=new_value)
        elif rule is None and new_value is None:
            raise RepairRejection(
                f"cannot normalize value {c.value!r} for field {c.field!r}",
                RepairReport(actions=actions),
            )
        new_attrs.append(c)

    new_spatial = []
    for i, c in enumerate(frame.spatial_constraints):
        path = f"spatial_constraints[{i}].distance_m"
        if isinstance(c.distance_m, str):
            meters, rule = _normalize_distance(table, c.distance_m)
            if meters is None:
                raise RepairRejection(
                    f"cannot normalize distance {c.distance_m!r}",
                    RepairReport(actions=actions),
                )
            actions.append(RepairAction(VALUE_NORMALIZATION, path, c.distance_m, meters, rule))
            c = replace(c, distance_m=meters)
        new_spatial.append(c)

    new_links = []
    for i, link in enumerate(frame.relations):
        path = f"relations[{i}].tolerance_m"
        if isinstance(link.tolerance_m, str):
            meters, rule = _normalize_distance(table, link.tolerance_m)
            if meters is None:
                raise RepairRejection(
                    f"cannot normalize tolerance {link.tolerance_m!r}",
                    RepairReport(actions=actions),
                )
            actions.append(RepairAction(VALUE_NORMALIZATION, path, link.tolerance_m, meters, rule))
            link = replace(link, tolerance_m=meters)
        new_links.append(link)

    ranking = frame.ranking
    if ranking is not None and ranking.order not in ("highest", "lowest"):
        canonical = table.lookup("order", ranking.order)
        if canonical in ("highest", "lowest"):
            actions.append(RepairAction(VALUE_NORMALIZATION, "ranking.order",
                                        ranking.order, canonical, "table:order"))
            ranking = replace(ranking, order=canonical)

    out = replace(frame, attribute_constraints=tuple(new_attrs),
                  spatial_constraints=tuple(new_spatial),
                  relations=tuple(new_links), ranking=ranking)
    return out, actions


def _normalize_field_value(table, fspec, value):
    """(new_value, rule_id) -- rule None + value unchanged means nothing to do;
    (None, None) means unrepairable."""
    if isinstance(value, tuple):
        parts = [_normalize_field_value(table, fspec, elem) for elem in value]
        if any(nv is None and r is None for nv, r in parts):
            return None, None
        rules = [r for _, r in parts if r]
        new = tuple(nv for nv, _ in parts)
        return new, (rules[0] if new != value else None)

    kind = fspec.value_kind
    if kind == "categorical":
        if value in fspec.canonical_values:
            return value, None
        hit = table.lookup(fspec.name, value)
        if hit is not None:
            return hit, f"table:{fspec.name}"
        if isinstance(value, str):
            for canon in fspec.canonical_values:
                if canon.lower() == value.strip().lower():
                    return canon, "canonical_case"
        return None, None
    if kind == "time_of_day":
        if isinstance(value, str):
            rng = table.lookup("time", value)
            if rng is not None:
                return rng, "table:time"
            pair = parse_time_range(value)
            if pair is not None:
                return pair, "time_parse"
            minutes = parse_clock_time(value)
            if minutes is not None:
                return minutes, "time_parse"
            return None, None
        return value, None
    if kind == "date":
        if isinstance(value, str):
            iso = parse_date_iso(value)
            if iso is None:
                return None, None
            return iso, ("date_parse" if iso != value else None)
        return value, None
    if kind == "numeric":
        if isinstance(value, str):
            try:
                num = float(value)
            except ValueError:
                return None, None
            return (int(num) if num == int(num) else num), "number_parse"
        return value, None
    return value, None


def _normalize_distance(table, raw: str):
    hit = table.lookup("distance", raw)
    if hit is not None:
        return hit, "table:distance"
    parsed = parse_distance_m(raw)
    if parsed is not None:
        return parsed, "distance_parse"
    return None, None


# ---------------------------------------------------------------------------
# anchor resolution

def resolve_anchors(gazetteer: Gazetteer, frame: SemanticFrame,
                    anchor_pick: int | None = None) -> tuple[SemanticFrame, list[RepairAction]]:
    """Attach verified coordinates to every reference, or surface candidates.

    anchor_pick selects among a previously surfaced candidate list (stable
    index into the sorted candidates of the first ambiguous reference).
    """
    actions: list[RepairAction] = []
    new_refs = []
    for i, ref in enumerate(frame.references):
        path = f"references[{i}].resolved_location"
        if ref.resolved_location is not None:
            new_refs.append(ref)
            continue
        if ref.candidates and anchor_pick is not None:
            if not (0 <= anchor_pick < len(ref.candidates)):
                raise RepairRejection(
                    f"anchor_pick {anchor_pick} out of range for {ref.name!r}",
                    RepairReport(actions=actions),
                )
            chosen = ref.candidates[anchor_pick]
            actions.append(RepairAction(ANCHOR_RESOLUTION, path, None, list(chosen.location), "user_pick"))
            new_refs.append(replace(ref, resolved_location=chosen.location, candidates=()))
            anchor_pick = None
            continue
        matches = gazetteer.lookup(ref.name, ref.entity)
        if len(matches) == 0:
            raise RepairRejection(
                f"unresolvable anchor: no match for {ref.name!r} ({ref.entity})",
                RepairReport(actions=actions),
            )
        if len(matches) == 1 or _all_same_location(matches):
            loc = matches[0].location
            actions.append(RepairAction(ANCHOR_RESOLUTION, path, None, list(loc),
                                        f"gazetteer:{matches[0].source}"))
            new_refs.append(replace(ref, resolved_location=loc))
            continue
        if anchor_pick is not None:
            if not (0 <= anchor_pick < len(matches)):
                raise RepairRejection(
                    f"anchor_pick {anchor_pick} out of range for {ref.name!r}",
                    RepairReport(actions=actions),
                )
            chosen = matches[anchor_pick]
            actions.append(RepairAction(ANCHOR_RESOLUTION, path, None, list(chosen.location), "user_pick"))
            new_refs.append(replace(ref, resolved_location=chosen.location))
            anchor_pick = None
            continue
        # ambiguity is surfaced, never auto-picked
        new_refs.append(replace(ref, candidates=tuple(
            Candidate(m.name, m.location) for m in matches
        )))
    return replace(frame, references=tuple(new_refs)), actions


def _all_same_location(matches) -> bool:
    return len({m.location for m in matches}) == 1


def pending_candidates(frame: SemanticFrame) -> list[tuple[int, GeoReference]]:
    """References awaiting user disambiguation."""
    return [(i, r) for i, r in enumerate(frame.references)
            if r.resolved_location is None and r.candidates]


# ---------------------------------------------------------------------------
# structural repair

def structural_repair(registry: SchemaRegistry,
                      frame: SemanticFrame) -> tuple[SemanticFrame, list[RepairAction]]:
    """Duplicate consolidation and spurious-element removal."""
    actions: list[RepairAction] = []

    # duplicate targets
    seen: set[tuple[str, str]] = set()
    targets = []
    for i, t in enumerate(frame.targets):
        key = (t.entity, t.role)
        if key in seen:
            actions.append(RepairAction(STRUCTURAL, f"targets[{i}]",
                                        {"entity": t.entity, "role": t.role}, None,
                                        "duplicate_target"))
            continue
        seen.add(key)
        targets.append(t)

    # duplicate constraints (byte-identical)
    attrs = []
    seen_attr: set = set()
    for i, c in enumerate(frame.attribute_constraints):
        if c in seen_attr:
            actions.append(RepairAction(STRUCTURAL, f"attribute_constraints[{i}]",
                                        _constraint_obj(c), None, "duplicate_attribute_constraint"))
            continue
        seen_attr.add(c)
        attrs.append(c)
    spatial = []
    seen_spatial: set = set()
    for i, c in enumerate(frame.spatial_constraints):
        if c in seen_spatial:
            actions.append(RepairAction(STRUCTURAL, f"spatial_constraints[{i}]",
                                        _constraint_obj(c), None, "duplicate_spatial_constraint"))
            continue
        seen_spatial.add(c)
        spatial.append(c)

    frame = replace(frame, targets=tuple(targets), attribute_constraints=tuple(attrs),
                    spatial_constraints=tuple(spatial))

    # spurious non-primary targets (and their references), then dangling constraints
    changed = True
    while changed:
        changed = False
        spurious = {
            t.role for i, t in enumerate(frame.targets)
            if _is_spurious(frame, t)
        }
        if spurious:
            # one action per removed role: the target and any references it
            # carries come out together as a single correction
            kept_targets = []
            for i, t in enumerate(frame.targets):
                if t.role in spurious:
                    names = [r.name for r in frame.references if r.role == t.role]
                    before = {"entity": t.entity, "role": t.role}
                    if names:
                        before["references"] = names
                    actions.append(RepairAction(STRUCTURAL, f"targets[{i}]",
                                                before, None, "spurious_target"))
                else:
                    kept_targets.append(t)
            kept_refs = [r for r in frame.references if r.role not in spurious]
            frame = replace(frame, targets=tuple(kept_targets), references=tuple(kept_refs))
            changed = True

        roles = frame.roles()
        kept_spatial = []
        for i, c in enumerate(frame.spatial_constraints):
            if c.target_role not in roles or c.reference_role not in roles:
                actions.append(RepairAction(STRUCTURAL, f"spatial_constraints[{i}]",
                                            _constraint_obj(c), None, "dangling_constraint"))
                changed = True
            else:
                kept_spatial.append(c)
        if len(kept_spatial) != len(frame.spatial_constraints):
            frame = replace(frame, spatial_constraints=tuple(kept_spatial))

    return frame, actions


def _is_spurious(frame: SemanticFrame, t: TargetBinding) -> bool:
    if t.role == "primary":
        return False
    if t.role == "scope":
        return not frame.references_for_role("scope")
    in_spatial = any(t.role in (c.target_role, c.reference_role) for c in frame.spatial_constraints)
    in_relation = any(t.role in (r.from_role, r.to_role) for r in frame.relations)
    if t.role == "anchor":
        return not in_spatial
    if t.role == "support":
        return not (in_spatial or in_relation or frame.ranking is not None)
    # filter
    return not (in_spatial or in_relation)


def _constraint_obj(c) -> dict:
    if isinstance(c, AttributeConstraint):
        return {"target_role": c.target_role, "field": c.field,
                "operator": c.operator, "value": _plain(c.value)}
    return {"relation": c.relation, "target_role": c.target_role,
            "reference_role": c.reference_role, "distance_m": _plain(c.distance_m)}


def _plain(v):
    if isinstance(v, tuple):
        return [_plain(x) for x in v]
    return v


# ---------------------------------------------------------------------------
# the pipeline

def repair(registry: SchemaRegistry, table: NormalizationTable, gazetteer: Gazetteer,
           frame: SemanticFrame, anchor_pick: int | None = None,
           ) -> tuple[SemanticFrame, RepairReport]:
    """validate -> normalize -> resolve -> structural repair -> re-validate.

    Returns the conformant frame plus the ordered action report; raises
    RepairRejection (with partial report) when the frame cannot be made
    conformant. A returned frame may still carry pending anchor candidates
    -- check pending_candidates() before executing.
    """
    if not frame.supported:
        raise RepairRejection("unsupported query (frame.supported = false)", RepairReport())

    report = RepairReport()
    try:
        frame, actions = normalize_values(table, registry, frame)
        report.actions.extend(actions)
        frame, actions = resolve_anchors(gazetteer, frame, anchor_pick=anchor_pick)
        report.actions.extend(actions)
        frame, actions = structural_repair(registry, frame)
        report.actions.extend(actions)
    except RepairRejection as exc:
        exc.report.actions = report.actions + exc.report.actions
        raise

    violations = validate_frame(registry, frame)
    if violations:
        raise RepairRejection(
            "unrepairable frame: " + "; ".join(str(v) for v in violations),
            report,
        )
    return frame, report
