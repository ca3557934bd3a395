"""Domain schema registry: entities, fields, canonical values, operator sets.

The registry is loaded from a YAML document (see data/registry.yaml for the
shipped default) and is immutable afterwards; every other layer -- prompt
construction, frame validation, repair, compilation, execution -- grounds
itself against it.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import yaml

GEOMETRY_KINDS = ("point", "polyline", "polygon")
VALUE_KINDS = ("categorical", "numeric", "date", "time_of_day", "text")

RELATIONS = ("within_distance", "intersects", "contains", "nearest_to")
OPERATORS = ("eq", "in", "gt", "gte", "lt", "lte", "between", "is_null", "not_null")
ROLES = ("primary", "support", "scope", "anchor", "filter")

# Reserved pseudo-entity for free place-name anchors ("Amherst Center");
# permitted only in anchor-role targets/references, never stored.
PLACE_ENTITY = "Place"


class RegistryError(ValueError):
    """Malformed registry document."""


class SchemaConflictError(RegistryError):
    """Structurally valid document that violates a registry invariant."""


@dataclass(frozen=True)
class FieldSpec:
    name: str
    value_kind: str
    canonical_values: tuple[str, ...] = ()
    unit: str | None = None
    nullable: bool = False

    def __post_init__(self):
        if self.value_kind not in VALUE_KINDS:
            raise SchemaConflictError(f"field {self.name!r}: unknown value kind {self.value_kind!r}")
        if self.value_kind == "categorical" and not self.canonical_values:
            raise SchemaConflictError(f"categorical field {self.name!r} has empty canonical_values")
        if self.value_kind != "categorical" and self.canonical_values:
            raise SchemaConflictError(f"non-categorical field {self.name!r} declares canonical_values")


@dataclass(frozen=True)
class EntitySpec:
    name: str
    geometry_kind: str
    fields: tuple[FieldSpec, ...] = ()
    scope_capable: bool = False
    anchor_capable: bool = False

    def __post_init__(self):
        if self.geometry_kind not in GEOMETRY_KINDS:
            raise SchemaConflictError(
                f"entity {self.name!r}: unknown geometry kind {self.geometry_kind!r}"
            )
        seen = set()
        for f in self.fields:
            if f.name in seen:
                raise SchemaConflictError(f"entity {self.name!r}: duplicate field {f.name!r}")
            seen.add(f.name)

    def field(self, name: str) -> FieldSpec | None:
        for f in self.fields:
            if f.name == name:
                return f
        return None


@dataclass(frozen=True)
class SchemaRegistry:
    entities: tuple[EntitySpec, ...]
    relations: tuple[str, ...] = RELATIONS
    operators: tuple[str, ...] = OPERATORS
    roles: tuple[str, ...] = ROLES
    ranking_metrics: tuple[str, ...] = ("crash_count",)
    version: str = "1"

    def __post_init__(self):
        seen = set()
        for e in self.entities:
            if e.name in seen:
                raise SchemaConflictError(f"duplicate entity {e.name!r}")
            seen.add(e.name)
        if tuple(self.relations) != RELATIONS:
            raise SchemaConflictError("relations set must exactly match the supported four")
        if tuple(self.operators) != OPERATORS:
            raise SchemaConflictError("operators set must exactly match the supported nine")
        if tuple(self.roles) != ROLES:
            raise SchemaConflictError("roles set must exactly match the supported five")
        if not self.ranking_metrics:
            raise SchemaConflictError("ranking_metrics must not be empty")

    def entity(self, name: str) -> EntitySpec | None:
        for e in self.entities:
            if e.name == name:
                return e
        return None

    def entity_names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.entities)


def load_registry(document: str) -> SchemaRegistry:
    """Parse a YAML registry document into a SchemaRegistry."""
    try:
        raw = yaml.safe_load(io.StringIO(document))
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise RegistryError(f"malformed registry document{where}: {exc}") from exc
    if not isinstance(raw, dict):
        raise RegistryError("registry document must be a mapping")

    unknown = set(raw) - {"version", "entities", "relations", "operators", "roles", "ranking_metrics"}
    if unknown:
        raise RegistryError(f"unknown registry keys: {sorted(unknown)}")

    entities = []
    for ent in raw.get("entities") or []:
        if not isinstance(ent, dict):
            raise RegistryError(f"entity entry must be a mapping, got {type(ent).__name__}")
        bad = set(ent) - {"name", "geometry", "scope_capable", "anchor_capable", "fields"}
        if bad:
            raise RegistryError(f"entity {ent.get('name')!r}: unknown keys {sorted(bad)}")
        fields = []
        for fld in ent.get("fields") or []:
            bad = set(fld) - {"name", "kind", "values", "unit", "nullable"}
            if bad:
                raise RegistryError(f"field {fld.get('name')!r}: unknown keys {sorted(bad)}")
            fields.append(
                FieldSpec(
                    name=str(fld["name"]),
                    value_kind=str(fld["kind"]),
                    canonical_values=tuple(str(v) for v in fld.get("values") or ()),
                    unit=fld.get("unit"),
                    nullable=bool(fld.get("nullable", False)),
                )
            )
        entities.append(
            EntitySpec(
                name=str(ent["name"]),
                geometry_kind=str(ent["geometry"]),
                fields=tuple(fields),
                scope_capable=bool(ent.get("scope_capable", False)),
                anchor_capable=bool(ent.get("anchor_capable", False)),
            )
        )

    kwargs = {}
    for key in ("relations", "operators", "roles", "ranking_metrics"):
        if key in raw:
            kwargs[key] = tuple(str(v) for v in raw[key])
    return SchemaRegistry(
        entities=tuple(entities),
        version=str(raw.get("version", "1")),
        **kwargs,
    )


def serialize_registry(registry: SchemaRegistry) -> str:
    """YAML text that load_registry() maps back to an identical registry."""
    doc = {
        "version": registry.version,
        "entities": [
            {
                "name": e.name,
                "geometry": e.geometry_kind,
                "scope_capable": e.scope_capable,
                "anchor_capable": e.anchor_capable,
                "fields": [
                    _field_doc(f) for f in e.fields
                ],
            }
            for e in registry.entities
        ],
        "relations": list(registry.relations),
        "operators": list(registry.operators),
        "roles": list(registry.roles),
        "ranking_metrics": list(registry.ranking_metrics),
    }
    return yaml.safe_dump(doc, sort_keys=False, allow_unicode=True)


def _field_doc(f: FieldSpec) -> dict:
    doc: dict = {"name": f.name, "kind": f.value_kind}
    if f.canonical_values:
        doc["values"] = list(f.canonical_values)
    if f.unit is not None:
        doc["unit"] = f.unit
    if f.nullable:
        doc["nullable"] = True
    return doc


def load_registry_file(path) -> SchemaRegistry:
    with open(path, "r", encoding="utf-8") as fh:
        return load_registry(fh.read())


def default_registry() -> SchemaRegistry:
    """The shipped registry (six entities per the supported-schema table)."""
    from importlib.resources import files

    return load_registry(files("crashquery.data").joinpath("registry.yaml").read_text("utf-8"))


def validate_field_value(registry: SchemaRegistry, entity: str, fieldname: str, value) -> tuple[bool, str | None]:
    """Total check that value conforms to the field's kind and canonical set."""
    ent = registry.entity(entity)
    if ent is None:
        return False, f"unknown entity {entity!r}"
    spec = ent.field(fieldname)
    if spec is None:
        return False, f"unknown field for entity: {entity}.{fieldname}"
    return check_value_kind(spec, value)


def check_value_kind(spec: FieldSpec, value) -> tuple[bool, str | None]:
    if value is None:
        if spec.nullable:
            return True, None
        return False, f"field {spec.name!r} is not nullable"
    kind = spec.value_kind
    if kind == "categorical":
        if not isinstance(value, str):
            return False, f"categorical field {spec.name!r} needs a string value"
        if value not in spec.canonical_values:
            return False, f"not a canonical value for {spec.name!r}: {value!r}"
        return True, None
    if kind == "numeric":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return False, f"numeric field {spec.name!r} needs a number"
        return True, None
    if kind == "date":
        if not _is_iso_date(value):
            return False, f"date field {spec.name!r} needs an ISO date (YYYY-MM-DD)"
        return True, None
    if kind == "time_of_day":
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            return False, f"time field {spec.name!r} needs minutes since midnight"
        if not (0 <= float(value) < 1440):
            return False, f"time field {spec.name!r} must be in [0, 1440) minutes"
        return True, None
    # text
    if not isinstance(value, str):
        return False, f"text field {spec.name!r} needs a string value"
    return True, None


def _is_iso_date(value) -> bool:
    if not isinstance(value, str):
        return False
    import datetime

    try:
        datetime.date.fromisoformat(value)
    except ValueError:
        return False
    return True
