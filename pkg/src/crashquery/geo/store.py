"""Embedded geospatial store: typed record collections + spatial index.

Replaces an external spatial database with deterministic in-process
equivalents: GeoJSON/CSV ingestion validated against the registry, a static
bbox tree per entity, and meter-accurate geometry predicates built on the
kernel backends.
"""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from ..registry import SchemaRegistry, check_value_kind
from . import kernels
from .geometry import Geometry, from_geojson, merge_bboxes
from .index import BBoxTree

_KIND_CODE = {"point": kernels.KIND_POINT, "polyline": kernels.KIND_POLYLINE, "polygon": kernels.KIND_POLYGON}

# meters per degree of latitude on the kernel sphere
_M_PER_DEG_LAT = kernels.EARTH_RADIUS_M * math.pi / 180.0


class IngestError(ValueError):
    """Rejected ingestion; carries per-feature diagnostics."""

    def __init__(self, entity: str, diagnostics: list[str]):
        self.entity = entity
        self.diagnostics = diagnostics
        preview = "; ".join(diagnostics[:5])
        more = f" (+{len(diagnostics) - 5} more)" if len(diagnostics) > 5 else ""
        super().__init__(f"ingestion of {entity!r} rejected: {preview}{more}")


class ExecutionDataError(RuntimeError):
    """Entity referenced by a query is absent from the dataset."""


@dataclass(frozen=True)
class EntityRecord:
    id: str
    entity: str
    geometry: Geometry
    attributes: dict

    def display_name(self) -> str:
        for key in ("name", "stop_name"):
            val = self.attributes.get(key)
            if isinstance(val, str) and val:
                return val
        return self.id


def pack_geometry(geom: Geometry):
    """(verts, parts, kind_code) arrays for the kernel API."""
    verts = geom.vertex_array()
    if geom.kind == "polygon":
        offsets = [0]
        for ring in geom.rings:
            offsets.append(offsets[-1] + len(ring))
        parts = np.asarray(offsets, dtype=np.int64)
    else:
        parts = np.asarray([0, verts.shape[0]], dtype=np.int64)
    return verts, parts, _KIND_CODE[geom.kind]


def min_distance_m(a: Geometry, b: Geometry) -> float:
    """Minimum separation in meters; 0 when the geometries intersect."""
    av, ap, ak = pack_geometry(a)
    bv, bp, bk = pack_geometry(b)
    return float(kernels.geom_geom_dist_m(av, ap, ak, bv, bp, bk))


def point_in_polygon(p: Geometry, poly: Geometry) -> bool:
    """Even-odd containment, boundary points inside, holes excluded."""
    assert p.kind == "point" and poly.kind == "polygon"
    verts, parts, _ = pack_geometry(poly)
    pts = np.asarray([p.coords], dtype=np.float64)
    return bool(kernels.points_in_rings_mask(pts, verts, parts)[0])


class EntityCollection:
    """Immutable per-entity record set with packed geometry and a bbox tree."""

    def __init__(self, entity: str, records: list[EntityRecord]):
        self.entity = entity
        self.records = sorted(records, key=lambda r: r.id)
        self.packed = [pack_geometry(r.geometry) for r in self.records]
        self.bboxes = [r.geometry.bbox() for r in self.records]
        self.tree = BBoxTree(self.bboxes)
        if self.records and self.records[0].geometry.kind == "point":
            self.lonlat = np.asarray([r.geometry.coords for r in self.records], dtype=np.float64)
        else:
            self.lonlat = None

    def __len__(self) -> int:
        return len(self.records)

    def candidates_within(self, geom: Geometry, radius_m: float) -> list[EntityRecord]:
        """Superset of records within radius_m of geom (bbox prefilter)."""
        idx = self.candidate_indices(geom, radius_m)
        return [self.records[i] for i in idx]

    def candidate_indices(self, geom: Geometry, radius_m: float) -> np.ndarray:
        if not self.records:
            return np.empty(0, dtype=np.int64)
        min_lon, min_lat, max_lon, max_lat = geom.bbox()
        dlat = radius_m / _M_PER_DEG_LAT * 1.05
        max_abs_lat = min(89.9, max(abs(min_lat), abs(max_lat)) + dlat)
        cos_lat = max(math.cos(math.radians(max_abs_lat)), 1e-6)
        dlon = radius_m / (_M_PER_DEG_LAT * cos_lat) * 1.05
        return self.tree.query((min_lon - dlon, min_lat - dlat, max_lon + dlon, max_lat + dlat))


class Dataset:
    """Entity collections validated against a registry; immutable once loaded."""

    def __init__(self, registry: SchemaRegistry):
        self.registry = registry
        self.collections: dict[str, EntityCollection] = {}
        self._version: str | None = None

    # -- ingestion ----------------------------------------------------------

    def ingest_geojson(self, entity: str, document: str) -> int:
        """Validate and index a GeoJSON feature collection; all-or-nothing."""
        spec = self.registry.entity(entity)
        if spec is None:
            raise IngestError(entity, [f"entity {entity!r} not in registry"])
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise IngestError(entity, [f"invalid JSON: {exc}"]) from exc
        if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
            raise IngestError(entity, ["document is not a GeoJSON FeatureCollection"])

        records: list[EntityRecord] = []
        diagnostics: list[str] = []
        seen_ids: set[str] = set()
        for i, feature in enumerate(doc.get("features", [])):
            try:
                rec = self._feature_to_record(spec, feature, i)
            except ValueError as exc:
                diagnostics.append(f"feature {i}: {exc}")
                continue
            if rec.id in seen_ids:
                diagnostics.append(f"feature {i}: duplicate id {rec.id!r}")
                continue
            seen_ids.add(rec.id)
            records.append(rec)
        if diagnostics:
            raise IngestError(entity, diagnostics)
        self._install(entity, records)
        return len(records)

    def ingest_csv(self, entity: str, text: str, lon_column: str = "lon", lat_column: str = "lat") -> int:
        """CSV ingestion for point entities; columns: id, lon, lat, then fields."""
        spec = self.registry.entity(entity)
        if spec is None:
            raise IngestError(entity, [f"entity {entity!r} not in registry"])
        if spec.geometry_kind != "point":
            raise IngestError(entity, [f"CSV ingestion supports point entities only, {entity} is {spec.geometry_kind}"])
        reader = csv.DictReader(io.StringIO(text))
        records: list[EntityRecord] = []
        diagnostics: list[str] = []
        seen: set[str] = set()
        for i, row in enumerate(reader):
            try:
                rid = row.get("id") or f"{entity.lower()}-{i:06d}"
                lon = float(row[lon_column])
                lat = float(row[lat_column])
                attrs = {}
                for f in spec.fields:
                    raw = row.get(f.name)
                    value = _coerce_csv(f, raw)
                    ok, reason = check_value_kind(f, value)
                    if not ok:
                        raise ValueError(reason)
                    attrs[f.name] = value
                if rid in seen:
                    raise ValueError(f"duplicate id {rid!r}")
                seen.add(rid)
                records.append(EntityRecord(rid, entity, Geometry("point", (lon, lat)), attrs))
            except (KeyError, ValueError) as exc:
                diagnostics.append(f"row {i}: {exc}")
        if diagnostics:
            raise IngestError(entity, diagnostics)
        self._install(entity, records)
        return len(records)

    def install_records(self, entity: str, records: list[EntityRecord]) -> None:
        """Install pre-built records (fixture generation path); validates types."""
        spec = self.registry.entity(entity)
        if spec is None:
            raise IngestError(entity, [f"entity {entity!r} not in registry"])
        diagnostics = []
        for rec in records:
            if rec.geometry.kind != spec.geometry_kind:
                diagnostics.append(f"{rec.id}: geometry kind {rec.geometry.kind} != {spec.geometry_kind}")
                continue
            for f in spec.fields:
                ok, reason = check_value_kind(f, rec.attributes.get(f.name))
                if not ok:
                    diagnostics.append(f"{rec.id}: {reason}")
        if diagnostics:
            raise IngestError(entity, diagnostics)
        self._install(entity, records)

    def _install(self, entity: str, records: list[EntityRecord]) -> None:
        self.collections[entity] = EntityCollection(entity, records)
        self._version = None

    def _feature_to_record(self, spec, feature, index: int) -> EntityRecord:
        if not isinstance(feature, dict) or feature.get("type") != "Feature":
            raise ValueError("not a GeoJSON Feature")
        geom_obj = feature.get("geometry")
        if geom_obj is None:
            raise ValueError("missing geometry")
        geom = from_geojson(geom_obj)
        if geom.kind != spec.geometry_kind:
            raise ValueError(f"geometry kind {geom.kind} does not match registry kind {spec.geometry_kind}")
        props = dict(feature.get("properties") or {})
        rid = feature.get("id", props.pop("id", None))
        if rid is None:
            rid = f"{spec.name.lower()}-{index:06d}"
        rid = str(rid)
        known = {f.name for f in spec.fields}
        unknown = set(props) - known
        if unknown:
            raise ValueError(f"unknown properties {sorted(unknown)}")
        attrs = {}
        for f in spec.fields:
            value = props.get(f.name)
            ok, reason = check_value_kind(f, value)
            if not ok:
                raise ValueError(reason)
            attrs[f.name] = value
        return EntityRecord(rid, spec.name, geom, attrs)

    # -- access -------------------------------------------------------------

    def collection(self, entity: str) -> EntityCollection:
        col = self.collections.get(entity)
        if col is None:
            raise ExecutionDataError(f"entity {entity!r} is not loaded in the dataset")
        return col

    def records(self, entity: str) -> list[EntityRecord]:
        return self.collection(entity).records

    def has_entity(self, entity: str) -> bool:
        return entity in self.collections

    @property
    def version(self) -> str:
        """Content hash over all records; recorded in every query audit."""
        if self._version is None:
            h = hashlib.sha256()
            for entity in sorted(self.collections):
                for rec in self.collections[entity].records:
                    h.update(_record_key(rec).encode("utf-8"))
            self._version = h.hexdigest()[:12]
        return self._version

    # -- persistence ---------------------------------------------------------

    def to_geojson(self, entity: str) -> str:
        col = self.collection(entity)
        features = []
        for rec in col.records:
            features.append({
                "type": "Feature",
                "id": rec.id,
                "geometry": rec.geometry.to_geojson(),
                "properties": dict(rec.attributes),
            })
        return json.dumps({"type": "FeatureCollection", "features": features},
                          sort_keys=True, separators=(",", ":"))

    def save_dir(self, path: str) -> None:
        os.makedirs(path, exist_ok=True)
        for entity in sorted(self.collections):
            with open(os.path.join(path, f"{entity}.geojson"), "w", encoding="utf-8") as fh:
                fh.write(self.to_geojson(entity))
        with open(os.path.join(path, "version.txt"), "w", encoding="utf-8") as fh:
            fh.write(self.version + "\n")

    @classmethod
    def load_dir(cls, path: str, registry: SchemaRegistry) -> "Dataset":
        ds = cls(registry)
        for entity in registry.entity_names():
            file_path = os.path.join(path, f"{entity}.geojson")
            if os.path.exists(file_path):
                with open(file_path, "r", encoding="utf-8") as fh:
                    ds.ingest_geojson(entity, fh.read())
        return ds


def _record_key(rec: EntityRecord) -> str:
    return json.dumps(
        {"id": rec.id, "entity": rec.entity, "geometry": rec.geometry.to_geojson(),
         "attributes": rec.attributes},
        sort_keys=True, separators=(",", ":"),
    )


def _coerce_csv(f, raw):
    if raw is None or raw == "":
        return None
    if f.value_kind in ("numeric", "time_of_day"):
        val = float(raw)
        return int(val) if val == int(val) else val
    return raw
