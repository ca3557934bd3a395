"""Deterministic evaluation of checked execution graphs against a dataset.

Record streams stay sorted by record id end to end; every tie (nearest
targets, snap assignments, ranking rows) breaks toward the smaller id, so
identical (graph, dataset) pairs always produce identical results.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np

from .frames import AttributeConstraint, RankingSpec, RelationLink, SemanticFrame, SpatialConstraint
from .geo import kernels
from .geo.geometry import Geometry
from .geo.store import Dataset, EntityRecord, ExecutionDataError, pack_geometry
from .graph import ExecGraph, check_graph, topo_order

_M_PER_DEG_LAT = kernels.EARTH_RADIUS_M * np.pi / 180.0


class ExecutionTypeError(RuntimeError):
    """Operator or relation applied to an incompatible geometry/value kind."""


@dataclass
class NodeProvenance:
    node_id: str
    kind: str
    input_sizes: list[int]
    output_size: int
    elapsed_ms: float

    def to_obj(self) -> dict:
        return {"node_id": self.node_id, "kind": self.kind,
                "input_sizes": self.input_sizes, "output_size": self.output_size,
                "elapsed_ms": round(self.elapsed_ms, 3)}


@dataclass
class RankRow:
    record_id: str
    name: str
    value: float

    def to_obj(self) -> dict:
        return {"id": self.record_id, "name": self.name, "value": self.value}


@dataclass
class ResultSet:
    role_records: dict[str, list[EntityRecord]]
    ranking_rows: list[RankRow] | None
    provenance: list[NodeProvenance]
    dataset_version: str
    frame_echo: SemanticFrame | None = None

    def summary_counts(self) -> dict[str, int]:
        return {role: len(records) for role, records in self.role_records.items()}


def execute(graph: ExecGraph, dataset: Dataset,
            frame_echo: SemanticFrame | None = None) -> ResultSet:
    """Evaluate nodes in dependency order; graph must pass check_graph first."""
    faults = check_graph(graph)
    if faults:
        raise ValueError(f"graph failed structural checks: {faults[:3]}")

    values: dict[str, object] = {}
    provenance: list[NodeProvenance] = []
    bundle: dict[str, list[EntityRecord]] | None = None
    ranking: list[RankRow] | None = None

    for nid in topo_order(graph):
        node = graph.nodes[nid]
        ins = [values[i] for i in node.inputs]
        t0 = time.perf_counter()
        out = _eval_node(node, ins, dataset)
        elapsed = (time.perf_counter() - t0) * 1000.0
        values[nid] = out
        provenance.append(NodeProvenance(
            node_id=nid, kind=node.kind,
            input_sizes=[_size(v) for v in ins],
            output_size=_size(out), elapsed_ms=elapsed,
        ))
        if node.kind == "role_materialize":
            bundle = out
        if node.kind == "rank":
            ranking = out

    return ResultSet(
        role_records=bundle or {},
        ranking_rows=ranking,
        provenance=provenance,
        dataset_version=dataset.version,
        frame_echo=frame_echo,
    )


def _size(v) -> int:
    if v is None:
        return 0
    if isinstance(v, dict):
        return sum(len(x) if isinstance(x, list) else 1 for x in v.values())
    return len(v)


def _eval_node(node, ins, dataset: Dataset):
    kind = node.kind
    p = node.params
    if kind == "entity_load":
        return _load(p, dataset)
    if kind == "attribute_filter":
        constraint = AttributeConstraint(
            target_role=p["role"], field=p["field"], operator=p["operator"],
            value=tuple(p["value"]) if isinstance(p.get("value"), list) else p.get("value"),
        )
        return eval_attribute_filter(constraint, ins[0])
    if kind == "scope_constraint":
        return _scope_filter(ins[0], ins[1])
    if kind == "spatial_match":
        constraint = SpatialConstraint(
            relation=p["relation"], target_role=p["target_role"],
            reference_role=p["reference_role"], distance_m=p.get("distance_m"),
        )
        return eval_spatial_match(constraint, ins[0], ins[1])
    if kind == "relation_snap":
        link = RelationLink(kind=p["kind"], from_role=p["from_role"],
                            to_role=p["to_role"], tolerance_m=p["tolerance_m"])
        return eval_relation_snap(link, ins[0], ins[1])
    if kind == "aggregate":
        return _aggregate(p, ins)
    if kind == "rank":
        spec = RankingSpec(metric=p["metric"], target_role=p["target_role"],
                           order=p["order"], top_n=p["top_n"])
        counts = ins[0]
        return eval_rank(spec, counts["records"], counts["counts"])
    if kind == "role_materialize":
        return {role: records for role, records in zip(p["roles"], ins)}
    if kind in ("output_map", "output_table", "output_summary"):
        return None
    raise ValueError(f"unknown node kind {kind!r}")


def _load(p, dataset: Dataset) -> list[EntityRecord]:
    entity = p["entity"]
    role = p["role"]
    if role == "anchor":
        return [
            EntityRecord(
                id=f"anchor-{i:02d}", entity=entity,
                geometry=Geometry("point", tuple(a["location"])),
                attributes={"name": a["name"]},
            )
            for i, a in enumerate(p.get("anchors", []))
        ]
    records = dataset.records(entity)  # raises ExecutionDataError when absent
    if role == "scope" and p.get("names"):
        names = set(p["names"])
        selected = [r for r in records if r.attributes.get("name") in names]
        found = {r.attributes.get("name") for r in selected}
        missing = names - found
        if missing:
            raise ExecutionDataError(
                f"no {entity} named {sorted(missing)} in dataset")
        return selected
    return records


# ---------------------------------------------------------------------------
# geometry helpers over record streams

def _points_array(records: list[EntityRecord]) -> np.ndarray | None:
    if not all(r.geometry.kind == "point" for r in records):
        return None
    if not records:
        return np.empty((0, 2))
    return np.asarray([r.geometry.coords for r in records], dtype=np.float64)


def _pair_dist(a: EntityRecord, b: EntityRecord) -> float:
    av, ap, ak = pack_geometry(a.geometry)
    bv, bp, bk = pack_geometry(b.geometry)
    return float(kernels.geom_geom_dist_m(av, ap, ak, bv, bp, bk))


def _bbox_gap_lower_bound_m(a, b) -> float:
    """Cheap lower bound of separation from bboxes; 0 when they overlap."""
    a0, a1, a2, a3 = a
    b0, b1, b2, b3 = b
    dlon = max(b0 - a2, a0 - b2, 0.0)
    dlat = max(b1 - a3, a1 - b3, 0.0)
    max_abs_lat = max(abs(a1), abs(a3), abs(b1), abs(b3))
    cos_lat = max(np.cos(np.radians(max_abs_lat)), 1e-6)
    return float(np.hypot(dlon * cos_lat, dlat) * _M_PER_DEG_LAT)


def _min_dist_records(targets, references) -> np.ndarray:
    """Min distance (m) from each target record to any reference record."""
    out = np.full(len(targets), np.inf)
    if not targets or not references:
        return out
    t_pts = _points_array(targets)
    r_pts = _points_array(references)
    if t_pts is not None and r_pts is not None:
        return kernels.points_to_points_mindist(t_pts, r_pts)
    if t_pts is not None:
        for ref in references:
            rv, rp, rk = pack_geometry(ref.geometry)
            out = np.minimum(out, kernels.points_to_geom_dist(t_pts, rv, rp, rk))
        return out
    if r_pts is not None:
        for i, t in enumerate(targets):
            tv, tp, tk = pack_geometry(t.geometry)
            out[i] = kernels.points_to_geom_dist(r_pts, tv, tp, tk).min()
        return out
    t_boxes = [t.geometry.bbox() for t in targets]
    r_boxes = [r.geometry.bbox() for r in references]
    for i, t in enumerate(targets):
        best = np.inf
        for j, r in enumerate(references):
            if _bbox_gap_lower_bound_m(t_boxes[i], r_boxes[j]) >= best:
                continue
            d = _pair_dist(t, r)
            if d < best:
                best = d
        out[i] = best
    return out


def _within_mask(targets, references, dist_m: float) -> np.ndarray:
    mask = np.zeros(len(targets), dtype=bool)
    if not targets or not references:
        return mask
    t_pts = _points_array(targets)
    r_pts = _points_array(references)
    if t_pts is not None and r_pts is not None:
        return np.asarray(kernels.points_to_points_mask(t_pts, r_pts, float(dist_m)))
    if t_pts is not None:
        for ref in references:
            rv, rp, rk = pack_geometry(ref.geometry)
            mask |= kernels.points_to_geom_dist(t_pts, rv, rp, rk) <= dist_m
        return mask
    return _min_dist_records(targets, references) <= dist_m


def _polygon_contains_points_mask(poly: Geometry, pts: np.ndarray) -> np.ndarray:
    verts, parts, _ = pack_geometry(poly)
    return np.asarray(kernels.points_in_rings_mask(pts, verts, parts))


def _record_in_polygon(rec: EntityRecord, poly: Geometry) -> bool:
    if rec.geometry.kind == "point":
        pts = np.asarray([rec.geometry.coords])
        return bool(_polygon_contains_points_mask(poly, pts)[0])
    # all vertices inside (boundary-inclusive) counts as contained
    pts = rec.geometry.vertex_array()
    return bool(_polygon_contains_points_mask(poly, pts).all())


def _scope_filter(records, scope_records) -> list[EntityRecord]:
    """Points by containment, lines/polygons by geometric intersection."""
    if not records or not scope_records:
        return []
    pts = _points_array(records)
    keep = np.zeros(len(records), dtype=bool)
    for scope in scope_records:
        if scope.geometry.kind != "polygon":
            raise ExecutionTypeError(f"scope record {scope.id} is not a polygon")
        if pts is not None:
            keep |= _polygon_contains_points_mask(scope.geometry, pts)
        else:
            sv, sp, sk = pack_geometry(scope.geometry)
            for i, rec in enumerate(records):
                if keep[i]:
                    continue
                rv, rp, rk = pack_geometry(rec.geometry)
                keep[i] = kernels.geom_geom_dist_m(rv, rp, rk, sv, sp, sk) == 0.0
    return [r for r, k in zip(records, keep) if k]


# ---------------------------------------------------------------------------
# spec operations

def eval_spatial_match(constraint: SpatialConstraint, targets: list[EntityRecord],
                       references: list[EntityRecord]) -> list[EntityRecord]:
    rel = constraint.relation
    if rel == "within_distance":
        mask = _within_mask(targets, references, float(constraint.distance_m))
        return [t for t, m in zip(targets, mask) if m]
    if rel == "intersects":
        mask = _within_mask(targets, references, 0.0)
        return [t for t, m in zip(targets, mask) if m]
    if rel == "contains":
        return _eval_contains(targets, references)
    if rel == "nearest_to":
        return _eval_nearest(targets, references)
    raise ExecutionTypeError(f"unknown relation {rel!r}")


def _eval_contains(targets, references) -> list[EntityRecord]:
    if not targets or not references:
        return []
    t_kind = targets[0].geometry.kind
    r_kind = references[0].geometry.kind
    if t_kind == "polygon":
        out = []
        for t in targets:
            if any(_record_in_polygon(r, t.geometry) for r in references):
                out.append(t)
        return out
    if t_kind == "point" and r_kind == "polygon":
        pts = _points_array(targets)
        keep = np.zeros(len(targets), dtype=bool)
        for r in references:
            keep |= _polygon_contains_points_mask(r.geometry, pts)
        return [t for t, k in zip(targets, keep) if k]
    raise ExecutionTypeError(
        f"contains is undefined for {t_kind} targets vs {r_kind} references")


def _eval_nearest(targets, references) -> list[EntityRecord]:
    """For each reference, its nearest target (ties to the smaller id)."""
    if not targets or not references:
        return []
    picked_ids = set()
    t_pts = _points_array(targets)
    for ref in references:
        if t_pts is not None:
            rv, rp, rk = pack_geometry(ref.geometry)
            dists = kernels.points_to_geom_dist(t_pts, rv, rp, rk)
        else:
            dists = _min_dist_records(targets, [ref])
        best = int(np.argmin(dists))  # first minimum = smallest id (sorted streams)
        picked_ids.add(targets[best].id)
    return [t for t in targets if t.id in picked_ids]


def eval_attribute_filter(constraint: AttributeConstraint,
                          records: list[EntityRecord]) -> list[EntityRecord]:
    op = constraint.operator
    fieldname = constraint.field
    value = constraint.value
    out = []
    for rec in records:
        actual = rec.attributes.get(fieldname)
        if _attr_match(op, actual, value, fieldname):
            out.append(rec)
    return out


def _attr_match(op: str, actual, expected, fieldname: str) -> bool:
    if op == "is_null":
        return actual is None
    if op == "not_null":
        return actual is not None
    if actual is None:
        return False  # null fails all non-null operators
    if op == "eq":
        return actual == expected
    if op == "in":
        return actual in expected
    if op in ("gt", "gte", "lt", "lte"):
        _check_comparable(actual, expected, fieldname)
        if op == "gt":
            return actual > expected
        if op == "gte":
            return actual >= expected
        if op == "lt":
            return actual < expected
        return actual <= expected
    if op == "between":
        low, high = expected
        _check_comparable(actual, low, fieldname)
        return low <= actual <= high
    raise ExecutionTypeError(f"unknown operator {op!r}")


def _check_comparable(actual, expected, fieldname: str) -> None:
    a_num = isinstance(actual, (int, float)) and not isinstance(actual, bool)
    e_num = isinstance(expected, (int, float)) and not isinstance(expected, bool)
    if a_num != e_num:
        raise ExecutionTypeError(
            f"ordering comparison between {type(actual).__name__} and "
            f"{type(expected).__name__} on field {fieldname!r}")


def eval_relation_snap(link: RelationLink, points: list[EntityRecord],
                       lines: list[EntityRecord]) -> dict[str, str]:
    """point record id -> nearest line record id within tolerance."""
    if not points or not lines:
        return {}
    if not all(r.geometry.kind == "point" for r in points):
        raise ExecutionTypeError("snap expects point records on the from side")
    if not all(r.geometry.kind == "polyline" for r in lines):
        raise ExecutionTypeError("snap expects polyline records on the to side")
    p_xy = _points_array(points)
    seg_a, seg_b, seg_c, seg_line = [], [], [], []
    for li, line in enumerate(lines):  # lines sorted by id: ties -> smaller id
        verts = line.geometry.coords
        box = line.geometry.bbox()
        center = (0.5 * (box[0] + box[2]), 0.5 * (box[1] + box[3]))
        for i in range(len(verts) - 1):
            seg_a.append(verts[i])
            seg_b.append(verts[i + 1])
            seg_c.append(center)
            seg_line.append(li)
    assigned = kernels.snap_points_to_lines(
        p_xy,
        np.asarray(seg_a), np.asarray(seg_b), np.asarray(seg_c),
        np.asarray(seg_line, dtype=np.int64), len(lines), float(link.tolerance_m),
    )
    return {points[i].id: lines[int(li)].id for i, li in enumerate(assigned) if li >= 0}


def _aggregate(p: dict, ins) -> dict:
    primaries: list[EntityRecord] = ins[0]
    supports: list[EntityRecord] = ins[1]
    attribution = p["attribution"]
    counts = {rec.id: 0 for rec in primaries}

    if attribution == "snap":
        snap_map: dict[str, str] = ins[2]
        for line_id in snap_map.values():
            if line_id in counts:
                counts[line_id] += 1
    elif attribution == "containment":
        s_pts = _points_array(supports)
        for rec in primaries:
            if rec.geometry.kind != "polygon":
                raise ExecutionTypeError("containment attribution needs polygon primaries")
            if s_pts is None:
                counts[rec.id] = sum(
                    1 for s in supports
                    if _pair_dist(s, rec) == 0.0
                )
            elif len(supports):
                counts[rec.id] = int(_polygon_contains_points_mask(rec.geometry, s_pts).sum())
    elif attribution == "constraint":
        relation = p["relation"]
        dist = p.get("distance_m")
        direction = p["direction"]
        s_pts = _points_array(supports)
        for rec in primaries:
            if relation in ("within_distance", "intersects"):
                d = float(dist) if relation == "within_distance" else 0.0
                if s_pts is not None and len(supports):
                    rv, rp, rk = pack_geometry(rec.geometry)
                    counts[rec.id] = int((kernels.points_to_geom_dist(s_pts, rv, rp, rk) <= d).sum())
                else:
                    counts[rec.id] = int(_within_mask(supports, [rec], d).sum())
            elif relation == "contains":
                if direction == "support_to_primary":
                    matched = _eval_contains(supports, [rec])
                else:
                    matched = [s for s in supports if _eval_contains([rec], [s])]
                counts[rec.id] = len(matched)
            else:
                raise ExecutionTypeError(f"relation {relation!r} cannot drive counting")
    else:
        raise ExecutionTypeError(f"unknown attribution {attribution!r}")

    return {"records": primaries, "counts": counts}


def eval_rank(spec: RankingSpec, primaries: list[EntityRecord],
              counts: dict[str, int]) -> list[RankRow]:
    """Order primaries by metric (ties to smaller id), truncate to top_n."""
    reverse = spec.order == "highest"

    def key(rec: EntityRecord):
        value = counts.get(rec.id, 0)
        return (-value if reverse else value, rec.id)

    ordered = sorted(primaries, key=key)
    return [
        RankRow(record_id=rec.id, name=rec.display_name(), value=counts.get(rec.id, 0))
        for rec in ordered[: spec.top_n]
    ]
