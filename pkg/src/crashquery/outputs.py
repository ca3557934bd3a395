"""Result rendering: GeoJSON map bundles, ranked tables, NL frame summaries.

Everything here is a pure function of its inputs and template-based on
purpose: the summary exists so users can verify what was executed, so no
generative model is ever involved in producing it.
"""

from __future__ import annotations

import csv
import io
import json
import re

from .executor import ResultSet
from .frames import SemanticFrame
from .geo.geometry import merge_bboxes
from .repair import RepairReport

# map styling hints per role, consumed by the console and the HTML viewer
_ROLE_STYLE = {
    "primary": {"color": "#d7263d", "weight": 2},
    "support": {"color": "#1b6ca8", "weight": 2},
    "scope": {"color": "#3a7d44", "weight": 1, "fill": False},
    "anchor": {"color": "#f4a259", "weight": 3},
    "filter": {"color": "#7b2d8b", "weight": 2},
}

ROLE_ORDER = ("primary", "support", "scope", "anchor", "filter")


def render_map(result: ResultSet) -> str:
    """GeoJSON FeatureCollection with role/entity/rank properties; deterministic."""
    rank_index = {}
    if result.ranking_rows is not None:
        for i, row in enumerate(result.ranking_rows, start=1):
            rank_index[row.record_id] = (i, row.value)

    features = []
    boxes = []
    for role in ROLE_ORDER:
        records = result.role_records.get(role)
        if not records:
            continue
        for rec in records:
            props = {
                "id": rec.id,
                "entity": rec.entity,
                "role": role,
                "style": _ROLE_STYLE.get(role, {}),
            }
            for key, value in sorted(rec.attributes.items()):
                if value is not None:
                    props[key] = value
            if rec.id in rank_index:
                props["rank"], props["metric_value"] = rank_index[rec.id]
            features.append({
                "type": "Feature",
                "id": rec.id,
                "geometry": rec.geometry.to_geojson(),
                "properties": props,
            })
            boxes.append(rec.geometry.bbox())

    metadata = {
        "dataset_version": result.dataset_version,
        "counts": result.summary_counts(),
    }
    if boxes:
        metadata["bbox"] = list(merge_bboxes(boxes))
    if result.frame_echo is not None:
        from .frames import frame_to_obj

        metadata["frame"] = frame_to_obj(result.frame_echo)
    doc = {"type": "FeatureCollection", "metadata": metadata, "features": features}
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


def render_table(result: ResultSet, fmt: str = "csv") -> str:
    """Ranking rows when present, otherwise a full primary-record export."""
    if fmt not in ("csv", "json"):
        raise ValueError(f"unsupported table format {fmt!r}")
    if result.ranking_rows is not None:
        header = ["rank", "id", "name", "crash_count"]
        rows = [
            [i, row.record_id, row.name, row.value]
            for i, row in enumerate(result.ranking_rows, start=1)
        ]
    else:
        records = result.role_records.get("primary", [])
        fields = sorted({k for rec in records for k in rec.attributes})
        header = ["id"] + fields
        rows = [[rec.id] + [_cell(rec.attributes.get(f)) for f in fields] for rec in records]

    if fmt == "json":
        return json.dumps([dict(zip(header, row)) for row in rows],
                          sort_keys=True, separators=(",", ":"))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _cell(v):
    return "" if v is None else v


def summarize_frame(frame: SemanticFrame, report: RepairReport | None = None) -> str:
    """One-paragraph NL restatement of the executed intent plus repair notes."""
    role_entity = {t.role: t.entity for t in frame.targets}
    parts: list[str] = []

    if frame.ranking is not None:
        rk = frame.ranking
        subject = f"Ranking the top {rk.top_n} {role_entity.get(rk.target_role, rk.target_role)}"
        if rk.order == "lowest":
            subject = f"Ranking the bottom {rk.top_n} {role_entity.get(rk.target_role, rk.target_role)}"
        measure = role_entity.get("support", "support")
        parts.append(f"{subject} by {rk.metric} of {measure}")
    else:
        parts.append(f"Showing {role_entity.get('primary', 'records')}")

    clauses: list[str] = []
    for c in frame.attribute_constraints:
        clauses.append(f"{c.field} {_op_text(c.operator)} {_value_text(c.value)}")
    if clauses:
        parts.append("where " + " and ".join(clauses))

    for c in frame.spatial_constraints:
        if c.relation == "within_distance":
            ref = _role_text(frame, role_entity, c.reference_role)
            parts.append(f"within {_m(c.distance_m)} of {ref}")
        elif c.relation == "intersects":
            parts.append(f"intersecting {_role_text(frame, role_entity, c.reference_role)}")
        elif c.relation == "contains":
            parts.append(f"containing {_role_text(frame, role_entity, c.reference_role)}")
        else:
            parts.append(f"nearest to {_role_text(frame, role_entity, c.reference_role)}")

    scope_refs = frame.references_for_role("scope")
    if scope_refs:
        parts.append("scoped to " + " and ".join(r.name for r in scope_refs))

    summary = ", ".join(parts) + "."
    if report is not None:
        for action in report.actions:
            summary += " " + _repair_sentence(frame, action)
    return summary


def _repair_sentence(frame: SemanticFrame, action) -> str:
    if action.kind == "anchor_resolution":
        name = _reference_name(frame, action.path)
        lon, lat = action.after[0], action.after[1]
        return f"Resolved '{name}' to ({_num(lon)}, {_num(lat)})."
    if action.kind == "structural":
        what = action.before if isinstance(action.before, dict) else {}
        if action.rule_id == "spurious_target":
            return f"Removed unused {what.get('role', 'target')} ({what.get('entity', '?')})."
        if action.rule_id.startswith("duplicate"):
            return "Consolidated a duplicate constraint."
        return f"Removed {action.path}."
    after = action.after
    if action.path.endswith("distance_m") or action.path.endswith("tolerance_m"):
        return f"Interpreted {_quote(action.before)} as {_m(after)}."
    return f"Interpreted {_quote(action.before)} as {_quote(after)}."


def _reference_name(frame: SemanticFrame, path: str) -> str:
    m = re.match(r"references\[(\d+)\]", path)
    if m:
        idx = int(m.group(1))
        if idx < len(frame.references):
            return frame.references[idx].name
    return path


def _role_text(frame: SemanticFrame, role_entity: dict, role: str) -> str:
    refs = frame.references_for_role(role)
    if refs:
        return " / ".join(f"'{r.name}'" for r in refs)
    return role_entity.get(role, role)


def _op_text(op: str) -> str:
    return {
        "eq": "=", "in": "in", "gt": ">", "gte": ">=", "lt": "<", "lte": "<=",
        "between": "between", "is_null": "is missing", "not_null": "is present",
    }.get(op, op)


def _value_text(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (list, tuple)):
        return "(" + ", ".join(_value_text(x) for x in v) + ")"
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, (int, float)):
        return _num(v)
    return str(v)


def _quote(v) -> str:
    if isinstance(v, str):
        return f"'{v}'"
    if isinstance(v, dict):
        return json.dumps(v, sort_keys=True)
    return _value_text(v)


def _num(v) -> str:
    f = float(v)
    return str(int(f)) if f == int(f) else str(round(f, 3))


def _m(v) -> str:
    return f"{_num(v)} m"


_HTML_TEMPLATE = """<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<title>crashquery map</title>
<style>
 body { margin: 0; font: 14px system-ui, sans-serif; }
 #meta { padding: 8px 12px; background: #f4f4f4; border-bottom: 1px solid #ddd; }
 svg { display: block; width: 100vw; height: calc(100vh - 80px); background: #fcfcfa; }
 .tip { font-size: 12px; color: #555; }
</style>
</head>
<body>
<div id="meta"></div>
<svg id="map"></svg>
<script>
const DATA = __GEOJSON__;
const svg = document.getElementById("map");
const meta = document.getElementById("meta");
const bbox = (DATA.metadata && DATA.metadata.bbox) || [-73, 42, -72, 43];
meta.innerHTML = "<b>" + DATA.features.length + " features</b> " +
  "<span class='tip'>dataset " + (DATA.metadata || {}).dataset_version + "</span>";
function project(lon, lat, w, h) {
  const pad = 16;
  const kx = (w - 2 * pad) / Math.max(1e-9, bbox[2] - bbox[0]);
  const ky = (h - 2 * pad) / Math.max(1e-9, bbox[3] - bbox[1]);
  const k = Math.min(kx, ky);
  return [pad + (lon - bbox[0]) * k, h - pad - (lat - bbox[1]) * k];
}
function draw() {
  const w = svg.clientWidth, h = svg.clientHeight;
  svg.innerHTML = "";
  for (const f of DATA.features) {
    const style = (f.properties && f.properties.style) || {};
    const color = style.color || "#333";
    const g = f.geometry;
    let el;
    if (g.type === "Point") {
      const [x, y] = project(g.coordinates[0], g.coordinates[1], w, h);
      el = document.createElementNS("http://www.w3.org/2000/svg", "circle");
      el.setAttribute("cx", x); el.setAttribute("cy", y); el.setAttribute("r", 3);
      el.setAttribute("fill", color);
    } else {
      const rings = g.type === "Polygon" ? g.coordinates : [g.coordinates];
      const d = rings.map(ring =>
        ring.map((p, i) => (i ? "L" : "M") + project(p[0], p[1], w, h).join(",")).join(" ")
      ).join(" ");
      el = document.createElementNS("http://www.w3.org/2000/svg", "path");
      el.setAttribute("d", d);
      el.setAttribute("fill", g.type === "Polygon" ? color + "22" : "none");
      el.setAttribute("stroke", color);
    }
    el.appendChild(document.createElementNS("http://www.w3.org/2000/svg", "title"))
      .textContent = JSON.stringify(f.properties, null, 1);
    svg.appendChild(el);
  }
}
window.addEventListener("resize", draw);
draw();
</script>
</body>
</html>
"""


def render_map_html(result: ResultSet) -> str:
    """Self-contained offline HTML viewer around the GeoJSON bundle."""
    return _HTML_TEMPLATE.replace("__GEOJSON__", render_map(result))
