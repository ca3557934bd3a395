// Execution-DAG inspector: layered node-edge diagram from the service's
// graph export, plus per-node provenance sizes and timings.

import type { Graph, GraphNode, Provenance } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export interface LayoutNode {
  node: GraphNode;
  depth: number;
  row: number;
}

/** Layer nodes by dependency depth (inputs strictly to the left). */
export function layoutGraph(graph: Graph): LayoutNode[] {
  const byId = new Map(graph.nodes.map((n) => [n.id, n]));
  const depth = new Map<string, number>();
  const resolve = (id: string, seen: Set<string>): number => {
    const cached = depth.get(id);
    if (cached !== undefined) return cached;
    if (seen.has(id)) return 0; // cycles cannot come from the service; be safe
    seen.add(id);
    const node = byId.get(id);
    const d = node && node.inputs.length
      ? 1 + Math.max(...node.inputs.map((i) => resolve(i, seen)))
      : 0;
    depth.set(id, d);
    return d;
  };
  for (const node of graph.nodes) resolve(node.id, new Set());
  const rows = new Map<number, number>();
  const out: LayoutNode[] = [];
  for (const node of graph.nodes) {
    const d = depth.get(node.id) ?? 0;
    const row = rows.get(d) ?? 0;
    rows.set(d, row + 1);
    out.push({ node, depth: d, row });
  }
  return out;
}

export function nodeLabel(node: GraphNode): string {
  const p = node.params;
  switch (node.kind) {
    case "entity_load":
      return `load ${p["entity"]} (${p["role"]})`;
    case "attribute_filter":
      return `filter ${p["field"]} ${p["operator"]}`;
    case "scope_constraint":
      return `scope ${p["role"]}`;
    case "spatial_match":
      return p["distance_m"] !== undefined
        ? `${p["relation"]} ${p["distance_m"]}m`
        : String(p["relation"]);
    case "relation_snap":
      return `snap tol=${p["tolerance_m"]}m`;
    case "aggregate":
      return `count by ${p["attribution"]}`;
    case "rank":
      return `rank ${p["order"]} top ${p["top_n"]}`;
    case "role_materialize":
      return "materialize";
    default:
      return node.kind.replace("output_", "");
  }
}

const BOX_W = 132;
const BOX_H = 34;
const GAP_X = 52;
const GAP_Y = 14;

export function renderGraph(doc: Document, graph: Graph,
                            provenance: Provenance[] = []): SVGSVGElement {
  const layout = layoutGraph(graph);
  const byId = new Map(layout.map((l) => [l.node.id, l]));
  const sizes = new Map(provenance.map((p) => [p.node_id, p]));
  const cols = 1 + Math.max(0, ...layout.map((l) => l.depth));
  const rows = 1 + Math.max(0, ...layout.map((l) => l.row));
  const width = cols * (BOX_W + GAP_X) + GAP_X;
  const height = rows * (BOX_H + GAP_Y) + GAP_Y + 20;

  const svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "graph-view");

  const pos = (l: LayoutNode): [number, number] => [
    GAP_X + l.depth * (BOX_W + GAP_X),
    GAP_Y + l.row * (BOX_H + GAP_Y),
  ];

  for (const l of layout) {
    const [x, y] = pos(l);
    for (const input of l.node.inputs) {
      const from = byId.get(input);
      if (!from) continue;
      const [fx, fy] = pos(from);
      const edge = doc.createElementNS(SVG_NS, "line");
      edge.setAttribute("x1", String(fx + BOX_W));
      edge.setAttribute("y1", String(fy + BOX_H / 2));
      edge.setAttribute("x2", String(x));
      edge.setAttribute("y2", String(y + BOX_H / 2));
      edge.setAttribute("class", "graph-edge");
      edge.setAttribute("stroke", "#999");
      svg.appendChild(edge);
    }
  }
  for (const l of layout) {
    const [x, y] = pos(l);
    const group = doc.createElementNS(SVG_NS, "g");
    group.setAttribute("class", `graph-node kind-${l.node.kind}`);
    group.setAttribute("data-node-id", l.node.id);
    const rect = doc.createElementNS(SVG_NS, "rect");
    rect.setAttribute("x", String(x));
    rect.setAttribute("y", String(y));
    rect.setAttribute("width", String(BOX_W));
    rect.setAttribute("height", String(BOX_H));
    rect.setAttribute("rx", "5");
    rect.setAttribute("fill", l.node.kind.startsWith("output_") ? "#e8f0e8" : "#eef2f7");
    rect.setAttribute("stroke", "#5b7089");
    const label = doc.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(x + 7));
    label.setAttribute("y", String(y + 15));
    label.setAttribute("font-size", "10");
    label.textContent = nodeLabel(l.node);
    group.append(rect, label);
    const prov = sizes.get(l.node.id);
    if (prov) {
      const meta = doc.createElementNS(SVG_NS, "text");
      meta.setAttribute("x", String(x + 7));
      meta.setAttribute("y", String(y + 28));
      meta.setAttribute("font-size", "9");
      meta.setAttribute("fill", "#667");
      meta.textContent = `${prov.input_sizes.join("+") || "-"} → ${prov.output_size} · ${prov.elapsed_ms.toFixed(1)}ms`;
      group.appendChild(meta);
    }
    svg.appendChild(group);
  }
  return svg;
}
