// SVG map of the service's GeoJSON bundle. Styling is role-based; geometry
// comes straight from the response (no client-side spatial computation --
// only a linear viewport projection for drawing).

import type { MapDocument, MapFeature } from "./types.js";

export const ROLE_COLORS: Record<string, string> = {
  primary: "#d7263d",
  support: "#1b6ca8",
  scope: "#3a7d44",
  anchor: "#f4a259",
  filter: "#7b2d8b",
};

const SVG_NS = "http://www.w3.org/2000/svg";

export interface MapViewOptions {
  width?: number;
  height?: number;
}

export function renderMap(doc: Document, map: MapDocument,
                          options: MapViewOptions = {}): SVGSVGElement {
  const width = options.width ?? 720;
  const height = options.height ?? 520;
  const svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "map-view");

  const bbox = map.metadata?.bbox ?? computeBbox(map.features);
  const project = makeProjection(bbox, width, height);

  // draw polygons first, then lines, then points, so markers stay visible
  const order = { Polygon: 0, LineString: 1, Point: 2 } as Record<string, number>;
  const features = [...map.features].sort(
    (a, b) => (order[a.geometry.type] ?? 3) - (order[b.geometry.type] ?? 3),
  );
  for (const feature of features) {
    svg.appendChild(renderFeature(doc, feature, project));
  }
  return svg;
}

function computeBbox(features: MapFeature[]): number[] {
  let minX = Infinity, minY = Infinity, maxX = -Infinity, maxY = -Infinity;
  const visit = (position: unknown): void => {
    if (Array.isArray(position) && typeof position[0] === "number") {
      const [x, y] = position as number[];
      minX = Math.min(minX, x); maxX = Math.max(maxX, x);
      minY = Math.min(minY, y); maxY = Math.max(maxY, y);
    } else if (Array.isArray(position)) {
      for (const child of position) visit(child);
    }
  };
  for (const feature of features) visit(feature.geometry.coordinates);
  if (!isFinite(minX)) return [-1, -1, 1, 1];
  return [minX, minY, maxX, maxY];
}

type Project = (lon: number, lat: number) => [number, number];

function makeProjection(bbox: number[], width: number, height: number): Project {
  const pad = 18;
  const [minX, minY, maxX, maxY] = bbox;
  const kx = (width - 2 * pad) / Math.max(1e-9, maxX - minX);
  const ky = (height - 2 * pad) / Math.max(1e-9, maxY - minY);
  const k = Math.min(kx, ky);
  return (lon, lat) => [pad + (lon - minX) * k, height - pad - (lat - minY) * k];
}

function renderFeature(doc: Document, feature: MapFeature, project: Project): SVGElement {
  const role = feature.properties.role;
  const color = ROLE_COLORS[role] ?? "#444";
  const geometry = feature.geometry;
  let el: SVGElement;
  if (geometry.type === "Point") {
    const [lon, lat] = geometry.coordinates as [number, number];
    const [x, y] = project(lon, lat);
    el = doc.createElementNS(SVG_NS, "circle");
    el.setAttribute("cx", String(x));
    el.setAttribute("cy", String(y));
    el.setAttribute("r", role === "anchor" ? "6" : "3.2");
    el.setAttribute("fill", color);
  } else {
    const rings = geometry.type === "Polygon"
      ? (geometry.coordinates as number[][][])
      : [geometry.coordinates as number[][]];
    const d = rings
      .map((ring) => ring
        .map((p, i) => `${i ? "L" : "M"}${project(p[0], p[1]).map((v) => v.toFixed(1)).join(",")}`)
        .join(" "))
      .join(" ");
    el = doc.createElementNS(SVG_NS, "path");
    el.setAttribute("d", d);
    el.setAttribute("stroke", color);
    el.setAttribute("fill", geometry.type === "Polygon" ? `${color}1f` : "none");
    el.setAttribute("stroke-width", geometry.type === "Polygon" ? "1.2" : "2");
  }
  el.setAttribute("class", `feature role-${role}`);
  el.setAttribute("data-id", feature.id);
  el.setAttribute("data-entity", feature.properties.entity);
  const rank = feature.properties["rank"];
  if (rank !== undefined) el.setAttribute("data-rank", String(rank));
  const title = doc.createElementNS(SVG_NS, "title");
  title.textContent = `${feature.properties.entity} ${feature.id} (${role})`;
  el.appendChild(title);
  return el;
}

export function renderLegend(doc: Document, map: MapDocument): HTMLElement {
  const legend = doc.createElement("div");
  legend.className = "map-legend";
  const roles = new Map<string, number>();
  for (const feature of map.features) {
    roles.set(feature.properties.role, (roles.get(feature.properties.role) ?? 0) + 1);
  }
  for (const [role, count] of [...roles.entries()].sort()) {
    const item = doc.createElement("span");
    item.className = "legend-item";
    const swatch = doc.createElement("span");
    swatch.className = "swatch";
    swatch.style.backgroundColor = ROLE_COLORS[role] ?? "#444";
    item.append(swatch, doc.createTextNode(` ${role} (${count})`));
    legend.appendChild(item);
  }
  return legend;
}
