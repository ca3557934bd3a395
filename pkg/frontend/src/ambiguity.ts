// Anchor-ambiguity dialog: candidate names with mini-map markers; a pick
// re-submits the query, cancel abandons it.

import type { CandidateGroup } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

export function renderAmbiguityDialog(
  doc: Document,
  groups: CandidateGroup[],
  onPick: (index: number) => void,
  onCancel: () => void,
): HTMLElement {
  const dialog = doc.createElement("div");
  dialog.className = "ambiguity-dialog";

  const heading = doc.createElement("h3");
  const names = groups.map((g) => `'${g.reference}'`).join(", ");
  heading.textContent = `Which ${names} did you mean?`;
  dialog.appendChild(heading);

  const group = groups[0];
  const list = doc.createElement("ul");
  list.className = "candidate-list";
  group.candidates.forEach((candidate, i) => {
    const item = doc.createElement("li");
    const button = doc.createElement("button");
    button.className = "candidate-pick";
    button.dataset["pick"] = String(i);
    button.textContent = `${candidate.name} (${candidate.location[0].toFixed(4)}, ${candidate.location[1].toFixed(4)})`;
    button.addEventListener("click", () => onPick(i));
    item.append(button);
    list.appendChild(item);
  });
  dialog.appendChild(list);
  dialog.appendChild(miniMap(doc, group));

  const cancel = doc.createElement("button");
  cancel.className = "candidate-cancel";
  cancel.textContent = "Cancel";
  cancel.addEventListener("click", onCancel);
  dialog.appendChild(cancel);
  return dialog;
}

function miniMap(doc: Document, group: CandidateGroup): SVGSVGElement {
  const width = 240;
  const height = 150;
  const svg = doc.createElementNS(SVG_NS, "svg") as SVGSVGElement;
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("class", "mini-map");
  const lons = group.candidates.map((c) => c.location[0]);
  const lats = group.candidates.map((c) => c.location[1]);
  const minLon = Math.min(...lons), maxLon = Math.max(...lons);
  const minLat = Math.min(...lats), maxLat = Math.max(...lats);
  const pad = 16;
  const k = Math.min(
    (width - 2 * pad) / Math.max(1e-9, maxLon - minLon),
    (height - 2 * pad) / Math.max(1e-9, maxLat - minLat),
  );
  group.candidates.forEach((candidate, i) => {
    const x = pad + (candidate.location[0] - minLon) * k;
    const y = height - pad - (candidate.location[1] - minLat) * k;
    const marker = doc.createElementNS(SVG_NS, "circle");
    marker.setAttribute("cx", String(x));
    marker.setAttribute("cy", String(y));
    marker.setAttribute("r", "6");
    marker.setAttribute("fill", "#f4a259");
    marker.setAttribute("class", "candidate-marker");
    const label = doc.createElementNS(SVG_NS, "text");
    label.setAttribute("x", String(x + 9));
    label.setAttribute("y", String(y + 4));
    label.setAttribute("font-size", "10");
    label.textContent = String(i);
    svg.append(marker, label);
  });
  return svg;
}
