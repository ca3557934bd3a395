// Raw-vs-repaired frame diff: side-by-side JSON plus one highlighted row per
// repair action. Every action in the report must be visible here.

import type { Frame, RepairAction, RepairReport } from "./types.js";

export function annotationText(action: RepairAction): string {
  if (action.kind === "anchor_resolution") {
    const loc = action.after as [number, number];
    return `resolved to (${loc[0]}, ${loc[1]})`;
  }
  if (action.kind === "structural") {
    return `removed: ${formatValue(action.before)}`;
  }
  return `${formatValue(action.before)} → ${formatMeters(action)}`;
}

function formatMeters(action: RepairAction): string {
  if (action.path.endsWith("distance_m") || action.path.endsWith("tolerance_m")) {
    return `${action.after} m`;
  }
  return formatValue(action.after);
}

export function formatValue(value: unknown): string {
  if (value === null || value === undefined) return "∅";
  if (Array.isArray(value)) return `[${value.map(formatValue).join(", ")}]`;
  if (typeof value === "object") return JSON.stringify(value);
  return String(value);
}

export function renderDiff(
  doc: Document,
  raw: Frame,
  repaired: Frame,
  report: RepairReport,
): HTMLElement {
  const root = doc.createElement("div");
  root.className = "frame-diff";

  const actions = doc.createElement("div");
  actions.className = "repair-actions";
  const heading = doc.createElement("h3");
  heading.textContent = report.actions.length
    ? `Repairs applied (${report.actions.length})`
    : "No repairs applied";
  actions.appendChild(heading);
  for (const action of report.actions) {
    const row = doc.createElement("div");
    row.className = `repair-action repair-${action.kind}`;
    const badge = doc.createElement("span");
    badge.className = "badge";
    badge.textContent = action.kind.replace(/_/g, " ");
    const path = doc.createElement("code");
    path.textContent = action.path;
    const text = doc.createElement("span");
    text.className = "annotation";
    text.textContent = annotationText(action);
    row.append(badge, path, text);
    actions.appendChild(row);
  }
  root.appendChild(actions);

  const panels = doc.createElement("div");
  panels.className = "diff-panels";
  panels.append(
    framePanel(doc, "Raw frame (interpreter output)", raw, report, "before"),
    framePanel(doc, "Validated frame (executed)", repaired, report, "after"),
  );
  root.appendChild(panels);
  return root;
}

function framePanel(
  doc: Document,
  title: string,
  frame: Frame,
  report: RepairReport,
  side: "before" | "after",
): HTMLElement {
  const panel = doc.createElement("div");
  panel.className = `frame-panel frame-${side}`;
  const heading = doc.createElement("h4");
  heading.textContent = title;
  const pre = doc.createElement("pre");
  pre.textContent = JSON.stringify(frame, null, 2);
  const touched = new Set(report.actions.map((a) => topLevelKey(a.path)));
  if (touched.size) {
    pre.dataset["touched"] = [...touched].sort().join(",");
  }
  panel.append(heading, pre);
  return panel;
}

function topLevelKey(path: string): string {
  const match = /^([a-z_]+)/.exec(path);
  return match ? match[1] : path;
}
