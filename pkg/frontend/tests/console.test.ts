import { describe, expect, it } from "vitest";

import { ApiClient } from "../src/api.js";
import { ConsoleView } from "../src/console.js";
import { ConsoleSession } from "../src/session.js";
import type { QueryResponse } from "../src/types.js";

const RESPONSE = {
  query: "show crashes",
  nl_summary: "Showing Crash.",
  raw_frame: { supported: true, targets: [], references: [], spatial_constraints: [],
               attribute_constraints: [], relations: [] },
  repaired_frame: { supported: true, targets: [], references: [], spatial_constraints: [],
                    attribute_constraints: [], relations: [] },
  repair_report: { repaired: false, actions: [], rejected: null },
  graph_audit_text: "n01: entity_load Crash role=primary",
  graph: { nodes: [{ id: "n01_entity_load", kind: "entity_load",
                     params: { entity: "Crash", role: "primary" }, inputs: [] }],
           outputs: [] },
  result_counts: { primary: 3 },
  ranking: [{ id: "s1", name: "A School", value: 2 }],
  provenance: [],
  nl_summary_counts: undefined,
  dataset_version: "abc",
  timings_ms: {},
  map: { type: "FeatureCollection", features: [
    { type: "Feature", id: "c1", geometry: { type: "Point", coordinates: [-72.5, 42.4] },
      properties: { role: "primary", entity: "Crash" } },
  ] },
  table_csv: "rank,id,name,crash_count\n",
} as unknown as QueryResponse;

function makeView(response: unknown = RESPONSE, status = 200) {
  const api = new ApiClient("http://svc", async () =>
    new Response(JSON.stringify(response), { status }));
  const session = new ConsoleSession(api);
  const view = new ConsoleView(document, session);
  document.body.replaceChildren(view.root);
  return { view, session };
}

describe("ConsoleView", () => {
  it("disables submit for empty input", () => {
    makeView();
    const button = document.querySelector(".query-submit") as HTMLButtonElement;
    expect(button.disabled).toBe(true);
    const input = document.querySelector(".query-input") as HTMLInputElement;
    input.value = "show crashes";
    input.dispatchEvent(new Event("input"));
    expect(button.disabled).toBe(false);
  });

  it("renders the NL summary prominently after a response", async () => {
    const { session } = makeView();
    await session.submit("show crashes");
    expect(document.querySelector(".nl-summary")!.textContent).toBe("Showing Crash.");
  });

  it("offers a ranking tab only when a ranking is present", async () => {
    const { session } = makeView();
    await session.submit("show crashes");
    const tabs = [...document.querySelectorAll(".tab")].map((t) => t.textContent);
    expect(tabs).toEqual(["diff", "map", "ranking", "graph"]);
  });

  it("switches panels on tab click", async () => {
    const { session } = makeView();
    await session.submit("show crashes");
    const rankingTab = [...document.querySelectorAll(".tab")]
      .find((t) => t.textContent === "ranking") as HTMLButtonElement;
    rankingTab.click();
    expect(document.querySelectorAll(".ranking-table tbody tr").length).toBe(1);
    const graphTab = [...document.querySelectorAll(".tab")]
      .find((t) => t.textContent === "graph") as HTMLButtonElement;
    graphTab.click();
    expect(document.querySelector(".graph-audit")!.textContent).toContain("entity_load");
  });

  it("shows a retry banner on 502", async () => {
    const { session } = makeView({ error: "interpreter_unavailable", detail: "down" }, 502);
    await session.submit("show crashes");
    expect(document.querySelector(".status-banner.error")!.textContent).toContain("down");
    expect(document.querySelector(".retry")).not.toBeNull();
  });

  it("keeps history entries clickable", async () => {
    const { session } = makeView();
    await session.submit("show crashes");
    const link = document.querySelector(".history a") as HTMLAnchorElement;
    expect(link.textContent).toBe("show crashes");
    link.click();
    const input = document.querySelector(".query-input") as HTMLInputElement;
    expect(input.value).toBe("show crashes");
  });
});
