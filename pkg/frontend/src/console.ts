// Top-level console component: query box, NL-summary verification line,
// tabbed pipeline inspector (diff / map / ranking / graph), history, and
// the ambiguity dialog. All content comes from the service response.

import { renderAmbiguityDialog } from "./ambiguity.js";
import { renderDiff } from "./diff.js";
import { renderGraph } from "./graphview.js";
import { renderLegend, renderMap } from "./mapview.js";
import { ConsoleSession, type ConsoleState } from "./session.js";
import { renderRankingTable } from "./table.js";
import type { QueryResponse } from "./types.js";

export class ConsoleView {
  readonly root: HTMLElement;
  private readonly input: HTMLInputElement;
  private readonly submitButton: HTMLButtonElement;
  private readonly status: HTMLElement;
  private readonly summary: HTMLElement;
  private readonly tabs: HTMLElement;
  private readonly panel: HTMLElement;
  private readonly historyList: HTMLElement;
  private readonly dialogHost: HTMLElement;
  private activeTab = "map";
  private response: QueryResponse | null = null;

  constructor(
    private readonly doc: Document,
    private readonly session: ConsoleSession,
  ) {
    this.root = doc.createElement("div");
    this.root.className = "console";

    const form = doc.createElement("form");
    form.className = "query-form";
    this.input = doc.createElement("input");
    this.input.type = "text";
    this.input.className = "query-input";
    this.input.placeholder = 'e.g. "top 5 schools by pedestrian crashes within 500m in Boston"';
    this.submitButton = doc.createElement("button");
    this.submitButton.type = "submit";
    this.submitButton.className = "query-submit";
    this.submitButton.textContent = "Run";
    this.submitButton.disabled = true;
    this.input.addEventListener("input", () => this.syncSubmitState());
    form.append(this.input, this.submitButton);
    form.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.session.submit(this.input.value);
    });

    this.status = doc.createElement("div");
    this.status.className = "status-banner";
    this.summary = doc.createElement("div");
    this.summary.className = "nl-summary";
    this.tabs = doc.createElement("nav");
    this.tabs.className = "tabs";
    this.panel = doc.createElement("section");
    this.panel.className = "panel";
    this.dialogHost = doc.createElement("div");
    this.dialogHost.className = "dialog-host";

    const historyBox = doc.createElement("aside");
    historyBox.className = "history";
    const historyTitle = doc.createElement("h3");
    historyTitle.textContent = "History";
    this.historyList = doc.createElement("ul");
    historyBox.append(historyTitle, this.historyList);

    this.root.append(form, this.status, this.summary, this.tabs,
                     this.panel, this.dialogHost, historyBox);
    session.onChange((state) => this.render(state));
    this.render(session.state);
  }

  private syncSubmitState(): void {
    this.submitButton.disabled =
      this.input.value.trim().length === 0 || this.session.busy;
  }

  private render(state: ConsoleState): void {
    this.input.disabled = state.kind === "loading";
    this.syncSubmitState();
    this.dialogHost.replaceChildren();
    this.status.replaceChildren();
    this.status.className = "status-banner";

    if (state.kind === "loading") {
      this.status.textContent = `Running: ${state.query}`;
    } else if (state.kind === "error") {
      this.status.className = "status-banner error";
      this.status.textContent = state.message;
      if (state.retryable) {
        const retry = this.doc.createElement("button");
        retry.className = "retry";
        retry.textContent = "Retry";
        retry.addEventListener("click", () => void this.session.submit(state.query));
        this.status.append(" ", retry);
      }
    } else if (state.kind === "ambiguous") {
      this.dialogHost.appendChild(renderAmbiguityDialog(
        this.doc, state.candidates,
        (pick) => void this.session.resolveAmbiguity(pick),
        () => this.session.cancelAmbiguity(),
      ));
    } else if (state.kind === "response") {
      this.response = state.response;
      this.summary.textContent = state.response.nl_summary;
      this.renderTabs();
      this.renderPanel();
    }
    this.renderHistory();
  }

  private tabNames(): string[] {
    const names = ["diff", "map"];
    if (this.response?.ranking) names.push("ranking");
    names.push("graph");
    return names;
  }

  private renderTabs(): void {
    this.tabs.replaceChildren();
    for (const name of this.tabNames()) {
      const button = this.doc.createElement("button");
      button.className = name === this.activeTab ? "tab active" : "tab";
      button.dataset["tab"] = name;
      button.textContent = name;
      button.addEventListener("click", () => {
        this.activeTab = name;
        this.renderTabs();
        this.renderPanel();
      });
      this.tabs.appendChild(button);
    }
  }

  private renderPanel(): void {
    this.panel.replaceChildren();
    const response = this.response;
    if (!response) return;
    if (!this.tabNames().includes(this.activeTab)) this.activeTab = "map";
    if (this.activeTab === "diff") {
      this.panel.appendChild(renderDiff(
        this.doc, response.raw_frame, response.repaired_frame, response.repair_report));
    } else if (this.activeTab === "map") {
      this.panel.appendChild(renderLegend(this.doc, response.map));
      this.panel.appendChild(renderMap(this.doc, response.map));
    } else if (this.activeTab === "ranking" && response.ranking) {
      this.panel.appendChild(renderRankingTable(this.doc, response.ranking));
    } else if (this.activeTab === "graph") {
      this.panel.appendChild(renderGraph(this.doc, response.graph, response.provenance));
      const audit = this.doc.createElement("pre");
      audit.className = "graph-audit";
      audit.textContent = response.graph_audit_text;
      this.panel.appendChild(audit);
    }
  }

  private renderHistory(): void {
    this.historyList.replaceChildren();
    for (const entry of [...this.session.history].reverse()) {
      const item = this.doc.createElement("li");
      const link = this.doc.createElement("a");
      link.textContent = entry.query;
      link.title = entry.summary;
      link.href = "#";
      link.addEventListener("click", (event) => {
        event.preventDefault();
        this.input.value = entry.query;
        this.syncSubmitState();
      });
      item.appendChild(link);
      this.historyList.appendChild(item);
    }
  }
}
