// Console session state: one active query at a time, session-local history,
// responses applied atomically. The console never computes analysis itself.

import {
  AmbiguousAnchorError,
  ApiClient,
  BackendUnavailableError,
} from "./api.js";
import type { CandidateGroup, QueryResponse } from "./types.js";

export type ConsoleState =
  | { kind: "idle" }
  | { kind: "loading"; query: string }
  | { kind: "response"; query: string; response: QueryResponse }
  | { kind: "ambiguous"; query: string; candidates: CandidateGroup[] }
  | { kind: "error"; query: string; message: string; retryable: boolean };

export interface HistoryEntry {
  query: string;
  summary: string;
}

export class ConsoleSession {
  state: ConsoleState = { kind: "idle" };
  readonly history: HistoryEntry[] = [];
  private listeners: ((state: ConsoleState) => void)[] = [];
  private inFlight = false;

  constructor(private readonly api: ApiClient) {}

  onChange(listener: (state: ConsoleState) => void): void {
    this.listeners.push(listener);
  }

  get busy(): boolean {
    return this.inFlight;
  }

  private setState(state: ConsoleState): void {
    this.state = state;
    for (const listener of this.listeners) listener(state);
  }

  async submit(text: string, anchorPick?: number): Promise<ConsoleState> {
    const query = text.trim();
    if (!query || this.inFlight) return this.state;
    this.inFlight = true;
    this.setState({ kind: "loading", query });
    try {
      const response = await this.api.query(query, anchorPick);
      this.history.push({ query, summary: response.nl_summary });
      this.setState({ kind: "response", query, response });
    } catch (err) {
      if (err instanceof AmbiguousAnchorError) {
        this.setState({ kind: "ambiguous", query, candidates: err.candidates });
      } else if (err instanceof BackendUnavailableError) {
        this.setState({ kind: "error", query, message: err.message, retryable: true });
      } else {
        this.setState({
          kind: "error",
          query,
          message: err instanceof Error ? err.message : String(err),
          retryable: false,
        });
      }
    } finally {
      this.inFlight = false;
    }
    return this.state;
  }

  /** Re-submit the pending ambiguous query with the user's candidate pick. */
  async resolveAmbiguity(pick: number): Promise<ConsoleState> {
    if (this.state.kind !== "ambiguous") return this.state;
    return this.submit(this.state.query, pick);
  }

  /** Abandon the pending ambiguous query without executing anything. */
  cancelAmbiguity(): void {
    if (this.state.kind === "ambiguous") {
      this.setState({ kind: "idle" });
    }
  }
}
