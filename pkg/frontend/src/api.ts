// Typed client for the crashquery HTTP service. All analysis happens
// server-side; this module only shuttles JSON.

import type { CandidateGroup, QueryResponse } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly body: Record<string, unknown>,
  ) {
    super(String(body["detail"] ?? body["error"] ?? `HTTP ${status}`));
  }
}

export class AmbiguousAnchorError extends Error {
  constructor(readonly candidates: CandidateGroup[]) {
    super("ambiguous anchor reference");
  }
}

export class BackendUnavailableError extends Error {
  constructor(detail: string) {
    super(detail);
  }
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private readonly base: string,
    private readonly fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  async query(text: string, anchorPick?: number): Promise<QueryResponse> {
    const payload: Record<string, unknown> = { text };
    if (anchorPick !== undefined) payload["anchor_pick"] = anchorPick;
    const resp = await this.fetchImpl(`${this.base}/query`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    if (resp.ok) return (await resp.json()) as QueryResponse;
    const body = (await resp.json()) as Record<string, unknown>;
    if (resp.status === 422 && body["error"] === "ambiguous_anchor") {
      throw new AmbiguousAnchorError(body["candidates"] as CandidateGroup[]);
    }
    if (resp.status === 502) {
      throw new BackendUnavailableError(String(body["detail"] ?? "backend unavailable"));
    }
    throw new ApiError(resp.status, body);
  }

  async health(): Promise<{ status: string; dataset_version: string }> {
    const resp = await this.fetchImpl(`${this.base}/health`);
    if (!resp.ok) throw new ApiError(resp.status, {});
    return (await resp.json()) as { status: string; dataset_version: string };
  }
}
