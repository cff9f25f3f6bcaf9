/** Typed client for the monitoring service API.
 *
 * Every number shown in the UI comes back from these calls; the client
 * performs no detection logic of its own.
 */

import type {
  QueueResponse,
  RunSummary,
  SuggestionCandidate,
  TriageItem,
  WhatIfResult,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`${status}: ${detail}`);
    this.name = "ApiError";
  }
}

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

export interface QueueFilter {
  rule?: string;
  profileClass?: string;
}

export class ApiClient {
  constructor(
    private readonly base: string = "/api/v1",
    private readonly doFetch: FetchLike = (input, init) => fetch(input, init),
    private readonly token: string | null = null,
  ) {}

  private headers(hasBody: boolean): Record<string, string> {
    const h: Record<string, string> = {};
    if (hasBody) h["Content-Type"] = "application/json";
    if (this.token !== null) h["Authorization"] = `Bearer ${this.token}`;
    return h;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = {
      method,
      headers: this.headers(body !== undefined),
    };
    if (body !== undefined) init.body = JSON.stringify(body);
    const response = await this.doFetch(this.base + path, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const parsed = (await response.json()) as { detail?: unknown };
        if (parsed && parsed.detail !== undefined) {
          detail =
            typeof parsed.detail === "string"
              ? parsed.detail
              : JSON.stringify(parsed.detail);
        }
      } catch {
        /* non-JSON error body; keep the status text */
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  listRuns(): Promise<RunSummary[]> {
    return this.request("GET", "/runs");
  }

  startRun(
    analysisDate: string,
    mar: number,
    scope: Record<string, string> = { kind: "all" },
  ): Promise<RunSummary> {
    return this.request("POST", "/runs", {
      analysis_date: analysisDate,
      mar,
      scope,
    });
  }

  runStatus(runId: string): Promise<RunSummary> {
    return this.request("GET", `/runs/${encodeURIComponent(runId)}`);
  }

  report(runId: string, masked = true): Promise<{ report: string }> {
    return this.request(
      "GET",
      `/runs/${encodeURIComponent(runId)}/report?masked=${masked}`,
    );
  }

  queue(runId: string, filter: QueueFilter = {}): Promise<QueueResponse> {
    const params = new URLSearchParams();
    if (filter.rule) params.set("rule", filter.rule);
    if (filter.profileClass) params.set("profile_class", filter.profileClass);
    const query = params.toString();
    return this.request(
      "GET",
      `/runs/${encodeURIComponent(runId)}/queue${query ? "?" + query : ""}`,
    );
  }

  item(runId: string, ordinal: number): Promise<TriageItem> {
    return this.request(
      "GET",
      `/runs/${encodeURIComponent(runId)}/items/${ordinal}`,
    );
  }

  submitVerdict(
    runId: string,
    ordinal: number,
    verdict: "confirmed" | "rejected",
    note = "",
  ): Promise<TriageItem> {
    return this.request(
      "POST",
      `/runs/${encodeURIComponent(runId)}/items/${ordinal}/verdict`,
      { verdict, note },
    );
  }

  suggestions(): Promise<{ candidates: SuggestionCandidate[] }> {
    return this.request("GET", "/suggestions");
  }

  refreshSuggestions(): Promise<{ candidates: SuggestionCandidate[] }> {
    return this.request("POST", "/suggestions/refresh");
  }

  validateSuggestions(
    accepted: string[],
    rejected: string[],
  ): Promise<{ applied: string[]; remaining: string[] }> {
    return this.request("POST", "/suggestions/validate", {
      accepted,
      rejected,
    });
  }

  whatIf(
    analysisDate: string,
    mars: number[],
    scope: Record<string, string> = { kind: "all" },
  ): Promise<{ results: WhatIfResult[] }> {
    return this.request("POST", "/whatif", {
      analysis_date: analysisDate,
      mars,
      scope,
    });
  }
}
