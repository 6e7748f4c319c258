/** Thin typed client for the annotation server's HTTP API. */

import type { LabelMap, SessionView } from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
  }
}

/** 409 from the server: the batch token is no longer current. */
export class StaleBatchError extends ApiError {}

async function errorFrom(response: Response): Promise<ApiError> {
  let detail = response.statusText;
  try {
    const body = (await response.json()) as { detail?: string };
    if (body.detail) detail = body.detail;
  } catch {
    // non-JSON error body; keep the status text
  }
  const cls = response.status === 409 ? StaleBatchError : ApiError;
  return new cls(response.status, detail);
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchFn: typeof fetch = (...args) => fetch(...args),
  ) {}

  async getSession(): Promise<SessionView> {
    const response = await this.fetchFn(`${this.baseUrl}/api/session`);
    if (!response.ok) throw await errorFrom(response);
    return (await response.json()) as SessionView;
  }

  async submitLabels(batchId: string, labels: LabelMap): Promise<SessionView> {
    const response = await this.fetchFn(`${this.baseUrl}/api/session/labels`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ batch_id: batchId, labels }),
    });
    if (!response.ok) throw await errorFrom(response);
    return (await response.json()) as SessionView;
  }

  reportUrl(format: "json" | "csv" = "json"): string {
    return `${this.baseUrl}/api/session/report?format=${format}`;
  }
}
