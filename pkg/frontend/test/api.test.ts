import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, StaleBatchError } from "../src/api.js";

function fakeFetch(status: number, body: unknown): typeof fetch {
  return async () =>
    new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
}

describe("ApiClient", () => {
  it("returns the parsed session view", async () => {
    const view = { session_id: "s", batch: [] };
    const client = new ApiClient("http://x", fakeFetch(200, view));
    await expect(client.getSession()).resolves.toEqual(view);
  });

  it("maps 409 to StaleBatchError with the server detail", async () => {
    const client = new ApiClient("http://x", fakeFetch(409, { detail: "stale batch_id" }));
    const err = await client.submitLabels("b0", {}).catch((e) => e);
    expect(err).toBeInstanceOf(StaleBatchError);
    expect(err.status).toBe(409);
    expect(err.detail).toMatch(/stale/);
  });

  it("maps other failures to ApiError, not StaleBatchError", async () => {
    const client = new ApiClient("http://x", fakeFetch(400, { detail: "missing relation" }));
    const err = await client.getSession().catch((e) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect(err).not.toBeInstanceOf(StaleBatchError);
  });

  it("posts the batch token and labels verbatim", async () => {
    let captured: { url: string; body: string } | null = null;
    const recordingFetch: typeof fetch = async (url, init) => {
      captured = { url: String(url), body: String(init?.body) };
      return new Response("{}", { status: 200 });
    };
    const client = new ApiClient("", recordingFetch);
    await client.submitLabels("b1-aaa", { p1: { r1: 1 } });
    expect(captured!.url).toBe("/api/session/labels");
    expect(JSON.parse(captured!.body)).toEqual({
      batch_id: "b1-aaa",
      labels: { p1: { r1: 1 } },
    });
  });

  it("builds report urls for both formats", () => {
    const client = new ApiClient("http://host:1");
    expect(client.reportUrl()).toBe("http://host:1/api/session/report?format=json");
    expect(client.reportUrl("csv")).toBe("http://host:1/api/session/report?format=csv");
  });
});
