import { describe, expect, it } from "vitest";

import { ApiError, Client } from "../src/api.js";

interface Call {
  url: string;
  init: RequestInit;
}

function recordingFetch(responder: (url: string) => Response) {
  const calls: Call[] = [];
  const fetchFn = async (url: string, init?: RequestInit): Promise<Response> => {
    calls.push({ url, init: init ?? {} });
    return responder(url);
  };
  return { calls, fetchFn };
}

function jsonResponse(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "Content-Type": "application/json" },
  });
}

describe("service client", () => {
  it("sends the bearer token and strips trailing slashes from the base URL", async () => {
    const { calls, fetchFn } = recordingFetch(() => jsonResponse(200, { ok: true, events: 3 }));
    const client = new Client({ baseUrl: "http://svc:9/", token: "tok" }, fetchFn);
    await client.healthz();
    expect(calls).toHaveLength(1);
    expect(calls[0]!.url).toBe("http://svc:9/healthz");
    const headers = calls[0]!.init.headers as Record<string, string>;
    expect(headers["Authorization"]).toBe("Bearer tok");
  });

  it("omits the auth header when no token is configured", async () => {
    const { calls, fetchFn } = recordingFetch(() => jsonResponse(200, { ok: true, events: 0 }));
    const client = new Client({ baseUrl: "http://svc:9", token: null }, fetchFn);
    await client.healthz();
    const headers = calls[0]!.init.headers as Record<string, string>;
    expect(headers["Authorization"]).toBeUndefined();
  });

  it("builds trend queries from the given params only", async () => {
    const { calls, fetchFn } = recordingFetch(() =>
      jsonResponse(200, { date: null, total: 0, records: [] }),
    );
    const client = new Client({ baseUrl: "http://svc:9", token: null }, fetchFn);
    await client.trends();
    await client.trends({ date: "2020-04-03", top: 5 });
    await client.trends({ limit: 10, offset: 20 });
    expect(calls.map((c) => c.url)).toEqual([
      "http://svc:9/trends",
      "http://svc:9/trends?date=2020-04-03&top=5",
      "http://svc:9/trends?limit=10&offset=20",
    ]);
  });

  it("posts JSON bodies with a content type and encodes path ids", async () => {
    const { calls, fetchFn } = recordingFetch(() =>
      jsonResponse(200, { cluster_id: "c 1", category: "APPROVED", spawned: [] }),
    );
    const client = new Client({ baseUrl: "http://svc:9", token: "tok" }, fetchFn);
    const body = { annotator_id: "mod1", category: "APPROVED", elapsed_seconds: 4.2 };
    await client.decideClaim("c 1/x", body);
    expect(calls[0]!.url).toBe("http://svc:9/claims/c%201%2Fx/decision");
    expect(calls[0]!.init.method).toBe("POST");
    const headers = calls[0]!.init.headers as Record<string, string>;
    expect(headers["Content-Type"]).toBe("application/json");
    expect(JSON.parse(String(calls[0]!.init.body))).toEqual(body);
  });

  it("raises ApiError with the service detail and never retries", async () => {
    const { calls, fetchFn } = recordingFetch(() =>
      jsonResponse(409, { detail: "claim already decided" }),
    );
    const client = new Client({ baseUrl: "http://svc:9", token: "tok" }, fetchFn);
    const err = await client
      .decideClaim("c1", { annotator_id: "m", category: "APPROVED" })
      .then(() => null)
      .catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(409);
    expect((err as ApiError).message).toBe("claim already decided");
    expect(calls).toHaveLength(1);
  });

  it("keeps the HTTP status line when the error body is not JSON", async () => {
    const { fetchFn } = recordingFetch(() => new Response("boom", { status: 500 }));
    const client = new Client({ baseUrl: "http://svc:9", token: null }, fetchFn);
    const err = await client.healthz().catch((e: unknown) => e);
    expect((err as ApiError).status).toBe(500);
    expect((err as ApiError).message).toBe("HTTP 500");
  });

  it("stringifies structured validation details", async () => {
    const detail = [{ loc: ["body", "likert"], msg: "out of range" }];
    const { fetchFn } = recordingFetch(() => jsonResponse(422, { detail }));
    const client = new Client({ baseUrl: "http://svc:9", token: null }, fetchFn);
    const err = await client
      .reviewTweet("p1", { cluster_id: "c1", annotator_id: "m", likert: 9 })
      .catch((e: unknown) => e);
    expect((err as ApiError).status).toBe(422);
    expect((err as ApiError).message).toBe(JSON.stringify(detail));
  });

  it("pages the event log with after_seq", async () => {
    const { calls, fetchFn } = recordingFetch(() => jsonResponse(200, { total: 0, events: [] }));
    const client = new Client({ baseUrl: "http://svc:9", token: null }, fetchFn);
    await client.exportEvents();
    await client.exportEvents(41);
    expect(calls.map((c) => c.url)).toEqual([
      "http://svc:9/export/events?after_seq=0",
      "http://svc:9/export/events?after_seq=41",
    ]);
  });
});
