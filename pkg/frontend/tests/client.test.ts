import { describe, expect, it } from "vitest";

import { ApiError, GatewayClient } from "../src/client.js";

interface Sent {
  url: string;
  method: string;
  headers: Record<string, string>;
  body: unknown;
}

function stub(responses: { status: number; body: unknown }[]) {
  const sent: Sent[] = [];
  const fetchImpl = async (url: string, init?: RequestInit) => {
    sent.push({
      url,
      method: init?.method ?? "GET",
      headers: (init?.headers ?? {}) as Record<string, string>,
      body: init?.body ? JSON.parse(init.body as string) : undefined,
    });
    const next = responses.shift();
    if (!next) {
      throw new Error("unexpected request");
    }
    return new Response(JSON.stringify(next.body), {
      status: next.status,
      headers: { "content-type": "application/json" },
    });
  };
  return { sent, fetchImpl };
}

const ENVELOPE = { session_id: "s-1", phase: "inquiring" };

describe("request shapes", () => {
  it("opens sessions with a JSON task body", async () => {
    const { sent, fetchImpl } = stub([{ status: 201, body: ENVELOPE }]);
    const client = new GatewayClient("http://gw/", fetchImpl);
    await client.openSession("Plan a trip.");
    expect(sent).toHaveLength(1);
    expect(sent[0].url).toBe("http://gw/sessions");
    expect(sent[0].method).toBe("POST");
    expect(sent[0].body).toEqual({ task: "Plan a trip." });
    expect(sent[0].headers["Content-Type"]).toBe("application/json");
  });

  it("sends replies with optional annotations", async () => {
    const { sent, fetchImpl } = stub([
      { status: 200, body: ENVELOPE },
      { status: 200, body: ENVELOPE },
    ]);
    const client = new GatewayClient("http://gw", fetchImpl);
    await client.reply("s-1", "Red");
    await client.reply("s-1", "Blue", {
      options_provided: 3,
      options_reasonable: 2,
    });
    expect(sent[0].url).toBe("http://gw/sessions/s-1/reply");
    expect(sent[0].body).toEqual({ reply: "Red" });
    expect(sent[1].body).toEqual({
      reply: "Blue",
      annotations: { options_provided: 3, options_reasonable: 2 },
    });
  });

  it("files outcome annotations without a reply field", async () => {
    const { sent, fetchImpl } = stub([{ status: 200, body: ENVELOPE }]);
    const client = new GatewayClient("http://gw", fetchImpl);
    await client.annotateOutcome("s-1", {
      intentions_provided: 2,
      intentions_summarized: 1,
    });
    expect(sent[0].body).toEqual({
      annotations: { intentions_provided: 2, intentions_summarized: 1 },
    });
  });

  it("fetches the handoff and aborts with the right verbs", async () => {
    const { sent, fetchImpl } = stub([
      { status: 200, body: { t_user: "goal" } },
      { status: 200, body: ENVELOPE },
    ]);
    const client = new GatewayClient("http://gw", fetchImpl);
    await client.handoff("s-1");
    await client.abort("s-1");
    expect(sent[0]).toMatchObject({
      url: "http://gw/sessions/s-1/handoff",
      method: "GET",
    });
    expect(sent[0].body).toBeUndefined();
    expect(sent[1].method).toBe("DELETE");
  });

  it("escapes session ids in URLs", async () => {
    const { sent, fetchImpl } = stub([{ status: 200, body: ENVELOPE }]);
    const client = new GatewayClient("http://gw", fetchImpl);
    await client.getSession("a/b c");
    expect(sent[0].url).toBe("http://gw/sessions/a%2Fb%20c");
  });

  it("attaches a bearer token when configured", async () => {
    const { sent, fetchImpl } = stub([{ status: 200, body: ENVELOPE }]);
    const client = new GatewayClient("http://gw", fetchImpl, "sekrit");
    await client.getSession("s-1");
    expect(sent[0].headers["Authorization"]).toBe("Bearer sekrit");
  });
});

describe("error mapping", () => {
  it("raises ApiError with the gateway's code and message", async () => {
    const { fetchImpl } = stub([
      {
        status: 409,
        body: { error: { code: "busy", message: "another reply in flight" } },
      },
    ]);
    const client = new GatewayClient("http://gw", fetchImpl);
    const error = await client.reply("s-1", "Red").catch((e) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect(error.status).toBe(409);
    expect(error.code).toBe("busy");
    expect(error.message).toBe("another reply in flight");
    expect(error.retryable).toBe(true);
  });

  it("marks only busy errors as retryable", async () => {
    const { fetchImpl } = stub([
      {
        status: 502,
        body: { error: { code: "backend_error", message: "down" } },
      },
    ]);
    const client = new GatewayClient("http://gw", fetchImpl);
    const error = await client.reply("s-1", "Red").catch((e) => e);
    expect(error.retryable).toBe(false);
  });

  it("survives non-JSON error bodies", async () => {
    const fetchImpl = async () =>
      new Response("<html>proxy error</html>", { status: 503 });
    const client = new GatewayClient("http://gw", fetchImpl);
    const error = await client.getSession("s-1").catch((e) => e);
    expect(error).toBeInstanceOf(ApiError);
    expect(error.code).toBe("unknown");
    expect(error.message).toContain("503");
  });
});
