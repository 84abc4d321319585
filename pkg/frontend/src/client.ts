/**
 * Thin fetch client for the clarification gateway.
 *
 * The fetch implementation is injected so tests (and non-browser hosts) can
 * capture requests; nothing here inspects dialogue content beyond error
 * envelopes.
 */

import type {
  Envelope,
  GatewayErrorBody,
  Handoff,
  OutcomeAnnotations,
  RoundAnnotations,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

/** A non-2xx gateway response, carrying the machine-readable error code. */
export class ApiError extends Error {
  readonly status: number;
  readonly code: string;

  constructor(status: number, code: string, message: string) {
    super(message);
    this.name = "ApiError";
    this.status = status;
    this.code = code;
  }

  /** Busy sessions are transient; the UI offers a retry instead of failing. */
  get retryable(): boolean {
    return this.code === "busy";
  }
}

async function parseError(response: Response): Promise<ApiError> {
  let code = "unknown";
  let message = `gateway returned HTTP ${response.status}`;
  try {
    const body = (await response.json()) as GatewayErrorBody;
    if (body && body.error) {
      code = body.error.code;
      message = body.error.message;
    }
  } catch {
    // non-JSON error body; keep the generic message
  }
  return new ApiError(response.status, code, message);
}

export class GatewayClient {
  private readonly baseUrl: string;
  private readonly fetchImpl: FetchLike;
  private readonly authToken?: string;

  constructor(baseUrl = "", fetchImpl?: FetchLike, authToken?: string) {
    this.baseUrl = baseUrl.replace(/\/+$/, "");
    this.fetchImpl =
      fetchImpl ?? (globalThis.fetch.bind(globalThis) as FetchLike);
    this.authToken = authToken;
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const headers: Record<string, string> = {};
    if (body !== undefined) {
      headers["Content-Type"] = "application/json";
    }
    if (this.authToken) {
      headers["Authorization"] = `Bearer ${this.authToken}`;
    }
    const response = await this.fetchImpl(this.baseUrl + path, {
      method,
      headers,
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      throw await parseError(response);
    }
    return (await response.json()) as T;
  }

  openSession(task: string): Promise<Envelope> {
    return this.request<Envelope>("POST", "/sessions", { task });
  }

  getSession(sessionId: string): Promise<Envelope> {
    return this.request<Envelope>(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}`,
    );
  }

  reply(
    sessionId: string,
    reply: string,
    annotations?: RoundAnnotations,
  ): Promise<Envelope> {
    const body: Record<string, unknown> = { reply };
    if (annotations !== undefined) {
      body.annotations = annotations;
    }
    return this.request<Envelope>(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/reply`,
      body,
    );
  }

  annotateOutcome(
    sessionId: string,
    annotations: OutcomeAnnotations,
  ): Promise<Envelope> {
    return this.request<Envelope>(
      "POST",
      `/sessions/${encodeURIComponent(sessionId)}/reply`,
      { annotations },
    );
  }

  handoff(sessionId: string): Promise<Handoff> {
    return this.request<Handoff>(
      "GET",
      `/sessions/${encodeURIComponent(sessionId)}/handoff`,
    );
  }

  abort(sessionId: string): Promise<Envelope> {
    return this.request<Envelope>(
      "DELETE",
      `/sessions/${encodeURIComponent(sessionId)}`,
    );
  }
}
