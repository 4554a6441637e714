/** Typed client for the engine's session API. All computation of the network
 * function happens server-side; this client only moves JSON. */

import type {
  ApplyResult,
  CreateResult,
  NetworkJson,
  RuleMatch,
  SessionInfo,
  UndoResult,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class DivnetClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchImpl(`${this.baseUrl}${path}`, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    const text = await resp.text();
    let body: unknown = null;
    try {
      body = text ? JSON.parse(text) : null;
    } catch {
      body = text;
    }
    if (!resp.ok) {
      const err = (body ?? {}) as { code?: string; message?: string };
      throw new ApiError(
        resp.status,
        err.code ?? `http_${resp.status}`,
        err.message ?? `request failed with status ${resp.status}`,
      );
    }
    return body as T;
  }

  createSession(network: NetworkJson, generator?: string): Promise<CreateResult> {
    return this.request<CreateResult>("/sessions", {
      method: "POST",
      body: JSON.stringify({ network, generator: generator ?? network.generator }),
    });
  }

  getSession(sessionId: string): Promise<SessionInfo> {
    return this.request<SessionInfo>(`/sessions/${sessionId}`);
  }

  async matches(sessionId: string, rule?: string): Promise<RuleMatch[]> {
    const query = rule ? `?rule=${encodeURIComponent(rule)}` : "";
    const body = await this.request<{ matches: RuleMatch[] }>(
      `/sessions/${sessionId}/matches${query}`,
    );
    return body.matches;
  }

  apply(sessionId: string, match: RuleMatch): Promise<ApplyResult> {
    return this.request<ApplyResult>(`/sessions/${sessionId}/apply`, {
      method: "POST",
      body: JSON.stringify({ match }),
    });
  }

  undo(sessionId: string): Promise<UndoResult> {
    return this.request<UndoResult>(`/sessions/${sessionId}/undo`, {
      method: "POST",
    });
  }

  async exportSession(
    sessionId: string,
    format: "json" | "dot" | "derivation",
  ): Promise<string> {
    const resp = await this.fetchImpl(
      `${this.baseUrl}/sessions/${sessionId}/export?format=${format}`,
    );
    const text = await resp.text();
    if (!resp.ok) {
      let code = `http_${resp.status}`;
      let message = text;
      try {
        const body = JSON.parse(text) as { code?: string; message?: string };
        code = body.code ?? code;
        message = body.message ?? message;
      } catch {
        /* plain-text error */
      }
      throw new ApiError(resp.status, code, message);
    }
    return text;
  }
}
