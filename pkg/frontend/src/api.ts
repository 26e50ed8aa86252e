import type { HealthResponse, RespondResponse } from "./types.js";

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(message: string, readonly status?: number) {
    super(message);
  }
}

/** Thin client over the engine's HTTP API; fetch is injectable for tests. */
export class ApiClient {
  constructor(
    private readonly baseUrl: string = "",
    private readonly fetchImpl: FetchLike = (input, init) => fetch(input, init),
  ) {}

  async respond(message: string, topK = 10): Promise<RespondResponse> {
    let resp: Response;
    try {
      resp = await this.fetchImpl(`${this.baseUrl}/api/respond`, {
        method: "POST",
        headers: { "content-type": "application/json" },
        body: JSON.stringify({ message, top_k: topK }),
      });
    } catch (err) {
      throw new ApiError(`engine unreachable: ${String(err)}`);
    }
    if (!resp.ok) {
      let detail = `HTTP ${resp.status}`;
      try {
        const body = await resp.json();
        if (body && typeof body.error === "string") {
          detail = `${detail}: ${body.error}`;
        }
      } catch {
        // no JSON body; keep the bare status
      }
      throw new ApiError(detail, resp.status);
    }
    return (await resp.json()) as RespondResponse;
  }

  async health(): Promise<HealthResponse> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/health`);
    if (!resp.ok) {
      throw new ApiError(`HTTP ${resp.status}`, resp.status);
    }
    return (await resp.json()) as HealthResponse;
  }
}
