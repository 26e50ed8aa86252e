import type { FetchLike } from "../src/api.js";

export function jsonResponse(body: unknown, status = 200): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { "content-type": "application/json" },
  });
}

/** fetch stub that replays a fixed response and records calls. */
export function fixtureFetch(body: unknown, status = 200) {
  const calls: { url: string; init?: RequestInit }[] = [];
  const impl: FetchLike = async (url, init) => {
    calls.push({ url, init });
    return jsonResponse(body, status);
  };
  return { impl, calls };
}

/** fetch stub simulating an unreachable engine. */
export function downFetch() {
  const impl: FetchLike = async () => {
    throw new TypeError("fetch failed");
  };
  return { impl };
}
