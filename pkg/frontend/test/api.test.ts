import { describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import respondFixture from "./fixtures/respond.json";
import healthFixture from "./fixtures/health.json";
import { downFetch, fixtureFetch, jsonResponse } from "./helpers.js";

describe("ApiClient.respond", () => {
  it("posts the message and returns the parsed payload", async () => {
    const { impl, calls } = fixtureFetch(respondFixture);
    const client = new ApiClient("", impl);
    const out = await client.respond("sun beach bug contest soup rice");
    expect(calls).toHaveLength(1);
    expect(calls[0].url).toBe("/api/respond");
    expect(JSON.parse(calls[0].init!.body as string)).toEqual({
      message: "sun beach bug contest soup rice",
      top_k: 10,
    });
    expect(out.candidates).toHaveLength(respondFixture.candidates.length);
    expect(out.candidates[0].response).toBe(
      respondFixture.candidates[0].response,
    );
  });

  it("maps HTTP errors to ApiError with the server detail", async () => {
    const { impl } = fixtureFetch({ error: "engine not loaded" }, 503);
    const client = new ApiClient("", impl);
    await expect(client.respond("hi")).rejects.toThrowError(ApiError);
    await expect(client.respond("hi")).rejects.toThrow(/503.*engine not loaded/);
  });

  it("maps network failure to ApiError", async () => {
    const client = new ApiClient("", downFetch().impl);
    await expect(client.respond("hi")).rejects.toThrow(/unreachable/);
  });

  it("health round-trips", async () => {
    const { impl } = fixtureFetch(healthFixture);
    const client = new ApiClient("", impl);
    expect(await client.health()).toEqual(healthFixture);
  });

  it("tolerates non-JSON error bodies", async () => {
    const client = new ApiClient("", async () =>
      new Response("boom", { status: 500 }));
    await expect(client.respond("hi")).rejects.toThrow(/HTTP 500/);
  });

  it("passes top_k through", async () => {
    const { impl, calls } = fixtureFetch(respondFixture);
    await new ApiClient("", impl).respond("hello there", 3);
    expect(JSON.parse(calls[0].init!.body as string).top_k).toBe(3);
  });
});
