import { describe, expect, it } from "vitest";

import { ApiError, CqmsClient, FetchLike } from "../src/api.js";
import { CONTEXT_SUGGEST, jsonResponse } from "./fixtures.js";

interface Captured {
  url: string;
  init?: RequestInit;
}

function capture(payload: unknown, status = 200): { calls: Captured[]; fetchFn: FetchLike } {
  const calls: Captured[] = [];
  const fetchFn: FetchLike = (url, init) => {
    calls.push({ url, init });
    return Promise.resolve(jsonResponse(payload, status));
  };
  return { calls, fetchFn };
}

function client(fetchFn: FetchLike): CqmsClient {
  return new CqmsClient({
    baseUrl: "http://service.test/",
    principal: "ann",
    groups: ["limno", "field"],
    fetchFn,
  });
}

describe("CqmsClient", () => {
  it("sends principal and group headers on every request", async () => {
    const { calls, fetchFn } = capture(CONTEXT_SUGGEST);
    await client(fetchFn).suggest("SELECT FROM WaterSalinity,");
    const headers = calls[0]!.init!.headers as Record<string, string>;
    expect(headers["X-Principal"]).toBe("ann");
    expect(headers["X-Groups"]).toBe("limno,field");
  });

  it("builds the suggest URL with an encoded partial and trims the base slash", async () => {
    const { calls, fetchFn } = capture(CONTEXT_SUGGEST);
    await client(fetchFn).suggest("SELECT FROM WaterSalinity,", "relation", 5);
    const url = new URL(calls[0]!.url);
    expect(calls[0]!.url.startsWith("http://service.test/suggest?")).toBe(true);
    expect(url.searchParams.get("partial")).toBe("SELECT FROM WaterSalinity,");
    expect(url.searchParams.get("kind")).toBe("relation");
    expect(url.searchParams.get("limit")).toBe("5");
  });

  it("posts search bodies as JSON", async () => {
    const { calls, fetchFn } = capture({ results: [] });
    await client(fetchFn).searchPartial("SELECT FROM WaterTemperature,", 7);
    expect(calls[0]!.init!.method).toBe("POST");
    expect(JSON.parse(calls[0]!.init!.body as string)).toEqual({
      partial: "SELECT FROM WaterTemperature,",
      limit: 7,
    });
    const headers = calls[0]!.init!.headers as Record<string, string>;
    expect(headers["Content-Type"]).toBe("application/json");
  });

  it("surfaces the service error message with its status", async () => {
    const { fetchFn } = capture({ error: "no query 99" }, 404);
    const err = await client(fetchFn)
      .getQuery("99")
      .then(
        () => null,
        (e: unknown) => e,
      );
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(404);
    expect((err as ApiError).message).toBe("no query 99");
  });

  it("falls back to a status message when the error body is not JSON", async () => {
    const fetchFn: FetchLike = () =>
      Promise.resolve(new Response("gateway exploded", { status: 502 }));
    const err = await client(fetchFn)
      .report()
      .then(
        () => null,
        (e: unknown) => e,
      );
    expect((err as ApiError).message).toBe("request failed with status 502");
  });
});
