import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, ResponseLike } from "../src/api.js";
import { DEFAULT_VIEW } from "../src/state.js";
import { fakeFetch, fixture } from "./helpers.js";
import { GridDoc, SchemaDoc } from "../src/types.js";

const schemaDoc = fixture<SchemaDoc>("schema.json");
const gridDoc = fixture<GridDoc>("grid_default.json");

describe("request log", () => {
  it("records every request path in order", async () => {
    const client = new ApiClient("", fakeFetch([
      { match: (u) => u.includes("/schema"), body: schemaDoc },
      { match: (u) => u.includes("/grid"), body: gridDoc },
    ]));
    await client.schema();
    await client.grid({ ...DEFAULT_VIEW, attLo: 0.6 });
    expect(client.log).toEqual([
      "/api/v1/schema",
      "/api/v1/grid?att_lo=0.6&mode=both",
    ]);
  });
});

describe("error mapping", () => {
  it("turns an error body into an ApiError with code and message", async () => {
    const client = new ApiClient("", fakeFetch([
      {
        match: () => true,
        status: 422,
        body: { code: "malformed_slice", message: "att_lo must not exceed att_hi" },
      },
    ]));
    const err = await client.grid(DEFAULT_VIEW).catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).status).toBe(422);
    expect((err as ApiError).code).toBe("malformed_slice");
    expect((err as ApiError).message).toContain("att_lo");
  });

  it("copes with an empty error body", async () => {
    const client = new ApiClient("", () => Promise.resolve({
      ok: false,
      status: 500,
      json: () => Promise.reject(new Error("no body")),
    }));
    const err = await client.schema().catch((e: unknown) => e);
    expect(err).toBeInstanceOf(ApiError);
    expect((err as ApiError).code).toBe("error");
  });
});

describe("latest-wins view channel", () => {
  function deferredFetch() {
    const pending: Array<{ url: string; resolve: (r: ResponseLike) => void }> = [];
    const fetchFn = (url: string) =>
      new Promise<ResponseLike>((resolve) => pending.push({ url, resolve }));
    const release = (index: number, body: unknown, status = 200): void => {
      pending[index].resolve({
        ok: status < 300,
        status,
        json: () => Promise.resolve(body),
      });
    };
    return { fetchFn, pending, release };
  }

  it("drops a response that was superseded before it resolved", async () => {
    const { fetchFn, release } = deferredFetch();
    const client = new ApiClient("", fetchFn);
    const first = client.grid({ ...DEFAULT_VIEW, attLo: 0.1 });
    const second = client.grid({ ...DEFAULT_VIEW, attLo: 0.2 });
    release(1, gridDoc);
    release(0, gridDoc);
    expect(await first).toBeNull();
    expect(await second).not.toBeNull();
  });

  it("swallows failures of superseded requests", async () => {
    const { fetchFn, release } = deferredFetch();
    const client = new ApiClient("", fetchFn);
    const first = client.grid({ ...DEFAULT_VIEW, attLo: 0.1 });
    const second = client.grid({ ...DEFAULT_VIEW, attLo: 0.2 });
    release(0, { code: "boom", message: "stale failure" }, 500);
    release(1, gridDoc);
    expect(await first).toBeNull();
    expect(await second).not.toBeNull();
  });

  it("still raises failures of the newest request", async () => {
    const { fetchFn, release } = deferredFetch();
    const client = new ApiClient("", fetchFn);
    const only = client.grid(DEFAULT_VIEW);
    release(0, { code: "boom", message: "fresh failure" }, 500);
    await expect(only).rejects.toBeInstanceOf(ApiError);
  });
});
