import { beforeEach, describe, expect, it } from "vitest";

import { ApiClient, ResponseLike } from "../src/api.js";
import { Workbench, ViewSinks } from "../src/controls.js";
import { fromQuery, toQuery } from "../src/state.js";
import { GridDoc, PatternDoc } from "../src/types.js";
import { fakeFetch, fixture } from "./helpers.js";

const gridDoc = fixture<GridDoc>("grid_default.json");
const patternDoc = fixture<PatternDoc>("tpartite_combined.json");

interface Recorded {
  grids: GridDoc[];
  patterns: PatternDoc[];
  toasts: Array<{ message: string; retry: () => Promise<void> }>;
  banners: string[];
}

function recordingSinks(): { sinks: ViewSinks; seen: Recorded } {
  const seen: Recorded = { grids: [], patterns: [], toasts: [], banners: [] };
  return {
    seen,
    sinks: {
      grid: (doc) => seen.grids.push(doc),
      patterns: (doc) => seen.patterns.push(doc),
      toast: (message, retry) => seen.toasts.push({ message, retry }),
      banner: (message) => seen.banners.push(message),
    },
  };
}

function standardClient(): ApiClient {
  return new ApiClient("", fakeFetch([
    { match: (u) => u.includes("/grid"), body: gridDoc },
    { match: (u) => u.includes("/tpartite"), body: patternDoc },
  ]));
}

describe("one query per control change", () => {
  let api: ApiClient;
  let bench: Workbench;
  let seen: Recorded;

  beforeEach(async () => {
    api = standardClient();
    const rec = recordingSinks();
    seen = rec.seen;
    bench = new Workbench(api, rec.sinks);
    await bench.refresh();
    expect(api.log.length).toBe(1);
  });

  it("attention slider", async () => {
    await bench.setAttentionBand(0.6, 1);
    expect(api.log.length).toBe(2);
    expect(api.log[1]).toContain("att_lo=0.6");
    expect(api.log[1]).not.toContain("att_hi");
    expect(seen.grids.length).toBe(2);
  });

  it("timestep range", async () => {
    await bench.setTimeRange(4, 6);
    expect(api.log.length).toBe(2);
    expect(api.log[1]).toContain("t0=4");
    expect(api.log[1]).toContain("t1=6");
  });

  it("mode dropdown", async () => {
    await bench.setMode("diff");
    expect(api.log.length).toBe(2);
    expect(api.log[1]).toContain("mode=diff");
  });

  it("epoch scrub", async () => {
    await bench.setEpoch(10);
    expect(api.log.length).toBe(2);
    expect(api.log[1]).toContain("epoch=10");
  });

  it("attribute removal and reorder", async () => {
    await bench.setAttributes(["C", "A"]);
    expect(api.log.length).toBe(2);
    expect(api.log[1]).toContain("attrs=C%2CA");
  });

  it("matrix click opens the combined drill-down", async () => {
    await bench.openPair("A", "B");
    expect(api.log.length).toBe(2);
    expect(api.log[1]).toContain("/api/v1/tpartite?attr=A&attr2=B");
    expect(seen.patterns.length).toBe(1);
  });

  it("mirror-matrix click swaps primary and secondary", async () => {
    await bench.openPair("A", "B");
    await bench.swapPair();
    expect(api.log.length).toBe(3);
    expect(api.log[2]).toContain("attr=B&attr2=A");
  });

  it("diagonal click opens the per-class single view", async () => {
    await bench.openSingle("C");
    expect(api.log.length).toBe(2);
    expect(api.log[1]).toContain("attr=C");
    expect(api.log[1]).not.toContain("attr2");
  });

  it("closing the drill-down goes back to the grid with one query", async () => {
    await bench.openPair("A", "B");
    await bench.closePair();
    expect(api.log.length).toBe(3);
    expect(api.log[2]).toContain("/api/v1/grid");
  });

  it("dropping a drilled-down attribute falls back to the grid, one query", async () => {
    await bench.openPair("A", "B");
    await bench.setAttributes(["A", "C"]);
    expect(api.log.length).toBe(3);
    expect(api.log[2]).toContain("/api/v1/grid");
    expect(bench.state.pair).toBeNull();
  });

  it("slice state round-trips through the address bar", async () => {
    await bench.setAttentionBand(0.6, 0.95);
    await bench.setTimeRange(2, 8);
    await bench.setMode("pos");
    await bench.setEpoch(20);
    await bench.openPair("B", "C");
    expect(fromQuery(toQuery(bench.state))).toEqual(bench.state);
  });

  it("rejects invalid control values without querying", () => {
    expect(() => bench.setAttentionBand(0.8, 0.2)).toThrow();
    expect(() => bench.openPair("A", "A")).toThrow();
    expect(api.log.length).toBe(1);
  });
});

describe("failures", () => {
  it("raises a toast with a retry that costs one query", async () => {
    let healthy = false;
    const api = new ApiClient("", (url: string) => {
      if (!healthy && url.includes("/grid")) {
        return Promise.resolve({
          ok: false,
          status: 500,
          json: () => Promise.resolve({ code: "boom", message: "flaky backend" }),
        });
      }
      return fakeFetch([{ match: () => true, body: gridDoc }])(url);
    });
    const rec = recordingSinks();
    const bench = new Workbench(api, rec.sinks);
    await bench.refresh();
    expect(rec.seen.toasts.length).toBe(1);
    expect(rec.seen.toasts[0].message).toContain("flaky backend");
    expect(rec.seen.grids.length).toBe(0);
    healthy = true;
    await rec.seen.toasts[0].retry();
    expect(api.log.length).toBe(2);
    expect(rec.seen.grids.length).toBe(1);
  });

  it("a wire version mismatch raises the blocking banner, not a toast", async () => {
    const api = new ApiClient("", fakeFetch([
      { match: () => true, body: { ...gridDoc, v: 3 } },
    ]));
    const rec = recordingSinks();
    const bench = new Workbench(api, rec.sinks);
    await bench.refresh();
    expect(rec.seen.banners.length).toBe(1);
    expect(rec.seen.banners[0]).toContain("version 3");
    expect(rec.seen.toasts.length).toBe(0);
    expect(rec.seen.grids.length).toBe(0);
  });
});

describe("rapid slice changes", () => {
  it("renders only the latest slice when responses arrive out of order", async () => {
    const pending: Array<{ url: string; resolve: (r: ResponseLike) => void }> = [];
    const api = new ApiClient("", (url: string) =>
      new Promise<ResponseLike>((resolve) => pending.push({ url, resolve })));
    const rec = recordingSinks();
    const bench = new Workbench(api, rec.sinks);

    const first = bench.setAttentionBand(0.3, 1);
    const second = bench.setAttentionBand(0.6, 1);
    expect(api.log.length).toBe(2);

    const reply = (i: number, lo: number): void => pending[i].resolve({
      ok: true,
      status: 200,
      json: () => Promise.resolve({ ...gridDoc, slice: { ...gridDoc.slice, att_lo: lo } }),
    });
    reply(1, 0.6);
    reply(0, 0.3);
    await Promise.all([first, second]);

    expect(rec.seen.grids.length).toBe(1);
    expect(rec.seen.grids[0].slice.att_lo).toBe(0.6);
  });
});
