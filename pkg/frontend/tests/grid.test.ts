import { describe, expect, it } from "vitest";

import { divergingFill } from "../src/color.js";
import { renderGrid } from "../src/grid.js";
import { GridDoc, VersionError } from "../src/types.js";
import { assertWellFormed, fixture, rgb } from "./helpers.js";

const bothGrid = fixture<GridDoc>("grid_default.json");
const diffGrid = fixture<GridDoc>("grid_highband_diff.json");

function zeroGrid(): GridDoc {
  const z = (): number[][] => [[0, 0], [0, 0]];
  const zs = (): number[][][] => [[[0], [0]], [[0], [0]]];
  const attr = (i: number, name: string) => ({
    index: i, kind: "categorical", levels: ["x", "y"], name,
  });
  const matrix = (p: number, q: number, kind: "heat" | "variance" | "diagonal") => ({
    p, q, kind, rows: 2, cols: 2,
    pos: z(), neg: z(),
    display: z(), display_pos: z(), display_neg: z(),
    series: { pos: zs(), neg: zs() },
  });
  return {
    v: 1,
    slice: { att_lo: 0.9, att_hi: 1, basis: "normalized", epoch: 0, mode: "positive", t0: 1, t1: 1 },
    display_max: { heat: 0, variance: 0 },
    attributes: [attr(0, "a"), attr(1, "b")],
    matrices: [
      matrix(0, 0, "diagonal"), matrix(1, 0, "variance"),
      matrix(0, 1, "heat"), matrix(1, 1, "diagonal"),
    ],
  };
}

describe("renderGrid on recorded slices", () => {
  it("renders the default both-mode slice", () => {
    const svg = renderGrid(bothGrid);
    assertWellFormed(svg);
    expect(svg.startsWith("<svg")).toBe(true);
    const blocks = svg.match(/<g class="block /g) ?? [];
    expect(blocks.length).toBe(9);
    // both mode splits each cell into a per-class triangle pair
    const cells = svg.match(/<g class="cell">/g) ?? [];
    expect(cells.length).toBe(9 * 25);
    const triangles = svg.match(/<path d="M/g) ?? [];
    expect(triangles.length).toBe(2 * 9 * 25);
  });

  it("renders the high-band difference slice", () => {
    const svg = renderGrid(diffGrid);
    assertWellFormed(svg);
    // single-matrix mode: one rect per cell, no split triangles
    expect(svg).not.toContain('<path d="M');
    const rects = svg.match(/<g class="cell"><title>[^<]*<\/title><rect/g) ?? [];
    expect(rects.length).toBe(9 * 25);
  });

  it("lays heat below the diagonal and variance above", () => {
    const svg = renderGrid(bothGrid);
    for (const m of bothGrid.matrices) {
      const tag = `class="block ${m.kind}" data-p="${m.p}" data-q="${m.q}"`;
      expect(svg).toContain(tag);
      if (m.p < m.q) expect(m.kind).toBe("heat");
      if (m.p > m.q) expect(m.kind).toBe("variance");
      if (m.p === m.q) expect(m.kind).toBe("diagonal");
    }
  });

  it("difference cells lean blue where pos wins and red where neg wins", () => {
    const heat = diffGrid.matrices.find((m) => m.kind === "heat" && m.display !== null);
    expect(heat).toBeDefined();
    const display = heat!.display!;
    let posCell: number | null = null;
    let negCell: number | null = null;
    for (const row of display) {
      for (const v of row) {
        if (v > 0.15 && posCell === null) posCell = v;
        if (v < -0.15 && negCell === null) negCell = v;
      }
    }
    expect(posCell).not.toBeNull();
    expect(negCell).not.toBeNull();
    const svg = renderGrid(diffGrid);
    const posFill = divergingFill(posCell!);
    const negFill = divergingFill(negCell!);
    expect(svg).toContain(`fill="${posFill}"`);
    expect(svg).toContain(`fill="${negFill}"`);
    const [pr, , pb] = rgb(posFill);
    expect(pb).toBeGreaterThan(pr);
    const [nr, , nb] = rgb(negFill);
    expect(nr).toBeGreaterThan(nb);
  });

  it("hover titles carry level labels and exact values", () => {
    const svg = renderGrid(bothGrid);
    expect(svg).toContain("<title>A=v0, B=v0 | heat ");
    expect(svg).toContain("| var ");
    const m = bothGrid.matrices.find((x) => x.kind === "heat")!;
    const value = m.pos[1][2];
    expect(svg).toContain(value.toFixed(4));
  });

  it("draws the logarithmic legend", () => {
    const svg = renderGrid(bothGrid);
    expect(svg).toContain(">-1</text>");
    expect(svg).toContain(">+1</text>");
    expect(svg).toContain("log intensity");
  });
});

describe("renderGrid edge cases", () => {
  it("an all-zero slice renders blank cells without crashing", () => {
    const svg = renderGrid(zeroGrid());
    assertWellFormed(svg);
    const fills = svg.match(/<rect[^>]*fill="#ffffff"/g) ?? [];
    // 16 blank cells plus the page background
    expect(fills.length).toBe(17);
  });

  it("rejects an unsupported wire version", () => {
    expect(() => renderGrid({ ...bothGrid, v: 2 })).toThrow(VersionError);
  });

  it("is deterministic", () => {
    expect(renderGrid(bothGrid)).toBe(renderGrid(bothGrid));
    expect(renderGrid(diffGrid)).toBe(renderGrid(diffGrid));
  });

  it("escapes markup in attribute names", () => {
    const doc = zeroGrid();
    doc.attributes[0].name = "a<b>&\"c";
    const svg = renderGrid(doc);
    assertWellFormed(svg);
    expect(svg).toContain("a&lt;b&gt;&amp;&quot;c");
  });
});
