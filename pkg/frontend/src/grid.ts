/** Pairwise matrix grid rendered to an SVG string.
 *
 * Blocks are laid out attribute-by-attribute: heat matrices below the
 * diagonal, temporal-variance matrices above, single-attribute
 * matrices on it. Cell color comes from the server's log-scaled
 * display intensities: diverging blue/red for single-matrix modes,
 * diagonally split per-class triangles in "both" mode. Every cell
 * carries a <title> with the exact values, and each block is tagged
 * with data attributes so the shell can map clicks to drill-downs.
 *
 * Rendering is pure: identical documents yield identical strings.
 */

import { blend, divergingFill, HEAT_NEG, HEAT_POS, legendStops } from "./color.js";
import { checkVersion, GridDoc, GridMatrix } from "./types.js";

export const CELL = 14;
export const GAP = 30;
const MARGIN_LEFT = 86;
const MARGIN_TOP = 46;
const LEGEND_H = 46;

function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fmt(x: number): string {
  return Number.isInteger(x) ? String(x) : x.toFixed(4);
}

function cellTitle(m: GridMatrix, doc: GridDoc, r: number, c: number): string {
  const attrP = doc.attributes[m.p];
  const attrQ = doc.attributes[m.q];
  const what = m.kind === "variance" ? "var" : "heat";
  return (
    `${attrP.name}=${attrP.levels[c]}, ${attrQ.name}=${attrQ.levels[r]}` +
    ` | ${what} pos ${fmt(m.pos[r][c])}, neg ${fmt(m.neg[r][c])}`
  );
}

function splitCell(x: number, y: number, dp: number, dn: number, title: string): string {
  const posFill = blend("#ffffff", HEAT_POS, dp);
  const negFill = blend("#ffffff", HEAT_NEG, dn);
  return (
    `<g class="cell"><title>${esc(title)}</title>` +
    `<path d="M${x},${y} L${x + CELL},${y} L${x},${y + CELL} Z" fill="${posFill}"/>` +
    `<path d="M${x + CELL},${y} L${x + CELL},${y + CELL} L${x},${y + CELL} Z" fill="${negFill}"/>` +
    `</g>`
  );
}

function plainCell(x: number, y: number, display: number, title: string): string {
  return (
    `<g class="cell"><title>${esc(title)}</title>` +
    `<rect x="${x}" y="${y}" width="${CELL}" height="${CELL}" fill="${divergingFill(display)}"/>` +
    `</g>`
  );
}

function legend(x: number, y: number, width: number): string {
  const stops = legendStops(40);
  const step = width / stops.length;
  const parts: string[] = [
    `<text x="${x}" y="${y - 4}" class="lbl">-1</text>`,
    `<text x="${x + width / 2}" y="${y - 4}" class="lbl" text-anchor="middle">0</text>`,
    `<text x="${x + width}" y="${y - 4}" class="lbl" text-anchor="end">+1</text>`,
  ];
  stops.forEach((fill, i) => {
    parts.push(
      `<rect x="${fmt(x + i * step)}" y="${y}" width="${fmt(step + 0.5)}" height="10" fill="${fill}"/>`);
  });
  parts.push(
    `<text x="${x + width / 2}" y="${y + 24}" class="lbl" text-anchor="middle">` +
    `log intensity, blue positive-leaning, red negative-leaning</text>`);
  return parts.join("");
}

/** Render a grid document. Throws VersionError on a version mismatch. */
export function renderGrid(doc: GridDoc): string {
  checkVersion(doc);
  const n = doc.attributes.length;
  const sizes = doc.attributes.map((a) => a.levels.length * CELL);
  const offX: number[] = [];
  const offY: number[] = [];
  let ax = MARGIN_LEFT;
  let ay = MARGIN_TOP;
  for (let i = 0; i < n; i++) {
    offX.push(ax);
    ax += sizes[i] + GAP;
    offY.push(ay);
    ay += sizes[i] + GAP;
  }
  const bodyW = ax - GAP + 20;
  const legendY = ay - GAP + 28;
  const totalH = legendY + LEGEND_H;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${bodyW}" height="${totalH}" ` +
    `viewBox="0 0 ${bodyW} ${totalH}" class="matrix-grid">`);
  parts.push(`<style>.lbl{font:10px sans-serif;fill:#333}.hdr{font:11px sans-serif;fill:#111}</style>`);
  parts.push(`<rect x="0" y="0" width="${bodyW}" height="${totalH}" fill="#ffffff"/>`);

  for (let i = 0; i < n; i++) {
    const name = esc(doc.attributes[i].name);
    parts.push(
      `<text x="${offX[i] + sizes[i] / 2}" y="${MARGIN_TOP - 10}" class="hdr" ` +
      `text-anchor="middle">${name}</text>`);
    parts.push(
      `<text x="${MARGIN_LEFT - 10}" y="${offY[i] + sizes[i] / 2 + 4}" class="hdr" ` +
      `text-anchor="end">${name}</text>`);
  }

  for (const m of doc.matrices) {
    const x0 = offX[m.p];
    const y0 = offY[m.q];
    const nameP = esc(doc.attributes[m.p].name);
    const nameQ = esc(doc.attributes[m.q].name);
    parts.push(
      `<g class="block ${m.kind}" data-p="${m.p}" data-q="${m.q}" ` +
      `data-attr-p="${nameP}" data-attr-q="${nameQ}">`);
    for (let r = 0; r < m.rows; r++) {
      for (let c = 0; c < m.cols; c++) {
        const x = x0 + c * CELL;
        const y = y0 + r * CELL;
        const title = cellTitle(m, doc, r, c);
        if (m.display === null) {
          parts.push(splitCell(x, y, m.display_pos[r][c], m.display_neg[r][c], title));
        } else {
          parts.push(plainCell(x, y, m.display[r][c], title));
        }
      }
    }
    parts.push(
      `<rect x="${x0}" y="${y0}" width="${m.cols * CELL}" height="${m.rows * CELL}" ` +
      `fill="none" stroke="#999" stroke-width="0.5"/>`);
    parts.push("</g>");
  }

  parts.push(legend(MARGIN_LEFT, legendY + 14, Math.max(ax - GAP - MARGIN_LEFT, 120)));
  parts.push("</svg>");
  return parts.join("");
}
