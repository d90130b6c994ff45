/** Temporal pattern graphs rendered to an SVG string.
 *
 * One column of node positions per timestep axis. Single-attribute
 * documents arrive as two class graphs and render as juxtaposed
 * panels, purple for the positive class and orange for the negative;
 * combined two-attribute documents render as one panel with both
 * classes overlaid. Edges are drawn in ascending frequency order so
 * the strongest patterns end up on top, with opacity proportional to
 * frequency; edges flagged curved bow upward proportionally to their
 * timestep distance. Node intensity scales with event count.
 *
 * Rendering is pure: identical documents yield identical strings.
 */

import { classColor, classFill } from "./color.js";
import {
  AttributeInfo,
  checkVersion,
  ClassLabel,
  GraphNode,
  PatternDoc,
  PatternGraph,
} from "./types.js";

export const COL_W = 46;
export const ROW_H = 26;
export const NODE = 10;
export const BOW = 8;
const PAD_L = 64;
const PAD_T = 34;
const PAD_B = 26;
const PANEL_GAP = 40;

function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function fmt(x: number): string {
  const r = Math.round(x * 10000) / 10000;
  return String(r);
}

interface DrawEdge {
  cls: ClassLabel;
  freq: number;
  from: [number, number];
  to: [number, number];
  curved: boolean;
  curvature: number;
}

function drawableEdges(g: PatternGraph): DrawEdge[] {
  const out: DrawEdge[] = [];
  for (const e of g.edges) {
    if (e.freq_pos > 0) {
      out.push({ cls: "pos", freq: e.freq_pos, from: e.from, to: e.to,
                 curved: e.curved, curvature: e.curvature });
    }
    if (e.freq_neg > 0) {
      out.push({ cls: "neg", freq: e.freq_neg, from: e.from, to: e.to,
                 curved: e.curved, curvature: e.curvature });
    }
  }
  // ascending frequency, stable: the strongest pattern is drawn last
  return out.map((e, i) => [e, i] as const)
    .sort((a, b) => a[0].freq - b[0].freq || a[1] - b[1])
    .map(([e]) => e);
}

function nodeTitle(g: PatternGraph, node: GraphNode, attrs?: AttributeInfo[]): string {
  let where: string;
  if (g.variant === "combined" && node.levels !== undefined) {
    const [lp, lq] = node.levels;
    if (attrs !== undefined && g.attr2 !== null) {
      const a = attrs[g.attr];
      const b = attrs[g.attr2];
      where = `${a.name}=${a.levels[lp]}, ${b.name}=${b.levels[lq]}`;
    } else {
      where = `levels ${lp}/${lq}`;
    }
  } else if (attrs !== undefined && node.level !== undefined) {
    const a = attrs[g.attr];
    where = `${a.name}=${a.levels[node.level]}`;
  } else {
    where = `level ${node.level ?? node.pos}`;
  }
  return `t=${node.t}, ${where} | pos ${node.freq_pos}, neg ${node.freq_neg}`;
}

function panelTitle(g: PatternGraph, attrs?: AttributeInfo[]): string {
  const name = (i: number) => (attrs !== undefined ? attrs[i].name : `#${i}`);
  const subject = g.attr2 !== null ? `${name(g.attr)} x ${name(g.attr2)}` : name(g.attr);
  if (g.class === null) return `${subject}, both classes`;
  return `${subject}, ${g.class === "pos" ? "positive" : "negative"} class`;
}

function renderPanel(g: PatternGraph, ox: number, attrs?: AttributeInfo[]): string {
  const tIndex = new Map<number, number>();
  g.axes.forEach((t, i) => tIndex.set(t, i));
  const x = (t: number) => ox + PAD_L + (tIndex.get(t) ?? 0) * COL_W;
  const y = (pos: number) => PAD_T + pos * ROW_H;

  const parts: string[] = [];
  const titleColor = g.class !== null ? classColor(g.class) : "#333333";
  parts.push(`<g class="panel" data-class="${g.class ?? "both"}">`);
  parts.push(
    `<text x="${ox + PAD_L}" y="${PAD_T - 16}" class="hdr" fill="${titleColor}">` +
    `${esc(panelTitle(g, attrs))}</text>`);

  if (g.nodes.length === 0) {
    parts.push(
      `<text x="${ox + PAD_L}" y="${PAD_T + 10}" class="empty">` +
      `no events in this slice</text>`);
    parts.push("</g>");
    return parts.join("");
  }

  for (let i = 0; i < g.axes.length; i++) {
    const ax = ox + PAD_L + i * COL_W;
    const bottom = y(g.n_positions - 1) + NODE;
    parts.push(
      `<line x1="${ax}" y1="${PAD_T - 6}" x2="${ax}" y2="${bottom}" ` +
      `stroke="#dddddd" stroke-width="1"/>`);
    parts.push(
      `<text x="${ax}" y="${bottom + 16}" class="lbl" text-anchor="middle">t=${g.axes[i]}</text>`);
  }

  if (g.variant === "single" && attrs !== undefined) {
    const levels = attrs[g.attr].levels;
    for (let p = 0; p < g.n_positions && p < levels.length; p++) {
      parts.push(
        `<text x="${ox + PAD_L - NODE}" y="${y(p) + 4}" class="lbl" ` +
        `text-anchor="end">${esc(levels[p])}</text>`);
    }
  }

  const maxEdge = Math.max(g.max_edge_freq, 1);
  for (const e of drawableEdges(g)) {
    const x1 = x(e.from[0]);
    const y1 = y(e.from[1]);
    const x2 = x(e.to[0]);
    const y2 = y(e.to[1]);
    const opacity = fmt(e.freq / maxEdge);
    const stroke = classColor(e.cls);
    if (e.curved) {
      const cx = (x1 + x2) / 2;
      const cy = (y1 + y2) / 2 - BOW * e.curvature;
      parts.push(
        `<path class="edge" d="M${x1},${y1} Q${fmt(cx)},${fmt(cy)} ${x2},${y2}" ` +
        `fill="none" stroke="${stroke}" stroke-opacity="${opacity}" stroke-width="1.6"/>`);
    } else {
      parts.push(
        `<line class="edge" x1="${x1}" y1="${y1}" x2="${x2}" y2="${y2}" ` +
        `stroke="${stroke}" stroke-opacity="${opacity}" stroke-width="1.6"/>`);
    }
  }

  const maxNode = Math.max(g.max_node_freq, 1);
  for (const node of g.nodes) {
    const cx = x(node.t);
    const cy = y(node.pos);
    const title = esc(nodeTitle(g, node, attrs));
    const half = NODE / 2;
    parts.push(`<g class="node"><title>${title}</title>`);
    if (node.freq_pos > 0 && node.freq_neg > 0) {
      parts.push(
        `<rect x="${cx - half}" y="${cy - half}" width="${half}" height="${NODE}" ` +
        `fill="${classFill("pos", node.freq_pos / maxNode)}" stroke="#555" stroke-width="0.4"/>`);
      parts.push(
        `<rect x="${cx}" y="${cy - half}" width="${half}" height="${NODE}" ` +
        `fill="${classFill("neg", node.freq_neg / maxNode)}" stroke="#555" stroke-width="0.4"/>`);
    } else {
      const cls: ClassLabel = node.freq_pos > 0 ? "pos" : "neg";
      const freq = node.freq_pos > 0 ? node.freq_pos : node.freq_neg;
      parts.push(
        `<rect x="${cx - half}" y="${cy - half}" width="${NODE}" height="${NODE}" ` +
        `fill="${classFill(cls, freq / maxNode)}" stroke="#555" stroke-width="0.4"/>`);
    }
    parts.push("</g>");
  }

  parts.push("</g>");
  return parts.join("");
}

function panelWidth(g: PatternGraph): number {
  return PAD_L + Math.max(g.axes.length - 1, 0) * COL_W + NODE + 14;
}

/** Render a pattern-graph document. Throws VersionError on mismatch. */
export function renderPatterns(doc: PatternDoc, attrs?: AttributeInfo[]): string {
  checkVersion(doc);
  let width = 10;
  let height = PAD_T + PAD_B + 20;
  for (const g of doc.graphs) {
    width += panelWidth(g) + PANEL_GAP;
    height = Math.max(height, PAD_T + g.n_positions * ROW_H + PAD_B);
  }
  width = Math.max(width - PANEL_GAP + 10, 160);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
    `viewBox="0 0 ${width} ${height}" class="pattern-graphs">`);
  parts.push(
    `<style>.lbl{font:10px sans-serif;fill:#333}.hdr{font:11px sans-serif}` +
    `.empty{font:11px sans-serif;fill:#777}</style>`);
  parts.push(`<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff"/>`);
  let ox = 10;
  for (const g of doc.graphs) {
    parts.push(renderPanel(g, ox, attrs));
    ox += panelWidth(g) + PANEL_GAP;
  }
  parts.push("</svg>");
  return parts.join("");
}
