/** View state and its query-string form.
 *
 * The address bar is the single source of truth for a shareable view:
 * serializing a state and parsing it back yields the identical state.
 * Keys that sit at their default are omitted so the empty string is
 * the default view.
 */

import { MODES, Mode } from "./types.js";

/** Drill-down selection: one attribute (per-class juxtaposed graphs)
 * or [primary, secondary] (combined graph). */
export type PairSel = [string] | [string, string];

export interface ViewState {
  /** Attention band over per-sequence max-normalized weights. */
  attLo: number;
  attHi: number;
  /** Timestep range; null means unbounded on that side. */
  t0: number | null;
  t1: number | null;
  /** Attribute display order; empty means all, schema order. */
  attrs: string[];
  mode: Mode;
  /** Checkpoint epoch; null means the latest available. */
  epoch: number | null;
  /** Drill-down selection; null shows the grid. */
  pair: PairSel | null;
}

export const DEFAULT_VIEW: ViewState = Object.freeze({
  attLo: 0,
  attHi: 1,
  t0: null,
  t1: null,
  attrs: [],
  mode: "both",
  epoch: null,
  pair: null,
}) as ViewState;

export class QueryError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "QueryError";
  }
}

const KNOWN_KEYS = ["att_lo", "att_hi", "t0", "t1", "attrs", "mode", "epoch", "pair"];

export function toQuery(state: ViewState): string {
  const parts = new URLSearchParams();
  if (state.attLo !== 0) parts.set("att_lo", String(state.attLo));
  if (state.attHi !== 1) parts.set("att_hi", String(state.attHi));
  if (state.t0 !== null) parts.set("t0", String(state.t0));
  if (state.t1 !== null) parts.set("t1", String(state.t1));
  if (state.attrs.length > 0) parts.set("attrs", state.attrs.join(","));
  if (state.mode !== "both") parts.set("mode", state.mode);
  if (state.epoch !== null) parts.set("epoch", String(state.epoch));
  if (state.pair !== null) parts.set("pair", state.pair.join(","));
  return parts.toString();
}

function parseNumber(raw: string, key: string): number {
  if (raw.trim() === "") throw new QueryError(`${key} is empty`);
  const v = Number(raw);
  if (!Number.isFinite(v)) throw new QueryError(`${key} is not a number: ${raw}`);
  return v;
}

function parseInteger(raw: string, key: string): number {
  const v = parseNumber(raw, key);
  if (!Number.isInteger(v)) throw new QueryError(`${key} must be an integer, got ${raw}`);
  return v;
}

export function fromQuery(query: string): ViewState {
  const parts = new URLSearchParams(query.startsWith("?") ? query.slice(1) : query);
  for (const key of parts.keys()) {
    if (!KNOWN_KEYS.includes(key)) throw new QueryError(`unknown query key ${key}`);
  }
  const state: ViewState = { ...DEFAULT_VIEW, attrs: [], pair: null };

  const lo = parts.get("att_lo");
  if (lo !== null) state.attLo = parseNumber(lo, "att_lo");
  const hi = parts.get("att_hi");
  if (hi !== null) state.attHi = parseNumber(hi, "att_hi");
  if (state.attLo < 0 || state.attHi > 1 || state.attLo > state.attHi) {
    throw new QueryError(
      `attention band must satisfy 0 <= lo <= hi <= 1, got [${state.attLo}, ${state.attHi}]`);
  }

  const t0 = parts.get("t0");
  if (t0 !== null) state.t0 = parseInteger(t0, "t0");
  const t1 = parts.get("t1");
  if (t1 !== null) state.t1 = parseInteger(t1, "t1");
  if (state.t0 !== null && state.t0 < 1) throw new QueryError(`t0 must be >= 1, got ${state.t0}`);
  if (state.t1 !== null && state.t1 < 1) throw new QueryError(`t1 must be >= 1, got ${state.t1}`);
  if (state.t0 !== null && state.t1 !== null && state.t0 > state.t1) {
    throw new QueryError(`time range reversed: ${state.t0} > ${state.t1}`);
  }

  const attrs = parts.get("attrs");
  if (attrs !== null) {
    state.attrs = attrs.split(",");
    if (state.attrs.some((a) => a === "")) throw new QueryError("empty attribute name in attrs");
    if (new Set(state.attrs).size !== state.attrs.length) {
      throw new QueryError("duplicate attribute in attrs");
    }
  }

  const mode = parts.get("mode");
  if (mode !== null) {
    if (!MODES.includes(mode as Mode)) {
      throw new QueryError(`mode must be one of ${MODES.join("|")}, got ${mode}`);
    }
    state.mode = mode as Mode;
  }

  const epoch = parts.get("epoch");
  if (epoch !== null) {
    state.epoch = parseInteger(epoch, "epoch");
    if (state.epoch < 0) throw new QueryError(`epoch must be >= 0, got ${state.epoch}`);
  }

  const pair = parts.get("pair");
  if (pair !== null) {
    const names = pair.split(",");
    if (names.length < 1 || names.length > 2 || names.some((n) => n === "")) {
      throw new QueryError(`pair must name one or two attributes, got ${pair}`);
    }
    if (names.length === 2 && names[0] === names[1]) {
      throw new QueryError("pair attributes must differ");
    }
    state.pair = names.length === 2 ? [names[0], names[1]] : [names[0]];
  }

  return state;
}

/** Server query string for the grid endpoint under this state. */
export function gridQuery(state: ViewState): string {
  const parts = new URLSearchParams();
  if (state.attLo !== 0) parts.set("att_lo", String(state.attLo));
  if (state.attHi !== 1) parts.set("att_hi", String(state.attHi));
  if (state.t0 !== null) parts.set("t0", String(state.t0));
  if (state.t1 !== null) parts.set("t1", String(state.t1));
  if (state.attrs.length > 0) parts.set("attrs", state.attrs.join(","));
  parts.set("mode", state.mode);
  if (state.epoch !== null) parts.set("epoch", String(state.epoch));
  return parts.toString();
}

/** Server query string for the pattern-graph endpoint under the
 * state's drill-down selection. */
export function patternQuery(state: ViewState): string {
  if (state.pair === null) {
    throw new QueryError("pattern query needs a drill-down selection");
  }
  const parts = new URLSearchParams();
  parts.set("attr", state.pair[0]);
  if (state.pair.length === 2) parts.set("attr2", state.pair[1]);
  if (state.attLo !== 0) parts.set("att_lo", String(state.attLo));
  if (state.attHi !== 1) parts.set("att_hi", String(state.attHi));
  if (state.t0 !== null) parts.set("t0", String(state.t0));
  if (state.t1 !== null) parts.set("t1", String(state.t1));
  if (state.epoch !== null) parts.set("epoch", String(state.epoch));
  return parts.toString();
}
