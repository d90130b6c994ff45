/** Wire shapes for the /api/v1 JSON endpoints. */

export const WIRE_VERSION = 1;

export type ClassLabel = "pos" | "neg";

/** Grid display mode, short query tokens. */
export type Mode = "pos" | "neg" | "both" | "diff";

export const MODES: readonly Mode[] = ["pos", "neg", "both", "diff"];

export interface AttributeInfo {
  index: number;
  kind: string;
  levels: string[];
  name: string;
}

export interface SchemaDoc {
  v: number;
  attributes: AttributeInfo[];
  instances: { pos: number; neg: number; total: number };
  t_max: number;
}

export interface CheckpointInfo {
  epoch: number;
  loss: number;
  seed: number;
  train_accuracy: number;
  test_accuracy: number | null;
}

export interface CheckpointsDoc {
  v: number;
  checkpoints: CheckpointInfo[];
}

export type MatrixKind = "heat" | "variance" | "diagonal";

/**
 * One attribute-pair matrix. p indexes the column attribute, q the row
 * attribute; p < q sits below the grid diagonal (heat), p > q above
 * (variance). `display` is the signed log intensity in [-1, 1] for
 * single-matrix modes and null in "both" mode, where the per-class
 * `display_pos`/`display_neg` drive split cells.
 */
export interface GridMatrix {
  p: number;
  q: number;
  kind: MatrixKind;
  rows: number;
  cols: number;
  pos: number[][];
  neg: number[][];
  display: number[][] | null;
  display_pos: number[][];
  display_neg: number[][];
  series: { pos: number[][][]; neg: number[][][] };
}

export interface GridSlice {
  att_lo: number;
  att_hi: number;
  basis: string;
  epoch: number;
  mode: string;
  t0: number;
  t1: number;
}

export interface GridDoc {
  v: number;
  slice: GridSlice;
  display_max: { heat: number; variance: number };
  attributes: AttributeInfo[];
  matrices: GridMatrix[];
}

export interface GraphNode {
  t: number;
  pos: number;
  level?: number;
  levels?: number[];
  freq_pos: number;
  freq_neg: number;
}

export interface GraphEdge {
  from: [number, number];
  to: [number, number];
  freq_pos: number;
  freq_neg: number;
  curved: boolean;
  curvature: number;
}

export interface PatternGraph {
  v: number;
  attr: number;
  attr2: number | null;
  variant: "single" | "combined";
  class: ClassLabel | null;
  axes: number[];
  n_positions: number;
  max_node_freq: number;
  max_edge_freq: number;
  nodes: GraphNode[];
  edges: GraphEdge[];
}

export interface PatternDoc {
  v: number;
  attr: string;
  attr2: string | null;
  epoch: number;
  slice: { att_lo: number; att_hi: number; t0: number; t1: number };
  variant: "single" | "combined";
  graphs: PatternGraph[];
}

export interface ErrorBody {
  code: string;
  message: string;
}

/** Thrown by renderers when a document's wire version is unsupported. */
export class VersionError extends Error {
  constructor(readonly got: number) {
    super(`unsupported response version ${got}, expected ${WIRE_VERSION}`);
    this.name = "VersionError";
  }
}

export function checkVersion(doc: { v: number }): void {
  if (doc.v !== WIRE_VERSION) throw new VersionError(doc.v);
}
