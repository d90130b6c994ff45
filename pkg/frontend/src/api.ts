/** Thin JSON client for the /api/v1 endpoints.
 *
 * Every request lands in `log`, which the tests use to assert that a
 * control change costs exactly one query. View queries (grid, pattern
 * graphs) share a latest-wins channel: when a newer view query has
 * been issued, an older one resolves to null instead of delivering a
 * stale document, and its failure is swallowed.
 */

import { gridQuery, patternQuery, ViewState } from "./state.js";
import { CheckpointsDoc, ErrorBody, GridDoc, PatternDoc, SchemaDoc } from "./types.js";

export interface ResponseLike {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
}

export type FetchLike = (url: string) => Promise<ResponseLike>;

export class ApiError extends Error {
  constructor(readonly status: number, readonly code: string, message: string) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  /** Paths of every request issued, in order. */
  readonly log: string[] = [];
  private viewSeq = 0;

  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url) => fetch(url),
  ) {}

  private async get<T>(path: string): Promise<T> {
    this.log.push(path);
    const res = await this.fetchFn(this.baseUrl + path);
    let body: unknown;
    try {
      body = await res.json();
    } catch {
      body = null;
    }
    if (!res.ok) {
      const err = (body ?? {}) as Partial<ErrorBody>;
      throw new ApiError(res.status, err.code ?? "error",
                         err.message ?? `request failed with status ${res.status}`);
    }
    return body as T;
  }

  schema(): Promise<SchemaDoc> {
    return this.get("/api/v1/schema");
  }

  checkpoints(): Promise<CheckpointsDoc> {
    return this.get("/api/v1/checkpoints");
  }

  /** Latest-wins wrapper: resolves null when superseded. */
  private async view<T>(path: string): Promise<T | null> {
    const id = ++this.viewSeq;
    try {
      const doc = await this.get<T>(path);
      return id === this.viewSeq ? doc : null;
    } catch (err) {
      if (id === this.viewSeq) throw err;
      return null;
    }
  }

  grid(state: ViewState): Promise<GridDoc | null> {
    const q = gridQuery(state);
    return this.view(`/api/v1/grid${q ? "?" + q : ""}`);
  }

  patterns(state: ViewState): Promise<PatternDoc | null> {
    return this.view(`/api/v1/tpartite?${patternQuery(state)}`);
  }
}
