/** View controller: slice mutations, one server query each.
 *
 * The workbench owns the ViewState and pushes rendered documents into
 * sinks supplied by the shell. Every control mutation issues exactly
 * one grid or graph query; stale responses are dropped by the client's
 * latest-wins channel, so rapid slider motion renders only the final
 * slice. Failures surface as a toast with a retry hook, except wire
 * version mismatches, which raise a blocking banner.
 */

import { ApiClient } from "./api.js";
import { DEFAULT_VIEW, QueryError, ViewState } from "./state.js";
import { GridDoc, Mode, PatternDoc, VersionError, WIRE_VERSION } from "./types.js";

export interface ViewSinks {
  grid(doc: GridDoc): void;
  patterns(doc: PatternDoc): void;
  /** Transient failure; retry re-issues the failed query. */
  toast(message: string, retry: () => Promise<void>): void;
  /** Blocking failure, e.g. a wire version this build cannot read. */
  banner(message: string): void;
}

export class Workbench {
  state: ViewState;

  constructor(
    private readonly api: ApiClient,
    private readonly sinks: ViewSinks,
    initial?: ViewState,
  ) {
    this.state = initial !== undefined ? { ...initial } : { ...DEFAULT_VIEW };
  }

  /** Issue the query for the current state. Exactly one request. */
  async refresh(): Promise<void> {
    try {
      if (this.state.pair !== null) {
        const doc = await this.api.patterns(this.state);
        if (doc !== null) {
          if (doc.v !== WIRE_VERSION) throw new VersionError(doc.v);
          this.sinks.patterns(doc);
        }
      } else {
        const doc = await this.api.grid(this.state);
        if (doc !== null) {
          if (doc.v !== WIRE_VERSION) throw new VersionError(doc.v);
          this.sinks.grid(doc);
        }
      }
    } catch (err) {
      if (err instanceof VersionError) {
        this.sinks.banner(err.message);
        return;
      }
      const message = err instanceof Error ? err.message : String(err);
      this.sinks.toast(message, () => this.refresh());
    }
  }

  setAttentionBand(lo: number, hi: number): Promise<void> {
    if (!(lo >= 0 && hi <= 1 && lo <= hi)) {
      throw new QueryError(`attention band must satisfy 0 <= lo <= hi <= 1, got [${lo}, ${hi}]`);
    }
    this.state = { ...this.state, attLo: lo, attHi: hi };
    return this.refresh();
  }

  setTimeRange(t0: number | null, t1: number | null): Promise<void> {
    if (t0 !== null && t1 !== null && t0 > t1) {
      throw new QueryError(`time range reversed: ${t0} > ${t1}`);
    }
    this.state = { ...this.state, t0, t1 };
    return this.refresh();
  }

  setMode(mode: Mode): Promise<void> {
    this.state = { ...this.state, mode };
    return this.refresh();
  }

  setEpoch(epoch: number | null): Promise<void> {
    this.state = { ...this.state, epoch };
    return this.refresh();
  }

  /** Replace the attribute display order (also: removal, reorder).
   * A drill-down selection that loses an attribute falls back to the
   * grid, still at the cost of the one query. */
  setAttributes(names: string[]): Promise<void> {
    let pair = this.state.pair;
    if (pair !== null && names.length > 0 && !pair.every((a) => names.includes(a))) {
      pair = null;
    }
    this.state = { ...this.state, attrs: [...names], pair };
    return this.refresh();
  }

  /** Off-diagonal matrix click: open the combined view for the pair.
   * A click on the mirror matrix of the open pair swaps primary and
   * secondary, since the mirror's (column, row) order is the reverse. */
  openPair(primary: string, secondary: string): Promise<void> {
    if (primary === secondary) throw new QueryError("pair attributes must differ");
    this.state = { ...this.state, pair: [primary, secondary] };
    return this.refresh();
  }

  /** Diagonal matrix click: per-class graphs for one attribute. */
  openSingle(name: string): Promise<void> {
    this.state = { ...this.state, pair: [name] };
    return this.refresh();
  }

  swapPair(): Promise<void> {
    if (this.state.pair === null || this.state.pair.length !== 2) {
      throw new QueryError("no combined pair open");
    }
    const [a, b] = this.state.pair;
    this.state = { ...this.state, pair: [b, a] };
    return this.refresh();
  }

  closePair(): Promise<void> {
    this.state = { ...this.state, pair: null };
    return this.refresh();
  }
}
