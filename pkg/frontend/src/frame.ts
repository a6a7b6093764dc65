import type { Action, ChainDoc, Comparison, Op, Scalar } from "./chain.js";
import { renderChain } from "./runner.js";
import { toHostTable, type HostTable } from "./table.js";

/**
 * Connector configuration, passed as a plain mapping. `collections` maps
 * collection names to JSONL files; when present, actions execute against
 * the primary's local engine, otherwise the bind is render-only and
 * actions behave like the primary's dry-run connector (queries render,
 * nothing executes, results are empty).
 */
export interface ConnectorConfig {
  collections?: Record<string, string>;
}

export interface RenderedQuery {
  query: string;
  prepared: string | null;
}

interface FrameState {
  pack: string;
  namespace: string;
  collection: string;
  ops: Op[];
  rootId: number;
  config: ConnectorConfig;
}

let nextRootId = 1;

/**
 * Handle to a lazy frame in the primary component. Holds no query-building
 * logic: every operation extends an op-chain document that the primary's
 * render CLI replays against its own Frame API. Instances are immutable;
 * each method returns a new handle.
 */
export class BoundFrame {
  readonly pack: string;
  readonly connector: "local" | "dryrun";
  readonly rootId: number;
  private readonly state: FrameState;

  /** @internal use bind() */
  constructor(state: FrameState) {
    this.state = state;
    this.pack = state.pack;
    this.rootId = state.rootId;
    this.connector =
      Object.keys(state.config.collections ?? {}).length > 0 ? "local" : "dryrun";
  }

  /** @internal */
  _push(op: Op, rootId?: number, config?: ConnectorConfig): BoundFrame {
    return new BoundFrame({
      ...this.state,
      ops: [...this.state.ops, op],
      rootId: rootId ?? this.state.rootId,
      config: config ?? this.state.config,
    });
  }

  #doc(action?: Action, execute?: boolean): ChainDoc {
    const doc: ChainDoc = {
      pack: this.state.pack,
      namespace: this.state.namespace,
      collection: this.state.collection,
      ops: this.state.ops,
    };
    if (action) doc.action = action;
    if (execute && this.connector === "local") {
      doc.execute = { collections: { ...this.state.config.collections } };
    }
    return doc;
  }

  #sameRoot(other: BoundFrame, what: string): void {
    if (other.rootId !== this.rootId) {
      throw new Error(`${what} was built from a different bind`);
    }
  }

  // -- column access and masks (the [] forms) --

  /** df['col']: single-column projection. */
  get(column: string): BoundFrame {
    return this._push({ op: "project", columns: [column] });
  }

  /** df[['a','b']]: multi-column projection. */
  select(columns: string[]): BoundFrame {
    return this._push({ op: "project", columns: [...columns] });
  }

  /** df[mask]: keep rows where the mask is true. */
  filter(mask: BoundFrame): BoundFrame {
    this.#sameRoot(mask, "mask");
    return this._push({ op: "filter", mask: mask.state.ops });
  }

  // -- comparisons --

  eq(value: Scalar): BoundFrame {
    return this.#compare("eq", value);
  }

  ne(value: Scalar): BoundFrame {
    return this.#compare("ne", value);
  }

  gt(value: Scalar): BoundFrame {
    return this.#compare("gt", value);
  }

  lt(value: Scalar): BoundFrame {
    return this.#compare("lt", value);
  }

  ge(value: Scalar): BoundFrame {
    return this.#compare("ge", value);
  }

  le(value: Scalar): BoundFrame {
    return this.#compare("le", value);
  }

  #compare(cmp: Comparison, value: Scalar): BoundFrame {
    return this._push({ op: "compare", cmp, value });
  }

  // -- boolean combinators --

  and(other: BoundFrame): BoundFrame {
    this.#sameRoot(other, "operand");
    return this._push({ op: "logical_and", mask: other.state.ops });
  }

  or(other: BoundFrame): BoundFrame {
    this.#sameRoot(other, "operand");
    return this._push({ op: "logical_or", mask: other.state.ops });
  }

  not(): BoundFrame {
    return this._push({ op: "logical_not" });
  }

  isna(): BoundFrame {
    return this._push({ op: "isna" });
  }

  // -- other transformations --

  /** df['col'].map(str.upper); only 'upper' is supported. */
  map(fn: string): BoundFrame {
    if (fn !== "upper") {
      throw new Error(`unsupported map function ${fn}; only "upper"`);
    }
    return this._push({ op: "map_upper" });
  }

  groupby(key: string): GroupedFrame {
    return new GroupedFrame(this, key);
  }

  sortValues(col: string, ascending = true): BoundFrame {
    return this._push({ op: "sort_values", col, ascending });
  }

  /**
   * Inner join. The merged frame starts a fresh lineage, mirroring the
   * primary: masks built before the merge no longer apply. Collection
   * mappings from both sides are combined so the result stays executable.
   */
  merge(
    right: BoundFrame,
    opts: { leftOn: string; rightOn: string; how?: string },
  ): BoundFrame {
    if (right.pack !== this.pack) {
      throw new Error(`cannot merge across packs (${this.pack} vs ${right.pack})`);
    }
    const config: ConnectorConfig = {
      collections: {
        ...right.state.config.collections,
        ...this.state.config.collections,
      },
    };
    return this._push(
      {
        op: "merge",
        right: {
          namespace: right.state.namespace,
          collection: right.state.collection,
          ops: right.state.ops,
        },
        left_on: opts.leftOn,
        right_on: opts.rightOn,
        how: opts.how ?? "inner",
      },
      nextRootId++,
      config,
    );
  }

  describe(columns: string[]): BoundFrame {
    return this._push({ op: "describe", columns: [...columns] });
  }

  getDummies(col: string): BoundFrame {
    if (this.connector !== "local") {
      // the primary lists the column's distinct values when building this
      // step, which a render-only bind has no data for
      throw new Error("getDummies needs a connector config with collections");
    }
    return this._push({ op: "get_dummies", col });
  }

  // -- actions --

  head(n = 5): HostTable {
    const out = renderChain(this.#doc({ kind: "head", n }, true));
    if (out.result == null) {
      return { columns: [], rows: [], shape: [0, 0] };
    }
    return toHostTable(out.result);
  }

  /** len(df): row count. */
  len(): number {
    const out = renderChain(this.#doc({ kind: "count" }, true));
    if (out.result == null || !("scalar" in out.result)) {
      return 0;
    }
    return Number(out.result.scalar);
  }

  /** Aggregate the single projected column to a scalar, e.g. agg('max'). */
  agg(func: string): Scalar {
    const out = renderChain(this.#doc({ kind: "agg", func }, true));
    if (out.result == null || !("scalar" in out.result)) {
      return null;
    }
    return out.result.scalar;
  }

  /**
   * Render the query this frame stands for without executing anything;
   * pass an action to see its finalized form (e.g. the LIMIT applied by
   * head). `prepared` is the connector-ready text, which for pipeline
   * packs wraps the stage array in the aggregate(...) envelope.
   */
  render(action?: Action): RenderedQuery {
    const out = renderChain(this.#doc(action, false));
    return { query: out.query, prepared: out.prepared };
  }
}

/** df.groupby(key), optionally narrowed to one column before agg. */
export class GroupedFrame {
  constructor(
    private readonly frame: BoundFrame,
    private readonly key: string,
    private readonly col?: string,
  ) {}

  /** df.groupby(key)[col] */
  get(column: string): GroupedFrame {
    return new GroupedFrame(this.frame, this.key, column);
  }

  /** Aggregates default to the group key itself, as in .agg('count'). */
  agg(func: string, column?: string): BoundFrame {
    const col = column ?? this.col ?? this.key;
    return this.frame._push({ op: "groupby_agg", key: this.key, func, col });
  }
}

/**
 * Open a lazy frame over namespace.collection rendered through the named
 * pack. Validates eagerly by rendering the scan, so an unknown pack fails
 * here rather than on first use.
 */
export function bind(
  namespace: string,
  collection: string,
  pack: string,
  config: ConnectorConfig = {},
): BoundFrame {
  const frame = new BoundFrame({
    pack,
    namespace,
    collection,
    ops: [],
    rootId: nextRootId++,
    config,
  });
  frame.render();
  return frame;
}
