// Wire types for the op-chain JSON documents the primary's `render`
// subcommand accepts, and for what it prints back.

export type Scalar = string | number | boolean | null;

export type Comparison = "eq" | "ne" | "gt" | "lt" | "ge" | "le";

export type Op =
  | { op: "project"; columns: string[] }
  | { op: "compare"; cmp: Comparison; value: Scalar }
  | { op: "logical_and"; mask: Op[] }
  | { op: "logical_or"; mask: Op[] }
  | { op: "logical_not" }
  | { op: "isna" }
  | { op: "map_upper" }
  | { op: "filter"; mask: Op[] }
  | { op: "groupby_agg"; key: string; func: string; col: string }
  | { op: "sort_values"; col: string; ascending: boolean }
  | { op: "merge"; right: RightSide; left_on: string; right_on: string; how: string }
  | { op: "describe"; columns: string[] }
  | { op: "get_dummies"; col: string };

export interface RightSide {
  namespace: string;
  collection: string;
  ops: Op[];
}

export type Action =
  | { kind: "head"; n: number }
  | { kind: "count" }
  | { kind: "agg"; func: string };

export interface ChainDoc {
  pack: string;
  namespace: string;
  collection: string;
  ops: Op[];
  action?: Action;
  execute?: { collections: Record<string, string> };
}

export type TabularResult = { columns: string[]; rows: Record<string, Scalar>[] };
export type ScalarResult = { scalar: Scalar };
export type RawResult = TabularResult | ScalarResult;

export interface RenderOutput {
  pack: string;
  query: string;
  prepared: string | null;
  result?: RawResult | null;
}
