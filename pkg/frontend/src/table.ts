import type { RawResult, Scalar, TabularResult } from "./chain.js";

/**
 * Host-side tabular result. Cells are plain values with `null` as the one
 * missing marker: the primary distinguishes absent fields from explicit
 * nulls, but both arrive here as `null`.
 */
export interface HostTable {
  columns: string[];
  rows: Scalar[][];
  shape: [number, number];
}

export function toHostTable(result: RawResult): HostTable {
  if (!("rows" in result)) {
    throw new Error("result is a scalar, not a table");
  }
  const tabular = result as TabularResult;
  const columns = [...tabular.columns];
  const rows = tabular.rows.map((record) =>
    columns.map((col) => {
      const v = record[col];
      return v === undefined ? null : v;
    }),
  );
  return { columns, rows, shape: [rows.length, columns.length] };
}
