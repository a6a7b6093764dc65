import { describe, expect, it } from "vitest";
import { toHostTable } from "../src/index.js";

describe("toHostTable", () => {
  it("maps records to positional rows with null for absent cells", () => {
    const table = toHostTable({
      columns: ["a", "b"],
      rows: [{ a: 1, b: "x" }, { a: 2, b: null }, { a: 3 }],
    });
    expect(table.columns).toEqual(["a", "b"]);
    expect(table.shape).toEqual([3, 2]);
    expect(table.rows).toEqual([
      [1, "x"],
      [2, null],
      [3, null],
    ]);
  });

  it("keeps the declared column order, not the key order of the records", () => {
    const table = toHostTable({ columns: ["b", "a"], rows: [{ a: 1, b: 2 }] });
    expect(table.rows).toEqual([[2, 1]]);
  });

  it("gives an empty table for empty input", () => {
    const table = toHostTable({ columns: [], rows: [] });
    expect(table.shape).toEqual([0, 0]);
    expect(table.rows).toEqual([]);
  });

  it("refuses scalar results", () => {
    expect(() => toHostTable({ scalar: 7 })).toThrow(/scalar/);
  });
});
