import { describe, expect, it } from "vitest";

import {
  adoptResultFields,
  applyResults,
  buildConstraints,
  initialState,
  nextRequest,
  satisfiableTypes,
  setChartType,
  setTable,
  toggleField,
  validateSelection,
} from "../src/state.js";
import type { FieldMeta } from "../src/types.js";

const FIELDS: FieldMeta[] = [
  { index: 0, name: "Program", type: "String" },
  { index: 1, name: "Male", type: "Decimal" },
  { index: 2, name: "Female", type: "Decimal" },
];

function withTable() {
  return setTable(initialState(), "t1", FIELDS);
}

describe("selection validation", () => {
  it("requires a table", () => {
    expect(validateSelection(initialState())).toMatch(/upload/);
  });

  it("accepts in-range selections", () => {
    let s = withTable();
    s = toggleField(s, 1);
    expect(validateSelection(s)).toBeNull();
  });

  it("blocks out-of-range field indices", () => {
    let s = withTable();
    s.selected.add(7);
    expect(validateSelection(s)).toMatch(/out of range/);
  });

  it("blocks negative indices", () => {
    const s = withTable();
    s.selected.add(-1);
    expect(validateSelection(s)).toMatch(/out of range/);
  });
});

describe("constraints", () => {
  it("serializes sorted field indices and a single chart type", () => {
    let s = withTable();
    s = toggleField(s, 2);
    s = toggleField(s, 0);
    s = setChartType(s, "bar");
    expect(buildConstraints(s)).toEqual({ fields: [0, 2], chartTypes: ["bar"] });
  });

  it("omits empty constraints", () => {
    expect(buildConstraints(withTable())).toEqual({});
  });

  it("adopts fields from a result sequence (refine loop)", () => {
    let s = withTable();
    s = adoptResultFields(s, "[Bar] (1) (2) [SEP] (0) [Stack]");
    expect([...s.selected].sort()).toEqual([0, 1, 2]);
  });
});

describe("satisfiable chart types", () => {
  it("scatter needs exactly two selected fields", () => {
    let s = withTable();
    s = toggleField(s, 1);
    expect(satisfiableTypes(s.fields, s.selected).has("scatter")).toBe(false);
    s = toggleField(s, 2);
    expect(satisfiableTypes(s.fields, s.selected).has("scatter")).toBe(true);
  });

  it("pie cannot absorb four required fields", () => {
    const fields: FieldMeta[] = [
      ...FIELDS,
      { index: 3, name: "Extra", type: "Decimal" },
    ];
    const selected = new Set([0, 1, 2, 3]);
    expect(satisfiableTypes(fields, selected).has("pie")).toBe(false);
    expect(satisfiableTypes(fields, selected).has("bar")).toBe(true);
  });

  it("all-string selections support nothing", () => {
    const selected = new Set([0]);
    expect(satisfiableTypes(FIELDS, selected).size).toBe(0);
  });
});

describe("stale responses", () => {
  it("drops results from an outdated request", () => {
    let s = withTable();
    const [s1, seq1] = nextRequest(s);
    const [s2, seq2] = nextRequest(s1);
    const fresh = applyResults(s2, seq2, [
      { sequence: "[Line] (1) [SEP] (0) [SEP]", score: 0.5, vegalite: null as never },
    ]);
    expect(fresh.results).toHaveLength(1);
    const stale = applyResults(fresh, seq1, []);
    expect(stale.results).toHaveLength(1); // unchanged
  });
});
