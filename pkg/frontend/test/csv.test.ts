import { describe, expect, it } from "vitest";

import { EXPECTED_COLUMNS, parseCsv, SchemaMismatchError } from "../src/csv.js";

const HEADER = EXPECTED_COLUMNS.join(",");

function rowCells(overrides: Record<string, string> = {}): string {
  const base: Record<string, string> = {};
  for (const col of EXPECTED_COLUMNS) base[col] = "0";
  base.objective = "pop";
  base.status = "optimal";
  base.tau_opt = "0.001";
  base.verdict = "impossible";
  Object.assign(base, overrides);
  return EXPECTED_COLUMNS.map((c) => base[c]).join(",");
}

describe("parseCsv", () => {
  it("parses a valid file into row mappings", () => {
    const text = [HEADER, rowCells({ beta_L: "1.0" }), rowCells({ beta_L: "2.0" })].join("\n");
    const rows = parseCsv(text);
    expect(rows).toHaveLength(2);
    expect(rows[0].beta_L).toBe("1.0");
    expect(rows[1].objective).toBe("pop");
  });

  it("rejects an empty file", () => {
    expect(() => parseCsv("")).toThrow(SchemaMismatchError);
  });

  it("rejects a header-only file", () => {
    expect(() => parseCsv(HEADER + "\n")).toThrow(/no data rows/);
  });

  it("rejects a wrong header with a versioned error", () => {
    const bad = "a,b,c\n1,2,3\n";
    expect(() => parseCsv(bad)).toThrow(/schema v1/);
  });

  it("rejects ragged rows", () => {
    const text = [HEADER, "1,2,3"].join("\n");
    expect(() => parseCsv(text)).toThrow(SchemaMismatchError);
  });
});
