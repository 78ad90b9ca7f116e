/**
 * Sweep-CSV parsing and schema validation.
 *
 * The CSV is plain comma-separated text with a fixed, versioned column
 * order; no field contains commas (multi-valued columns such as `gammas`
 * use semicolons), so splitting on commas is exact.
 */

export const CSV_SCHEMA_VERSION = 1;

export const EXPECTED_COLUMNS = [
  "N", "N_L", "N_M", "N_R", "omega0", "eps0", "g", "beta_L", "beta_R",
  "gammas", "omega_c", "t_L", "t_R", "objective", "tau_opt", "verdict",
  "alpha", "td_bound", "status", "gap", "residual", "seconds",
  "gibbs_distance",
] as const;

export type SweepRow = Record<string, string>;

export class SchemaMismatchError extends Error {
  constructor(detail: string) {
    super(`CSV does not match sweep schema v${CSV_SCHEMA_VERSION}: ${detail}`);
    this.name = "SchemaMismatchError";
  }
}

export function parseCsv(text: string): SweepRow[] {
  const lines = text.split(/\r?\n/).filter((ln) => ln.trim().length > 0);
  if (lines.length === 0) {
    throw new SchemaMismatchError("file is empty");
  }
  const header = lines[0].split(",");
  const expected = EXPECTED_COLUMNS as readonly string[];
  if (header.length !== expected.length || header.some((h, i) => h !== expected[i])) {
    throw new SchemaMismatchError(
      `header is [${header.join(", ")}], expected [${expected.join(", ")}]`,
    );
  }
  const rows: SweepRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const cells = lines[i].split(",");
    if (cells.length !== expected.length) {
      throw new SchemaMismatchError(
        `row ${i} has ${cells.length} cells, expected ${expected.length}`,
      );
    }
    const row: SweepRow = {};
    expected.forEach((col, k) => (row[col] = cells[k]));
    rows.push(row);
  }
  if (rows.length === 0) {
    throw new SchemaMismatchError("no data rows");
  }
  return rows;
}
