/**
 * Figure specifications and series extraction.
 *
 * A figure is a fixed grid of panels; each panel selects rows by
 * objective (plus optional column filters), plots the optimized objective
 * value against one swept column, and draws one marker series per value
 * of the series column. A dashed horizontal line marks the feasibility
 * tolerance; everything above it is a no-go verdict, everything below a
 * maybe-possible verdict.
 */

import { SweepRow } from "./csv.js";

export interface PanelSpec {
  objective: string;
  x?: string;
  filter?: Record<string, string>;
  title?: string;
}

export interface FigureSpec {
  layout?: [number, number];
  xColumn?: string;
  xLog?: boolean;
  yLog?: boolean;
  seriesColumn?: string;
  tolerance: number;
  panels?: PanelSpec[];
}

export interface Series {
  key: string;
  points: Array<{ x: number; y: number }>;
}

export interface PanelData {
  spec: PanelSpec;
  xColumn: string;
  series: Series[];
}

export class FigureError extends Error {}

const DEFAULTS = {
  layout: [2, 2] as [number, number],
  seriesColumn: "beta_R",
  xLog: true,
  yLog: true,
};

export function resolveSpec(spec: FigureSpec): Required<FigureSpec> {
  if (!(spec.tolerance > 0)) {
    throw new FigureError("tolerance must be a positive number");
  }
  return {
    layout: spec.layout ?? DEFAULTS.layout,
    xColumn: spec.xColumn ?? "beta_L",
    xLog: spec.xLog ?? DEFAULTS.xLog,
    yLog: spec.yLog ?? DEFAULTS.yLog,
    seriesColumn: spec.seriesColumn ?? DEFAULTS.seriesColumn,
    tolerance: spec.tolerance,
    panels: spec.panels ?? [],
  };
}

/** Panels default to one per objective found in the rows, in first-seen order. */
export function effectivePanels(spec: Required<FigureSpec>, rows: SweepRow[]): PanelSpec[] {
  if (spec.panels.length > 0) {
    return spec.panels;
  }
  const objectives: string[] = [];
  for (const row of rows) {
    if (!objectives.includes(row.objective)) {
      objectives.push(row.objective);
    }
  }
  return objectives.map((objective) => ({ objective }));
}

export function panelData(
  spec: Required<FigureSpec>,
  panel: PanelSpec,
  rows: SweepRow[],
): PanelData {
  const xColumn = panel.x ?? spec.xColumn;
  const sample = rows[0];
  for (const col of [xColumn, spec.seriesColumn]) {
    if (!(col in sample)) {
      throw new FigureError(`column ${col} not present in the CSV`);
    }
  }
  const selected = rows.filter((row) => {
    if (row.objective !== panel.objective) return false;
    if (row.status !== "optimal" && row.status !== "near_optimal") return false;
    for (const [col, value] of Object.entries(panel.filter ?? {})) {
      if (!(col in row)) throw new FigureError(`filter column ${col} missing`);
      if (row[col] !== value) return false;
    }
    return true;
  });
  if (selected.length === 0) {
    throw new FigureError(
      `panel (${panel.objective} vs ${xColumn}) selected no rows`,
    );
  }
  const byKey = new Map<string, Series>();
  for (const row of selected) {
    const key = row[spec.seriesColumn];
    if (!byKey.has(key)) {
      byKey.set(key, { key, points: [] });
    }
    const x = Number(row[xColumn]);
    const y = Number(row.tau_opt);
    if (!Number.isFinite(x) || !Number.isFinite(y)) {
      throw new FigureError(`non-numeric point in panel data: ${row[xColumn]}, ${row.tau_opt}`);
    }
    byKey.get(key)!.points.push({ x, y });
  }
  const series = [...byKey.values()];
  for (const s of series) {
    s.points.sort((a, b) => a.x - b.x);
  }
  series.sort((a, b) => Number(b.key) - Number(a.key));
  return { spec: panel, xColumn, series };
}

/** Which side of the tolerance line a panel's data sits on. */
export function toleranceSide(data: PanelData, tolerance: number): "above" | "below" | "mixed" {
  let above = 0;
  let below = 0;
  for (const s of data.series) {
    for (const p of s.points) {
      if (p.y > tolerance) above++;
      else below++;
    }
  }
  if (above > 0 && below === 0) return "above";
  if (below > 0 && above === 0) return "below";
  return "mixed";
}
