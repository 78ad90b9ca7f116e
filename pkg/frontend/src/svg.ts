/**
 * Deterministic SVG rendering of verdict figures.
 *
 * Pure string assembly: given the same rows and spec, the output is
 * byte-identical. Log axes use decade ticks; optimized values at or below
 * the plot floor (tolerance * 1e-8, covering exact zeros from clipped
 * solver outputs) are drawn at the floor. Marker shapes cycle through
 * diamond, circle, cross, plus to mirror the usual series legend.
 */

import { SweepRow } from "./csv.js";
import {
  FigureSpec,
  PanelData,
  effectivePanels,
  panelData,
  resolveSpec,
} from "./figure.js";

const PANEL_W = 340;
const PANEL_H = 280;
const MARGIN = { left: 64, right: 16, top: 34, bottom: 46 };
const COLORS = ["#2457a5", "#d1495b", "#dd9f00", "#7a4fa3", "#2a8c55", "#666666"];
const MARKERS = ["diamond", "circle", "cross", "plus"] as const;

function fmt(v: number): string {
  return v.toFixed(2);
}

function pow10Label(exp: number): string {
  return `1e${exp}`;
}

interface Scale {
  toPixel(v: number): number;
  ticks: number[]; // decade exponents
}

function logScale(lo: number, hi: number, pxLo: number, pxHi: number): Scale {
  const llo = Math.log10(lo);
  const lhi = Math.log10(hi);
  const span = lhi - llo || 1;
  const ticks: number[] = [];
  for (let e = Math.ceil(llo); e <= Math.floor(lhi); e++) {
    ticks.push(e);
  }
  return {
    toPixel: (v: number) =>
      pxLo + ((Math.log10(v) - llo) / span) * (pxHi - pxLo),
    ticks,
  };
}

function marker(kind: string, x: number, y: number, color: string): string {
  const s = 4;
  switch (kind) {
    case "diamond":
      return `<path d="M ${fmt(x)} ${fmt(y - s)} L ${fmt(x + s)} ${fmt(y)} L ${fmt(x)} ${fmt(y + s)} L ${fmt(x - s)} ${fmt(y)} Z" fill="none" stroke="${color}" stroke-width="1.2"/>`;
    case "circle":
      return `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${fmt(s - 0.5)}" fill="none" stroke="${color}" stroke-width="1.2"/>`;
    case "cross":
      return `<path d="M ${fmt(x - s)} ${fmt(y - s)} L ${fmt(x + s)} ${fmt(y + s)} M ${fmt(x - s)} ${fmt(y + s)} L ${fmt(x + s)} ${fmt(y - s)}" stroke="${color}" stroke-width="1.2"/>`;
    default: // plus
      return `<path d="M ${fmt(x - s)} ${fmt(y)} L ${fmt(x + s)} ${fmt(y)} M ${fmt(x)} ${fmt(y - s)} L ${fmt(x)} ${fmt(y + s)}" stroke="${color}" stroke-width="1.2"/>`;
  }
}

function renderPanel(
  data: PanelData,
  spec: Required<FigureSpec>,
  originX: number,
  originY: number,
  index: number,
): string {
  const plotX0 = originX + MARGIN.left;
  const plotX1 = originX + PANEL_W - MARGIN.right;
  const plotY0 = originY + MARGIN.top;
  const plotY1 = originY + PANEL_H - MARGIN.bottom;

  const xs = data.series.flatMap((s) => s.points.map((p) => p.x));
  const floor = spec.tolerance * 1e-8;
  const ysRaw = data.series.flatMap((s) => s.points.map((p) => p.y));
  const ys = ysRaw.map((y) => Math.max(y, floor));
  const xLo = Math.min(...xs);
  const xHi = Math.max(...xs);
  const yLo = Math.min(...ys, spec.tolerance) / 10;
  const yHi = Math.max(...ys, spec.tolerance) * 10;
  const sx = logScale(xLo, xHi, plotX0, plotX1);
  const sy = logScale(yLo, yHi, plotY1, plotY0); // y grows upward

  const parts: string[] = [];
  parts.push(
    `<rect x="${fmt(plotX0)}" y="${fmt(plotY0)}" width="${fmt(plotX1 - plotX0)}" height="${fmt(plotY1 - plotY0)}" fill="none" stroke="#333333" stroke-width="1"/>`,
  );
  const title =
    data.spec.title ?? `${labelFor(data.spec.objective)} vs ${data.xColumn}`;
  parts.push(
    `<text x="${fmt((plotX0 + plotX1) / 2)}" y="${fmt(originY + 20)}" text-anchor="middle" font-size="13" font-family="sans-serif">(${String.fromCharCode(97 + index)}) ${title}</text>`,
  );
  for (const e of sx.ticks) {
    const px = sx.toPixel(10 ** e);
    parts.push(
      `<line x1="${fmt(px)}" y1="${fmt(plotY1)}" x2="${fmt(px)}" y2="${fmt(plotY1 + 4)}" stroke="#333333" stroke-width="1"/>`,
      `<text x="${fmt(px)}" y="${fmt(plotY1 + 17)}" text-anchor="middle" font-size="10" font-family="sans-serif">${pow10Label(e)}</text>`,
    );
  }
  for (const e of sy.ticks) {
    const py = sy.toPixel(10 ** e);
    parts.push(
      `<line x1="${fmt(plotX0 - 4)}" y1="${fmt(py)}" x2="${fmt(plotX0)}" y2="${fmt(py)}" stroke="#333333" stroke-width="1"/>`,
      `<text x="${fmt(plotX0 - 7)}" y="${fmt(py + 3)}" text-anchor="end" font-size="10" font-family="sans-serif">${pow10Label(e)}</text>`,
    );
  }
  parts.push(
    `<text x="${fmt((plotX0 + plotX1) / 2)}" y="${fmt(plotY1 + 34)}" text-anchor="middle" font-size="12" font-family="sans-serif">${data.xColumn}</text>`,
  );
  parts.push(
    `<text x="${fmt(originX + 14)}" y="${fmt((plotY0 + plotY1) / 2)}" text-anchor="middle" font-size="12" font-family="sans-serif" transform="rotate(-90 ${fmt(originX + 14)} ${fmt((plotY0 + plotY1) / 2)})">${labelFor(data.spec.objective)}</text>`,
  );
  // tolerance line, dashed
  const tolY = sy.toPixel(spec.tolerance);
  parts.push(
    `<line x1="${fmt(plotX0)}" y1="${fmt(tolY)}" x2="${fmt(plotX1)}" y2="${fmt(tolY)}" stroke="#000000" stroke-width="1" stroke-dasharray="6 4"/>`,
  );
  data.series.forEach((series, si) => {
    const color = COLORS[si % COLORS.length];
    const kind = MARKERS[si % MARKERS.length];
    const pts = series.points.map((p) => ({
      px: sx.toPixel(p.x),
      py: sy.toPixel(Math.max(p.y, floor)),
    }));
    if (pts.length > 1) {
      const path = pts
        .map((p, k) => `${k === 0 ? "M" : "L"} ${fmt(p.px)} ${fmt(p.py)}`)
        .join(" ");
      parts.push(
        `<path d="${path}" fill="none" stroke="${color}" stroke-width="0.8" opacity="0.6"/>`,
      );
    }
    for (const p of pts) {
      parts.push(marker(kind, p.px, p.py, color));
    }
  });
  return parts.join("\n");
}

function labelFor(objective: string): string {
  if (objective === "pop") return "tau_pop_opt";
  if (objective === "pop_coh") return "tau_pop,coh_opt";
  return objective;
}

export function renderFigure(rawSpec: FigureSpec, rows: SweepRow[]): string {
  const spec = resolveSpec(rawSpec);
  const panels = effectivePanels(spec, rows);
  const [gridRows, gridCols] = spec.layout;
  if (panels.length > gridRows * gridCols) {
    throw new Error(
      `${panels.length} panels do not fit a ${gridRows}x${gridCols} layout`,
    );
  }
  const width = gridCols * PANEL_W;
  const height = gridRows * PANEL_H + 22;
  const parts: string[] = [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" viewBox="0 0 ${width} ${height}">`,
    `<rect x="0" y="0" width="${width}" height="${height}" fill="#ffffff"/>`,
  ];
  panels.forEach((panel, i) => {
    const data = panelData(spec, panel, rows);
    const col = i % gridCols;
    const row = Math.floor(i / gridCols);
    parts.push(renderPanel(data, spec, col * PANEL_W, row * PANEL_H, i));
  });
  // series legend from the first panel
  const first = panelData(spec, panels[0], rows);
  const legendY = height - 8;
  let legendX = 70;
  first.series.forEach((series, si) => {
    const color = COLORS[si % COLORS.length];
    parts.push(marker(MARKERS[si % MARKERS.length], legendX, legendY - 4, color));
    parts.push(
      `<text x="${fmt(legendX + 10)}" y="${fmt(legendY)}" font-size="11" font-family="sans-serif">${spec.seriesColumn} = ${series.key}</text>`,
    );
    legendX += 130;
  });
  parts.push("</svg>");
  return parts.join("\n") + "\n";
}
