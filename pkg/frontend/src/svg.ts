/**
 * Static SVG rendering of error-vs-budget curves: one line per estimator,
 * shaded band at plus/minus half a standard deviation, log or linear y.
 * Pure string generation, so output is byte-deterministic and testable.
 */

import type { SummaryRow } from "./aggregate.js";

export interface SeriesPoint {
  T: number;
  mean: number;
  std: number;
  n: number;
}

export interface Series {
  estimator: string;
  points: SeriesPoint[];
}

export type YScale = "linear" | "log";

export interface FacetPlotOptions {
  title: string;
  yScale: YScale;
  width?: number;
  height?: number;
  /** estimator -> stroke color; unlisted estimators get palette colors */
  styleMap?: Record<string, string>;
}

const PALETTE = ["#4477aa", "#ee6677", "#228833", "#ccbb44", "#66ccee", "#aa3377"];

const MARGIN = { top: 44, right: 28, bottom: 52, left: 80 };

/** Plot-ready series for one facet: estimators sorted, points sorted by T. */
export function seriesForFacet(rows: SummaryRow[]): Series[] {
  const byEstimator = new Map<string, SeriesPoint[]>();
  for (const r of rows) {
    const point = { T: r.T, mean: r.mean_rel_error, std: r.std_rel_error, n: r.n };
    const existing = byEstimator.get(r.estimator);
    if (existing) existing.push(point);
    else byEstimator.set(r.estimator, [point]);
  }
  return [...byEstimator.entries()]
    .sort((a, b) => (a[0] < b[0] ? -1 : 1))
    .map(([estimator, points]) => ({
      estimator,
      points: [...points].sort((a, b) => a.T - b.T),
    }));
}

function fmt(x: number): string {
  return String(Number(x.toPrecision(8)));
}

function tickLabel(x: number): string {
  if (x !== 0 && (Math.abs(x) < 1e-3 || Math.abs(x) >= 1e4)) {
    return x.toExponential(0).replace("e+", "e");
  }
  return String(Number(x.toPrecision(4)));
}

interface Transform {
  (value: number): number;
}

function linspace(lo: number, hi: number, count: number): number[] {
  if (count === 1) return [(lo + hi) / 2];
  const out: number[] = [];
  for (let i = 0; i < count; i++) out.push(lo + ((hi - lo) * i) / (count - 1));
  return out;
}

export function renderFacetSvg(series: Series[], opts: FacetPlotOptions): string {
  if (series.length === 0) {
    throw new Error("cannot render a facet with no series");
  }
  const width = opts.width ?? 720;
  const height = opts.height ?? 480;
  const innerW = width - MARGIN.left - MARGIN.right;
  const innerH = height - MARGIN.top - MARGIN.bottom;

  const allPoints = series.flatMap((s) => s.points);
  if (allPoints.length === 0) {
    throw new Error("cannot render a facet with no data points");
  }
  const Ts = [...new Set(allPoints.map((p) => p.T))].sort((a, b) => a - b);
  const log10 = Math.log10;

  // x: budget on a log axis (single budget collapses to the center)
  const xLo = log10(Ts[0]!);
  const xHi = log10(Ts[Ts.length - 1]!);
  const xT: Transform =
    xHi > xLo
      ? (t) => MARGIN.left + ((log10(t) - xLo) / (xHi - xLo)) * innerW
      : () => MARGIN.left + innerW / 2;

  // y: cover every mean and band edge
  const bandLows = allPoints.map((p) => p.mean - 0.5 * p.std);
  const bandHighs = allPoints.map((p) => p.mean + 0.5 * p.std);
  let yMin: number;
  let yMax: number;
  let yT: Transform;
  let yTicks: number[];
  if (opts.yScale === "log") {
    const positives = allPoints.map((p) => p.mean).filter((m) => m > 0);
    if (positives.length !== allPoints.length) {
      throw new Error("log y-scale requires strictly positive mean errors; use linear");
    }
    const positiveLows = bandLows.filter((v) => v > 0);
    yMin = Math.min(...positives, ...positiveLows);
    yMax = Math.max(...bandHighs);
    if (yMax === yMin) {
      yMax = yMin * 10;
      yMin = yMin / 10;
    }
    const lo = log10(yMin);
    const hi = log10(yMax);
    yT = (v) => {
      const clamped = Math.max(v, yMin);
      return MARGIN.top + innerH - ((log10(clamped) - lo) / (hi - lo)) * innerH;
    };
    yTicks = [];
    for (let e = Math.ceil(lo); e <= Math.floor(hi); e++) yTicks.push(10 ** e);
    if (yTicks.length === 0) yTicks = [yMin, yMax];
  } else {
    yMin = Math.min(0, ...bandLows);
    yMax = Math.max(...bandHighs);
    if (yMax === yMin) yMax = yMin + 1;
    yT = (v) => MARGIN.top + innerH - ((v - yMin) / (yMax - yMin)) * innerH;
    yTicks = linspace(yMin, yMax, 5);
  }

  const colorOf = (estimator: string, index: number): string =>
    opts.styleMap?.[estimator] ?? PALETTE[index % PALETTE.length]!;

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${width}" height="${height}" ` +
      `viewBox="0 0 ${width} ${height}" font-family="sans-serif" font-size="13">`,
  );
  parts.push(`<rect width="${width}" height="${height}" fill="white"/>`);
  parts.push(
    `<text x="${width / 2}" y="24" text-anchor="middle" font-size="15">${escapeXml(opts.title)}</text>`,
  );

  // axes and ticks
  const axisY = MARGIN.top + innerH;
  parts.push(
    `<line x1="${MARGIN.left}" y1="${axisY}" x2="${MARGIN.left + innerW}" y2="${axisY}" stroke="#333"/>`,
  );
  parts.push(
    `<line x1="${MARGIN.left}" y1="${MARGIN.top}" x2="${MARGIN.left}" y2="${axisY}" stroke="#333"/>`,
  );
  for (const t of Ts) {
    const x = xT(t);
    parts.push(`<line x1="${fmt(x)}" y1="${axisY}" x2="${fmt(x)}" y2="${axisY + 5}" stroke="#333"/>`);
    parts.push(
      `<text x="${fmt(x)}" y="${axisY + 20}" text-anchor="middle">${tickLabel(t)}</text>`,
    );
  }
  parts.push(
    `<text x="${MARGIN.left + innerW / 2}" y="${height - 10}" text-anchor="middle">budget T</text>`,
  );
  for (const v of yTicks) {
    const y = yT(v);
    parts.push(
      `<line x1="${MARGIN.left - 5}" y1="${fmt(y)}" x2="${MARGIN.left}" y2="${fmt(y)}" stroke="#333"/>`,
    );
    parts.push(
      `<line x1="${MARGIN.left}" y1="${fmt(y)}" x2="${MARGIN.left + innerW}" y2="${fmt(y)}" stroke="#ddd"/>`,
    );
    parts.push(
      `<text x="${MARGIN.left - 9}" y="${fmt(y + 4)}" text-anchor="end">${tickLabel(v)}</text>`,
    );
  }
  parts.push(
    `<text transform="rotate(-90)" x="${-(MARGIN.top + innerH / 2)}" y="20" ` +
      `text-anchor="middle">mean rel_error</text>`,
  );

  // bands first so lines draw on top of them
  series.forEach((s, i) => {
    if (s.points.length < 2) return;
    const color = colorOf(s.estimator, i);
    const upper = s.points.map((p) => `${fmt(xT(p.T))},${fmt(yT(p.mean + 0.5 * p.std))}`);
    const lower = [...s.points]
      .reverse()
      .map((p) => `${fmt(xT(p.T))},${fmt(yT(p.mean - 0.5 * p.std))}`);
    parts.push(
      `<polygon class="band" data-estimator="${escapeXml(s.estimator)}" ` +
        `points="${[...upper, ...lower].join(" ")}" fill="${color}" fill-opacity="0.15"/>`,
    );
  });

  series.forEach((s, i) => {
    const color = colorOf(s.estimator, i);
    const coords = s.points.map((p) => `${fmt(xT(p.T))},${fmt(yT(p.mean))}`);
    if (s.points.length > 1) {
      parts.push(
        `<polyline class="series" data-estimator="${escapeXml(s.estimator)}" ` +
          `points="${coords.join(" ")}" fill="none" stroke="${color}" stroke-width="2"/>`,
      );
    }
    for (const c of coords) {
      const [cx, cy] = c.split(",");
      parts.push(
        `<circle class="marker" data-estimator="${escapeXml(s.estimator)}" ` +
          `cx="${cx}" cy="${cy}" r="3.5" fill="${color}"/>`,
      );
    }
  });

  // legend
  series.forEach((s, i) => {
    const color = colorOf(s.estimator, i);
    const y = MARGIN.top + 8 + i * 18;
    const x = MARGIN.left + innerW - 150;
    parts.push(`<line x1="${x}" y1="${y}" x2="${x + 22}" y2="${y}" stroke="${color}" stroke-width="2"/>`);
    parts.push(
      `<text class="legend" x="${x + 28}" y="${y + 4}">${escapeXml(s.estimator)}</text>`,
    );
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function escapeXml(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}
