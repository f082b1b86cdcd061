/**
 * Per-cell aggregation of result rows, mirroring the harness summarizer:
 * group by (estimator, objective, nu, lambda, sigma, T), average rel_error
 * over non-failed rows, population std, midpoint median.
 */

import type { ResultRow } from "./schema.js";

export interface SummaryRow {
  estimator: string;
  objective: string;
  d: number;
  nu: number;
  lambda: number;
  sigma: number;
  T: number;
  n: number;
  n_failed: number;
  mean_rel_error: number;
  std_rel_error: number;
  median_rel_error: number;
}

export type FacetKey = "lambda" | "sigma" | "nu";

export interface Aggregation {
  rows: SummaryRow[];
  warnings: string[];
}

function median(sorted: number[]): number {
  const n = sorted.length;
  const mid = Math.floor(n / 2);
  return n % 2 === 1 ? sorted[mid]! : (sorted[mid - 1]! + sorted[mid]!) / 2;
}

type GroupKey = [string, string, number, number, number, number];

function groupKeyOf(row: ResultRow): GroupKey {
  return [row.estimator, row.objective, row.nu, row.lambda, row.sigma, row.T];
}

function compareKeys(a: GroupKey, b: GroupKey): number {
  for (let i = 0; i < a.length; i++) {
    if (a[i]! < b[i]!) return -1;
    if (a[i]! > b[i]!) return 1;
  }
  return 0;
}

export function summarizeRows(rows: ResultRow[]): Aggregation {
  const groups = new Map<string, ResultRow[]>();
  for (const row of rows) {
    const key = JSON.stringify(groupKeyOf(row));
    const cell = groups.get(key);
    if (cell) cell.push(row);
    else groups.set(key, [row]);
  }
  // numeric tuple order, not lexicographic JSON order: T=64 before T=128
  const keys = [...groups.keys()].sort((a, b) =>
    compareKeys(JSON.parse(a) as GroupKey, JSON.parse(b) as GroupKey),
  );
  const out: SummaryRow[] = [];
  const warnings: string[] = [];
  for (const key of keys) {
    const cell = groups.get(key)!;
    const ok = cell.filter((r) => !r.failed);
    const nFailed = cell.length - ok.length;
    if (ok.length === 0) {
      warnings.push(`cell ${key} has no successful rows; omitted`);
      continue;
    }
    const errors = ok.map((r) => {
      if (r.rel_error === null) {
        throw new Error(`non-failed row with empty rel_error in cell ${key}`);
      }
      return r.rel_error;
    });
    const mean = errors.reduce((a, b) => a + b, 0) / errors.length;
    const variance = errors.reduce((a, b) => a + (b - mean) ** 2, 0) / errors.length;
    const first = ok[0]!;
    out.push({
      estimator: first.estimator,
      objective: first.objective,
      d: first.d,
      nu: first.nu,
      lambda: first.lambda,
      sigma: first.sigma,
      T: first.T,
      n: errors.length,
      n_failed: nFailed,
      mean_rel_error: mean,
      std_rel_error: Math.sqrt(variance),
      median_rel_error: median([...errors].sort((a, b) => a - b)),
    });
  }
  return { rows: out, warnings };
}

/** Partition summary rows by the values of the chosen facet keys. */
export function facetsOf(rows: SummaryRow[], keys: FacetKey[]): Map<string, SummaryRow[]> {
  const facets = new Map<string, SummaryRow[]>();
  for (const row of rows) {
    const id = keys.map((k) => `${k}=${row[k]}`).join(" ");
    const bucket = facets.get(id);
    if (bucket) bucket.push(row);
    else facets.set(id, [row]);
  }
  return new Map([...facets.entries()].sort((a, b) => (a[0] < b[0] ? -1 : 1)));
}

export const SUMMARY_COLUMNS = [
  "estimator",
  "objective",
  "d",
  "nu",
  "lambda",
  "sigma",
  "T",
  "n",
  "n_failed",
  "mean_rel_error",
  "std_rel_error",
  "median_rel_error",
] as const;

/** Serialize summary rows with the same header the Python summarizer writes. */
export function summaryToCsv(rows: SummaryRow[]): string {
  const lines = [SUMMARY_COLUMNS.join(",")];
  for (const r of rows) {
    lines.push(SUMMARY_COLUMNS.map((c) => String(r[c])).join(","));
  }
  return lines.join("\n") + "\n";
}
