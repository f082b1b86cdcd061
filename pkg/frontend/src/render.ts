/**
 * End-to-end pipeline: results CSV in, one SVG per facet out, plus a
 * summary CSV sidecar with the exact numbers each plot was drawn from.
 */

import { readFileSync, writeFileSync, mkdirSync } from "node:fs";
import { join } from "node:path";

import { parseResultsCsv } from "./schema.js";
import {
  summarizeRows,
  facetsOf,
  summaryToCsv,
  type FacetKey,
  type SummaryRow,
} from "./aggregate.js";
import { renderFacetSvg, seriesForFacet, type YScale } from "./svg.js";

export interface PlotSpec {
  csvPath: string;
  outDir: string;
  facetKeys?: FacetKey[];
  yScale?: YScale;
  styleMap?: Record<string, string>;
}

export interface RenderedFacet {
  id: string;
  svgPath: string;
  rows: SummaryRow[];
}

export interface RenderReport {
  facets: RenderedFacet[];
  summaryCsvPath: string;
  warnings: string[];
}

function facetFileName(id: string): string {
  const slug = id.replace(/=/g, "-").replace(/\s+/g, "_").replace(/[^A-Za-z0-9_.-]/g, "");
  return `facet_${slug}.svg`;
}

export function render(spec: PlotSpec): RenderReport {
  const facetKeys = spec.facetKeys ?? (["lambda", "sigma"] as FacetKey[]);
  const yScale = spec.yScale ?? "log";

  const text = readFileSync(spec.csvPath, "utf8");
  const rows = parseResultsCsv(text);
  const agg = summarizeRows(rows);
  const warnings = [...agg.warnings];

  mkdirSync(spec.outDir, { recursive: true });

  const summaryCsvPath = join(spec.outDir, "series.csv");
  writeFileSync(summaryCsvPath, summaryToCsv(agg.rows), "utf8");

  const facets: RenderedFacet[] = [];
  for (const [id, facetRows] of facetsOf(agg.rows, facetKeys)) {
    const series = seriesForFacet(facetRows);
    let svg: string;
    try {
      svg = renderFacetSvg(series, {
        title: id,
        yScale,
        styleMap: spec.styleMap,
      });
    } catch (err) {
      warnings.push(`facet ${id}: ${(err as Error).message}; skipped`);
      continue;
    }
    const svgPath = join(spec.outDir, facetFileName(id));
    writeFileSync(svgPath, svg, "utf8");
    facets.push({ id, svgPath, rows: facetRows });
  }
  return { facets, summaryCsvPath, warnings };
}
