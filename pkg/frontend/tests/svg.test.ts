import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { parseResultsCsv } from "../src/schema.js";
import { summarizeRows } from "../src/aggregate.js";
import { renderFacetSvg, seriesForFacet, type Series } from "../src/svg.js";

const SWEEP = fileURLToPath(new URL("../fixtures/synthetic1d_sweep.csv", import.meta.url));

function sweepSeries(): Series[] {
  const agg = summarizeRows(parseResultsCsv(readFileSync(SWEEP, "utf8")));
  return seriesForFacet(agg.rows);
}

function count(svg: string, needle: string): number {
  return svg.split(needle).length - 1;
}

describe("seriesForFacet", () => {
  it("sorts estimators and points by budget", () => {
    const series = sweepSeries();
    expect(series.map((s) => s.estimator)).toEqual(["mc", "mvs-lmc"]);
    for (const s of series) {
      expect(s.points.map((p) => p.T)).toEqual([64, 128, 256]);
      expect(s.points.every((p) => p.n === 30)).toBe(true);
    }
  });
});

describe("renderFacetSvg", () => {
  it("draws one line, one band and three markers per estimator", () => {
    const svg = renderFacetSvg(sweepSeries(), { title: "lambda=0.5 sigma=0", yScale: "log" });
    expect(count(svg, '<polyline class="series"')).toBe(2);
    expect(count(svg, '<polygon class="band"')).toBe(2);
    expect(count(svg, '<circle class="marker"')).toBe(6);
    expect(count(svg, '<text class="legend"')).toBe(2);
    expect(svg).toContain("lambda=0.5 sigma=0");
    expect(svg.startsWith("<svg ")).toBe(true);
    expect(svg.trimEnd().endsWith("</svg>")).toBe(true);
  });

  it("is byte-deterministic", () => {
    const opts = { title: "t", yScale: "log" as const };
    expect(renderFacetSvg(sweepSeries(), opts)).toBe(renderFacetSvg(sweepSeries(), opts));
  });

  it("omits line and band for a single-point series", () => {
    const series: Series[] = [
      { estimator: "mc", points: [{ T: 64, mean: 0.1, std: 0.02, n: 10 }] },
    ];
    const svg = renderFacetSvg(series, { title: "single", yScale: "log" });
    expect(count(svg, '<polyline class="series"')).toBe(0);
    expect(count(svg, '<polygon class="band"')).toBe(0);
    expect(count(svg, '<circle class="marker"')).toBe(1);
  });

  it("puts only positive ticks on a log axis", () => {
    const svg = renderFacetSvg(sweepSeries(), { title: "t", yScale: "log" });
    const labels = [...svg.matchAll(/text-anchor="end">([^<]+)</g)].map((m) => Number(m[1]));
    expect(labels.length).toBeGreaterThan(0);
    expect(labels.every((v) => v > 0)).toBe(true);
  });

  it("rejects log scale when a mean error is zero", () => {
    const series: Series[] = [
      {
        estimator: "pc",
        points: [
          { T: 4, mean: 0.0, std: 0.0, n: 5 },
          { T: 16, mean: 0.0, std: 0.0, n: 5 },
        ],
      },
    ];
    expect(() => renderFacetSvg(series, { title: "t", yScale: "log" })).toThrowError(
      /strictly positive/,
    );
    const linear = renderFacetSvg(series, { title: "t", yScale: "linear" });
    expect(count(linear, '<polyline class="series"')).toBe(1);
  });

  it("honors a style map and escapes titles", () => {
    const svg = renderFacetSvg(sweepSeries(), {
      title: 'a<b&"c"',
      yScale: "log",
      styleMap: { mc: "#123456" },
    });
    expect(svg).toContain('stroke="#123456"');
    expect(svg).toContain("a&lt;b&amp;&quot;c&quot;");
  });

  it("refuses an empty facet", () => {
    expect(() => renderFacetSvg([], { title: "t", yScale: "log" })).toThrowError(/no series/);
  });
});
