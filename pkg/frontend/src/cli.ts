#!/usr/bin/env node
/**
 * ncbench-plots <results.csv> [--out DIR] [--facet keys] [--yscale log|linear]
 */

import { render } from "./render.js";
import { SchemaError } from "./schema.js";
import type { FacetKey } from "./aggregate.js";

const FACET_KEYS = new Set(["lambda", "sigma", "nu"]);

interface Args {
  csvPath: string;
  outDir: string;
  facetKeys: FacetKey[];
  yScale: "log" | "linear";
}

function usage(): string {
  return [
    "usage: ncbench-plots <results.csv> [options]",
    "",
    "options:",
    "  --out DIR       output directory (default: plots)",
    "  --facet KEYS    comma-separated facet keys from lambda,sigma,nu",
    "                  (default: lambda,sigma)",
    "  --yscale SCALE  log or linear (default: log)",
    "  --help          show this message",
  ].join("\n");
}

function expectValue(argv: string[], i: number, flag: string): string {
  const v = argv[i];
  if (v === undefined || v.startsWith("--")) {
    throw new Error(`${flag} requires a value`);
  }
  return v;
}

export function parseArgs(argv: string[]): Args {
  let csvPath: string | undefined;
  let outDir = "plots";
  let facetKeys: FacetKey[] = ["lambda", "sigma"];
  let yScale: "log" | "linear" = "log";

  for (let i = 0; i < argv.length; i++) {
    const a = argv[i]!;
    if (a === "--help" || a === "-h") {
      throw new UsageRequested();
    } else if (a === "--out") {
      outDir = expectValue(argv, ++i, "--out");
    } else if (a === "--facet") {
      const raw = expectValue(argv, ++i, "--facet");
      const keys = raw.split(",").map((k) => k.trim()).filter((k) => k.length > 0);
      for (const k of keys) {
        if (!FACET_KEYS.has(k)) {
          throw new Error(`unknown facet key ${JSON.stringify(k)}; expected lambda, sigma or nu`);
        }
      }
      facetKeys = keys as FacetKey[];
    } else if (a === "--yscale") {
      const v = expectValue(argv, ++i, "--yscale");
      if (v !== "log" && v !== "linear") {
        throw new Error(`--yscale must be log or linear, got ${JSON.stringify(v)}`);
      }
      yScale = v;
    } else if (a.startsWith("-")) {
      throw new Error(`unknown option ${JSON.stringify(a)}`);
    } else if (csvPath === undefined) {
      csvPath = a;
    } else {
      throw new Error(`unexpected extra argument ${JSON.stringify(a)}`);
    }
  }
  if (csvPath === undefined) {
    throw new Error("missing results CSV path");
  }
  return { csvPath, outDir, facetKeys, yScale };
}

class UsageRequested extends Error {}

export function main(argv: string[]): number {
  let args: Args;
  try {
    args = parseArgs(argv);
  } catch (err) {
    if (err instanceof UsageRequested) {
      console.log(usage());
      return 0;
    }
    console.error(`error: ${(err as Error).message}`);
    console.error(usage());
    return 1;
  }

  try {
    const report = render({
      csvPath: args.csvPath,
      outDir: args.outDir,
      facetKeys: args.facetKeys,
      yScale: args.yScale,
    });
    for (const w of report.warnings) console.error(`warning: ${w}`);
    for (const f of report.facets) console.log(`wrote ${f.svgPath}`);
    console.log(`wrote ${report.summaryCsvPath}`);
    if (report.facets.length === 0) {
      console.error("error: no facet produced a plot");
      return 1;
    }
    return 0;
  } catch (err) {
    if (err instanceof SchemaError) {
      console.error(`error: ${err.message}`);
      return 1;
    }
    const e = err as NodeJS.ErrnoException;
    if (e.code === "ENOENT") {
      console.error(`error: ${e.message}`);
      return 1;
    }
    throw err;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
