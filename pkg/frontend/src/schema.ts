/**
 * Result-file schema: the exact column layout the benchmark harness writes.
 * Parsing is strict on purpose: a column mismatch should name the column,
 * not surface later as NaN in a plot.
 */

export const RESULT_COLUMNS = [
  "estimator",
  "objective",
  "d",
  "nu",
  "lambda",
  "sigma",
  "T",
  "trial",
  "seed",
  "z1_hat",
  "r_hat",
  "z_hat",
  "z_true",
  "rel_error",
  "queries_used",
  "wall_ms",
  "failed",
] as const;

export type ResultColumn = (typeof RESULT_COLUMNS)[number];

export interface ResultRow {
  estimator: string;
  objective: string;
  d: number;
  nu: number;
  lambda: number;
  sigma: number;
  T: number;
  trial: number;
  seed: number;
  z1_hat: number | null;
  r_hat: number | null;
  z_hat: number | null;
  z_true: number;
  rel_error: number | null;
  queries_used: number;
  wall_ms: number;
  failed: number;
}

export class SchemaError extends Error {}

const STRING_COLUMNS: ReadonlySet<ResultColumn> = new Set(["estimator", "objective"]);
const NULLABLE_COLUMNS: ReadonlySet<ResultColumn> = new Set(["z1_hat", "r_hat", "z_hat", "rel_error"]);
const INTEGER_COLUMNS: ReadonlySet<ResultColumn> = new Set([
  "d",
  "T",
  "trial",
  "seed",
  "queries_used",
  "failed",
]);

function checkHeader(fields: string[]): void {
  const expected = RESULT_COLUMNS as readonly string[];
  for (let i = 0; i < Math.max(fields.length, expected.length); i++) {
    const got = fields[i];
    const want = expected[i];
    if (want === undefined) {
      throw new SchemaError(`unexpected extra column ${JSON.stringify(got)} at position ${i + 1}`);
    }
    if (got === undefined) {
      throw new SchemaError(`missing column "${want}" at position ${i + 1}`);
    }
    if (got !== want) {
      throw new SchemaError(`column ${i + 1} is ${JSON.stringify(got)}, expected "${want}"`);
    }
  }
}

function parseCell(column: ResultColumn, token: string, line: number): string | number | null {
  if (STRING_COLUMNS.has(column)) {
    if (token === "") {
      throw new SchemaError(`line ${line}: column "${column}" is empty`);
    }
    return token;
  }
  if (token === "") {
    if (NULLABLE_COLUMNS.has(column)) return null;
    throw new SchemaError(`line ${line}: column "${column}" is empty`);
  }
  const value = Number(token);
  if (!Number.isFinite(value)) {
    throw new SchemaError(
      `line ${line}: column "${column}" has non-numeric value ${JSON.stringify(token)}`,
    );
  }
  if (INTEGER_COLUMNS.has(column) && !Number.isInteger(value)) {
    throw new SchemaError(`line ${line}: column "${column}" must be an integer, got ${token}`);
  }
  return value;
}

/** Parse a harness result CSV. Throws SchemaError with the offending column. */
export function parseResultsCsv(text: string): ResultRow[] {
  const lines = text.split(/\r?\n/).filter((ln) => ln.length > 0);
  if (lines.length === 0) {
    throw new SchemaError("empty file: no header row");
  }
  checkHeader(lines[0]!.split(","));
  const rows: ResultRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const tokens = lines[i]!.split(",");
    if (tokens.length !== RESULT_COLUMNS.length) {
      throw new SchemaError(
        `line ${i + 1}: expected ${RESULT_COLUMNS.length} fields, got ${tokens.length}`,
      );
    }
    const row: Record<string, string | number | null> = {};
    RESULT_COLUMNS.forEach((column, j) => {
      row[column] = parseCell(column, tokens[j]!, i + 1);
    });
    rows.push(row as unknown as ResultRow);
  }
  return rows;
}
