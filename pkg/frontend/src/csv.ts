/** Readers for the tagged CSV artifacts.
 *
 * Both flavours start with a schema line (`# schema: <name>/<version>`)
 * that is verified, not skipped: a sweep file handed to the trajectory
 * reader is a usage error the renderer must refuse.  Cell values are
 * kept as the raw strings from the file so callers can forward exact
 * figures into the output; numeric views are derived on demand.
 */

import Papa from "papaparse";

import { SchemaError } from "./errors.js";

export const TRAJECTORY_TAG = "# schema: qlmeas-trajectory/1";
export const SWEEP_TAG = "# schema: qlmeas-sweep/1";

const TRAJECTORY_REQUIRED = ["t", "n_x", "n_y", "n_z", "norm_n", "rate_n"];
const SWEEP_REQUIRED = [
  "index", "branch", "probability", "n_x", "n_y", "n_z", "final_error",
  "converged", "near_critical", "n_crossings", "status", "detail",
];

/** "" stays missing instead of coercing to 0 (error rows have blanks). */
export function num(raw: string | undefined): number {
  if (raw === undefined || raw === "") return NaN;
  return Number(raw);
}

export interface Table {
  columns: string[];
  /** row-major raw cell strings, exactly as written by the producer */
  rows: string[][];
}

function parseTagged(text: string, tag: string): Table {
  const firstBreak = text.indexOf("\n");
  const firstLine = (firstBreak < 0 ? text : text.slice(0, firstBreak))
    .replace(/\r$/, "");
  if (firstLine !== tag) {
    throw new SchemaError(
      `expected schema line ${JSON.stringify(tag)}, ` +
      `got ${JSON.stringify(firstLine)}`,
    );
  }
  const body = firstBreak < 0 ? "" : text.slice(firstBreak + 1);
  const parsed = Papa.parse<string[]>(body, {
    delimiter: ",",
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new SchemaError(`CSV parse error: ${e.message} (row ${e.row})`);
  }
  const all = parsed.data;
  if (all.length === 0) throw new SchemaError("missing header row");
  const columns = all[0];
  const rows = all.slice(1);
  for (const [i, row] of rows.entries()) {
    if (row.length !== columns.length) {
      throw new SchemaError(
        `row ${i + 1} has ${row.length} cells, header has ${columns.length}`,
      );
    }
  }
  return { columns, rows };
}

function requireColumns(table: Table, names: string[], what: string): void {
  for (const name of names) {
    if (!table.columns.includes(name)) {
      throw new SchemaError(`${what} is missing column ${JSON.stringify(name)}`);
    }
  }
}

export class TrajectoryTable {
  constructor(readonly table: Table) {}

  has(name: string): boolean {
    return this.table.columns.includes(name);
  }

  raw(name: string): string[] {
    const k = this.table.columns.indexOf(name);
    if (k < 0) throw new SchemaError(`no column ${JSON.stringify(name)}`);
    return this.table.rows.map((r) => r[k]);
  }

  values(name: string): Float64Array {
    return Float64Array.from(this.raw(name), num);
  }

  lastRaw(name: string): string {
    const col = this.raw(name);
    return col[col.length - 1];
  }

  get length(): number {
    return this.table.rows.length;
  }
}

export function readTrajectoryCsv(text: string): TrajectoryTable {
  const table = parseTagged(text, TRAJECTORY_TAG);
  requireColumns(table, TRAJECTORY_REQUIRED, "trajectory CSV");
  if (table.rows.length === 0) {
    throw new SchemaError("trajectory CSV has no data rows");
  }
  return new TrajectoryTable(table);
}

export interface SweepRow {
  /** raw cells by column name */
  cells: Record<string, string>;
  index: number;
  branch: number;
  finalError: number;
  nearCritical: boolean;
  ok: boolean;
}

export class SweepTable {
  readonly rows: SweepRow[];
  /** swept parameter columns, in file order */
  readonly axes: string[];

  constructor(readonly table: Table) {
    const iIndex = table.columns.indexOf("index");
    const iBranch = table.columns.indexOf("branch");
    this.axes = table.columns.slice(iIndex + 1, iBranch);
    if (this.axes.length === 0) {
      throw new SchemaError("sweep CSV declares no swept parameters");
    }
    this.rows = table.rows.map((r) => {
      const cells: Record<string, string> = {};
      table.columns.forEach((c, k) => (cells[c] = r[k]));
      return {
        cells,
        index: num(cells.index),
        branch: num(cells.branch),
        finalError: num(cells.final_error),
        nearCritical: cells.near_critical === "true",
        ok: cells.status === "ok",
      };
    });
  }
}

export function readSweepCsv(text: string): SweepTable {
  const table = parseTagged(text, SWEEP_TAG);
  requireColumns(table, SWEEP_REQUIRED, "sweep CSV");
  if (table.rows.length === 0) {
    throw new SchemaError("sweep CSV has no data rows");
  }
  return new SweepTable(table);
}
