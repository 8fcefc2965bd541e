/** Typed view of a run summary JSON document. */

import { SchemaError } from "./errors.js";

export const SUMMARY_TAG = "qlmeas-summary/1";

export interface RunSummary {
  schema: string;
  kind: string;
  config: string;
  branch: { sign: number; mode: string; probability: number };
  driving: {
    shape: string;
    peak_time: number;
    near_critical: boolean;
  } | null;
  integration: { t_end: number };
  result: {
    final_bloch: number[];
    vn_reference: number[];
    final_error: number;
    final_bloch_B?: number[];
    vn_reference_B?: number[];
    final_error_B?: number;
  };
  files?: { trajectory?: string };
}

function vec3(x: unknown, what: string): number[] {
  if (!Array.isArray(x) || x.length !== 3 ||
      !x.every((v) => typeof v === "number")) {
    throw new SchemaError(`summary field ${what} is not a 3-vector`);
  }
  return x as number[];
}

export function readSummary(text: string): RunSummary {
  let doc: any;
  try {
    doc = JSON.parse(text);
  } catch (e) {
    throw new SchemaError(`summary is not valid JSON: ${(e as Error).message}`);
  }
  if (doc === null || typeof doc !== "object") {
    throw new SchemaError("summary is not a JSON object");
  }
  if (doc.schema !== SUMMARY_TAG) {
    throw new SchemaError(
      `expected summary schema ${JSON.stringify(SUMMARY_TAG)}, ` +
      `got ${JSON.stringify(doc.schema)}`,
    );
  }
  if (doc.kind !== "run") {
    throw new SchemaError(
      `renderer needs a per-branch run summary, got kind ${
        JSON.stringify(doc.kind)}`,
    );
  }
  const result = doc.result ?? {};
  vec3(result.final_bloch, "result.final_bloch");
  vec3(result.vn_reference, "result.vn_reference");
  if (result.final_bloch_B !== undefined) {
    vec3(result.final_bloch_B, "result.final_bloch_B");
    vec3(result.vn_reference_B, "result.vn_reference_B");
  }
  return doc as RunSummary;
}
