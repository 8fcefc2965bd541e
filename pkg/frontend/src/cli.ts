/** Command-line fronts for the two renderers.
 *
 * Kept as plain functions returning an exit code so tests can drive
 * them without spawning; the bin scripts only forward process.argv.
 */

import { readFileSync, writeFileSync } from "node:fs";
import { parseArgs } from "node:util";

import { SchemaError, UsageError } from "./errors.js";
import { renderSweep } from "./sweep.js";
import { renderTrajectory } from "./trajectory.js";

function run(name: string, usage: string, argv: string[], nArgs: number,
             render: (paths: string[]) => string): number {
  try {
    let parsed;
    try {
      parsed = parseArgs({
        args: argv,
        options: {
          output: { type: "string", short: "o" },
          help: { type: "boolean", short: "h" },
        },
        allowPositionals: true,
      });
    } catch (e) {
      throw new UsageError(`${(e as Error).message}\nusage: ${usage}`);
    }
    if (parsed.values.help) {
      console.log(`usage: ${usage}`);
      return 0;
    }
    if (parsed.positionals.length !== nArgs) {
      throw new UsageError(`expected ${nArgs} input path(s)\nusage: ${usage}`);
    }
    if (parsed.values.output === undefined) {
      throw new UsageError(`-o/--output is required\nusage: ${usage}`);
    }
    const svg = render(parsed.positionals);
    writeFileSync(parsed.values.output, svg, { encoding: "utf8" });
    return 0;
  } catch (e) {
    if (e instanceof UsageError || e instanceof SchemaError ||
        (e as NodeJS.ErrnoException).code !== undefined) {
      console.error(`${name}: error: ${(e as Error).message}`);
      return 1;
    }
    throw e;
  }
}

export function trajectoryMain(argv: string[]): number {
  return run(
    "render-trajectory",
    "render-trajectory <trajectory.csv> <summary.json> -o <out.svg>",
    argv, 2,
    ([csvPath, jsonPath]) => renderTrajectory(
      readFileSync(csvPath, "utf8"), readFileSync(jsonPath, "utf8")),
  );
}

export function sweepMain(argv: string[]): number {
  return run(
    "render-sweep",
    "render-sweep <sweep.csv> -o <out.svg>",
    argv, 1,
    ([csvPath]) => renderSweep(readFileSync(csvPath, "utf8")),
  );
}
