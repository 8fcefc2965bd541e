import { execFileSync } from "node:child_process";
import { existsSync, mkdtempSync, readFileSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { afterAll, afterEach, beforeEach, describe, expect, it, vi } from "vitest";

import { sweepMain, trajectoryMain } from "../src/cli.js";

const FIX = fileURLToPath(new URL("./fixtures/", import.meta.url));
const ROOT = fileURLToPath(new URL("..", import.meta.url));

const CSV = join(FIX, "fig2", "trajectory_plus.csv");
const SUMMARY = join(FIX, "fig2", "summary_plus.json");
const SWEEP = join(FIX, "theta_sweep.csv");

const tmp = mkdtempSync(join(tmpdir(), "qlmeas-fig-"));
afterAll(() => rmSync(tmp, { recursive: true, force: true }));

let stderrSpy: ReturnType<typeof vi.spyOn>;
beforeEach(() => {
  stderrSpy = vi.spyOn(console, "error").mockImplementation(() => {});
});
afterEach(() => stderrSpy.mockRestore());

function lastError(): string {
  const calls = stderrSpy.mock.calls;
  expect(calls.length).toBeGreaterThan(0);
  return String(calls[calls.length - 1][0]);
}

describe("render-trajectory", () => {
  it("writes an SVG and exits 0", () => {
    const out = join(tmp, "fig2.svg");
    expect(trajectoryMain([CSV, SUMMARY, "-o", out])).toBe(0);
    const svg = readFileSync(out, "utf8");
    expect(svg.startsWith("<svg")).toBe(true);
    expect(svg).toContain('data-branch="plus"');
  });

  it("fails on a missing input file", () => {
    expect(trajectoryMain([join(tmp, "nope.csv"), SUMMARY,
                           "-o", join(tmp, "x.svg")])).toBe(1);
    expect(lastError()).toContain("render-trajectory: error:");
  });

  it("fails on a schema mismatch", () => {
    expect(trajectoryMain([SUMMARY, SUMMARY,
                           "-o", join(tmp, "x.svg")])).toBe(1);
    expect(lastError()).toContain("expected schema line");
  });

  it("requires -o", () => {
    expect(trajectoryMain([CSV, SUMMARY])).toBe(1);
    expect(lastError()).toContain("-o/--output is required");
  });

  it("requires both input paths", () => {
    expect(trajectoryMain([CSV, "-o", join(tmp, "x.svg")])).toBe(1);
    expect(lastError()).toContain("expected 2 input path(s)");
  });

  it("rejects unknown options", () => {
    expect(trajectoryMain([CSV, SUMMARY, "--frobnicate"])).toBe(1);
    expect(lastError()).toContain("usage:");
  });

  it("prints usage on -h and exits 0", () => {
    const logSpy = vi.spyOn(console, "log").mockImplementation(() => {});
    expect(trajectoryMain(["-h"])).toBe(0);
    expect(String(logSpy.mock.calls[0][0])).toContain("usage:");
    logSpy.mockRestore();
  });
});

describe("render-sweep", () => {
  it("writes an SVG and exits 0", () => {
    const out = join(tmp, "sweep.svg");
    expect(sweepMain([SWEEP, "-o", out])).toBe(0);
    expect(readFileSync(out, "utf8")).toContain("near-critical-band");
  });

  it("fails on a trajectory CSV", () => {
    expect(sweepMain([CSV, "-o", join(tmp, "x.svg")])).toBe(1);
    expect(lastError()).toContain("expected schema line");
  });
});

describe("installed bin scripts", () => {
  it("run end to end under node", () => {
    const script = join(ROOT, "dist", "bin", "render-trajectory.js");
    if (!existsSync(script)) {
      execFileSync("node", [join(ROOT, "node_modules", "typescript", "bin", "tsc"),
                            "-p", join(ROOT, "tsconfig.build.json")],
                   { cwd: ROOT });
    }
    const out = join(tmp, "spawned.svg");
    execFileSync("node", [script, CSV, SUMMARY, "-o", out], { cwd: ROOT });
    expect(readFileSync(out, "utf8").startsWith("<svg")).toBe(true);
  });
});
