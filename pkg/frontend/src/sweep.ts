/** Sweep curve renderer: distance of the final state from the selected
 * outcome versus the swept parameter, near-critical cells shaded.
 *
 * One swept parameter puts that parameter on the x axis; a
 * multi-parameter grid falls back to the cell index.  Rows whose run
 * errored carry no numbers and are marked along the top edge instead of
 * plotted.  Raw final_error strings ride along as data attributes.
 */

import { readSweepCsv, SweepRow } from "./csv.js";
import { xAxis, yAxis } from "./axes.js";
import { linearScale, log10Scale, Scale } from "./scales.js";
import { el, polylinePoints, text } from "./svg.js";

const W = 760;
const ML = 76;
const MR = 24;
const MT = 40;
const PH = 330;
const XSTRIP = 42;

const BRANCH_COLOR: Record<string, string> = {
  "1": "#c51b7d", "-1": "#35978f",
};

function pick(values: number[], lo: number, hi: number, log: boolean,
              r0: number, r1: number): Scale {
  let d0 = lo;
  let d1 = hi;
  if (d0 === d1) {
    // degenerate single-point domain: pad so the point sits mid-plot
    d0 = log ? d0 / 2 : d0 - Math.max(1, Math.abs(d0) / 2);
    d1 = log ? d1 * 2 : d1 + Math.max(1, Math.abs(d1) / 2);
  }
  return log ? log10Scale(d0, d1, r0, r1) : linearScale(d0, d1, r0, r1);
}

export function renderSweep(csvText: string): string {
  const sweep = readSweepCsv(csvText);
  const rows = sweep.rows;
  const ok = rows.filter((r) => r.ok);
  const failed = rows.filter((r) => !r.ok);

  const singleAxis = sweep.axes.length === 1 ? sweep.axes[0] : undefined;
  const xOf = (r: SweepRow) =>
    singleAxis !== undefined ? Number(r.cells[singleAxis]) : r.index;
  const xLabel = singleAxis ?? `cell index (${sweep.axes.join(", ")})`;

  const xVals = rows.map(xOf);
  const xLo = Math.min(...xVals);
  const xHi = Math.max(...xVals);
  const xLog = singleAxis !== undefined && xLo > 0 && xHi / xLo >= 100;
  const xs = pick(xVals, xLo, xHi, xLog, ML, W - MR);

  const errs = ok.map((r) => r.finalError).filter(Number.isFinite);
  const yLo = errs.length ? Math.min(...errs) : 0;
  const yHi = errs.length ? Math.max(...errs) : 1;
  const yLog = yLo > 0 && yHi / yLo >= 50;
  const ys = pick(errs, yLog ? yLo / 1.5 : 0, yHi * 1.1 || 1, yLog,
                  MT + PH, MT);

  const parts: string[] = [];

  // near-critical band(s): contiguous runs along x, edges at midpoints
  const uniqueX = [...new Set(xVals)].sort((a, b) => a - b);
  const isNear = (x: number) =>
    rows.some((r) => xOf(r) === x && r.nearCritical);
  let run: number[] = [];
  const bands: Array<[number, number]> = [];
  for (let i = 0; i <= uniqueX.length; i++) {
    if (i < uniqueX.length && isNear(uniqueX[i])) {
      run.push(i);
      continue;
    }
    if (run.length > 0) {
      const a = run[0];
      const b = run[run.length - 1];
      const left = a === 0 ? uniqueX[0]
        : (uniqueX[a - 1] + uniqueX[a]) / 2;
      const right = b === uniqueX.length - 1 ? uniqueX[b]
        : (uniqueX[b] + uniqueX[b + 1]) / 2;
      bands.push([left, right]);
      run = [];
    }
  }
  for (const [a, b] of bands) {
    parts.push(el("rect", {
      x: xs.map(a), y: MT,
      width: Math.max(xs.map(b) - xs.map(a), 2), height: PH,
      class: "near-critical-band", fill: "#fde0a8", opacity: 0.6,
    }));
  }

  parts.push(el("rect", {
    x: ML, y: MT, width: W - ML - MR, height: PH,
    fill: "none", stroke: "#404040", "stroke-width": 1,
  }));
  parts.push(yAxis(ys, ML, "|final - selected outcome|"));
  parts.push(xAxis(xs, MT + PH, xLabel));

  const branches = [...new Set(ok.map((r) => r.branch))];
  for (const b of branches) {
    const color = BRANCH_COLOR[String(b)] ?? "#333333";
    const pts = ok.filter((r) => r.branch === b && Number.isFinite(xOf(r))
      && Number.isFinite(r.finalError))
      .sort((p, q) => xOf(p) - xOf(q));
    if (pts.length > 1) {
      parts.push(el("polyline", {
        points: polylinePoints(pts.map((r) => xs.map(xOf(r))),
                               pts.map((r) => ys.map(r.finalError))),
        class: "branch-curve", "data-branch": String(b),
        fill: "none", stroke: color, "stroke-width": 1.4,
      }));
    }
    for (const r of pts) {
      parts.push(el("circle", {
        cx: xs.map(xOf(r)), cy: ys.map(r.finalError), r: 3.2,
        class: "cell", "data-index": String(r.index),
        "data-branch": String(b),
        "data-final-error": r.cells.final_error,
        fill: color,
      }));
    }
    if (branches.length > 1) {
      const k = branches.indexOf(b);
      parts.push(el("circle", {
        cx: ML + 14, cy: MT + 16 + 16 * k, r: 3.2, fill: color,
      }));
      parts.push(text(ML + 24, MT + 20 + 16 * k,
                      b === 1 ? "branch +1" : "branch -1",
                      { "font-size": 11, fill: "#404040" }));
    }
  }

  for (const r of failed) {
    parts.push(text(xs.map(xOf(r)), MT + 12, "x", {
      class: "error-cell", "data-index": String(r.index),
      "text-anchor": "middle", "font-size": 12, fill: "#b00000",
      "font-weight": "bold",
    }));
  }
  if (failed.length > 0) {
    parts.push(text(W - MR, MT + PH + XSTRIP - 4,
                    `${failed.length} of ${rows.length} cells errored`,
                    { class: "note", "text-anchor": "end",
                      "font-size": 11, fill: "#b00000" }));
  }

  const head = text(ML, 24, "sweep: final distance from the selected outcome",
                    { "font-size": 14, fill: "#202020",
                      "font-weight": "bold" });
  const H = MT + PH + XSTRIP + 8;
  return el("svg", {
    xmlns: "http://www.w3.org/2000/svg",
    viewBox: `0 0 ${W} ${H}`, width: W, height: H,
    "font-family": "Helvetica, Arial, sans-serif",
  }, el("rect", { x: 0, y: 0, width: W, height: H, fill: "#ffffff" }),
     head, parts.join("")) + "\n";
}
