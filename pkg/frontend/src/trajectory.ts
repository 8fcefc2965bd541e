/** Trajectory panel renderer.
 *
 * One component panel per measured qubit (two stacked panels when the
 * CSV carries partner-marginal columns), each with thin horizontal
 * reference lines at the projective-update components from the summary,
 * plus a rate subpanel.  Time is on a log axis.  Every plotted number
 * comes from the input files; terminal values are additionally exposed
 * as data-final attributes carrying the raw CSV strings so downstream
 * checks can compare them exactly.
 */

import { readTrajectoryCsv, TrajectoryTable } from "./csv.js";
import { SchemaError } from "./errors.js";
import { xAxis, yAxis } from "./axes.js";
import { linearScale, log10Scale, Scale } from "./scales.js";
import { el, polylinePoints, px, text } from "./svg.js";
import { readSummary, RunSummary } from "./summary.js";

const W = 860;
const ML = 64;
const MR = 26;
const MT = 38;
const PH = 290;   // component panel
const RH = 120;   // rate subpanel
const GAP = 16;
const XSTRIP = 40;

const COLORS: Record<string, string> = {
  n_x: "#d7301f", n_y: "#1a9641", n_z: "#2b5fbf",
  nB_x: "#d7301f", nB_y: "#1a9641", nB_z: "#2b5fbf",
  norm_n: "#000000", epsilon: "#e08214", rate_n: "#7b3294",
};

interface Series {
  name: string;
  values: Float64Array;
  lastRaw: string;
  dash?: string;
  width?: number;
}

function seriesFrom(table: TrajectoryTable, name: string,
                    mask: number[]): Series {
  const all = table.values(name);
  return {
    name,
    values: Float64Array.from(mask, (i) => all[i]),
    lastRaw: table.lastRaw(name),
  };
}

function panel(y0: number, label: string, panelId: string, xs: Scale,
               tVals: Float64Array, series: Series[],
               refs: { name: string; value: number }[],
               peak: number | undefined): string {
  const ys = linearScale(-1.08, 1.08, y0 + PH, y0);
  const parts: string[] = [];
  parts.push(el("rect", {
    x: ML, y: y0, width: W - ML - MR, height: PH,
    fill: "none", stroke: "#404040", "stroke-width": 1,
  }));
  parts.push(yAxis(ys, ML, label));
  // zero line for orientation
  parts.push(el("line", {
    x1: ML, x2: W - MR, y1: ys.map(0), y2: ys.map(0),
    stroke: "#d0d0d0", "stroke-width": 0.7,
  }));
  for (const r of refs) {
    parts.push(el("line", {
      x1: ML, x2: W - MR, y1: ys.map(r.value), y2: ys.map(r.value),
      class: "ref", "data-ref": r.name, "data-value": String(r.value),
      stroke: COLORS[r.name] ?? "#808080",
      "stroke-width": 0.9, opacity: 0.55,
    }));
  }
  if (peak !== undefined) {
    parts.push(el("line", {
      x1: xs.map(peak), x2: xs.map(peak), y1: y0, y2: y0 + PH,
      class: "peak", "data-t": String(peak),
      stroke: "#707070", "stroke-width": 1, "stroke-dasharray": "5 4",
    }));
  }
  const xPix = Array.from(tVals, (t) => xs.map(t));
  for (const s of series) {
    const yPix = Array.from(s.values, (v) => ys.map(v));
    parts.push(el("polyline", {
      points: polylinePoints(xPix, yPix),
      class: "series", "data-series": s.name, "data-final": s.lastRaw,
      fill: "none", stroke: COLORS[s.name] ?? "#333333",
      "stroke-width": s.width ?? 1.5, "stroke-dasharray": s.dash,
    }));
    parts.push(el("circle", {
      cx: xPix[xPix.length - 1], cy: yPix[yPix.length - 1], r: 2.6,
      class: "terminal", "data-series": s.name, "data-final": s.lastRaw,
      fill: COLORS[s.name] ?? "#333333",
    }));
  }
  // legend along the top edge
  let lx = ML + 10;
  for (const s of series) {
    const tag = s.name === "norm_n" ? "|n|" : s.name;
    parts.push(el("line", {
      x1: lx, x2: lx + 18, y1: y0 + 14, y2: y0 + 14,
      stroke: COLORS[s.name] ?? "#333333", "stroke-width": 2,
      "stroke-dasharray": s.dash,
    }));
    parts.push(text(lx + 22, y0 + 18, tag, {
      "font-size": 11, fill: "#404040",
    }));
    lx += 30 + 8 * tag.length;
  }
  return el("g", { class: "panel", "data-panel": panelId }, parts.join(""));
}

export function renderTrajectory(csvText: string,
                                 summaryText: string): string {
  const table = readTrajectoryCsv(csvText);
  const summary: RunSummary = readSummary(summaryText);

  const tAll = table.values("t");
  const mask: number[] = [];
  for (let i = 0; i < tAll.length; i++) {
    if (tAll[i] > 0) mask.push(i);
  }
  if (mask.length < 2) {
    throw new SchemaError("need at least two positive-time samples");
  }
  const t = Float64Array.from(mask, (i) => tAll[i]);
  const xs = log10Scale(t[0], t[t.length - 1], ML, W - MR);

  const twoQubit = table.has("nB_x") &&
    summary.result.final_bloch_B !== undefined;
  const peakT = summary.driving?.peak_time;
  const peak = peakT !== undefined && peakT !== null &&
    peakT >= t[0] && peakT <= t[t.length - 1] ? peakT : undefined;

  const seriesA: Series[] = [
    seriesFrom(table, "n_x", mask),
    seriesFrom(table, "n_y", mask),
    seriesFrom(table, "n_z", mask),
    { ...seriesFrom(table, "norm_n", mask), dash: "6 4", width: 1.2 },
  ];
  if (table.has("epsilon")) {
    seriesA.push({ ...seriesFrom(table, "epsilon", mask), width: 1.2 });
  }
  const refsA = ["n_x", "n_y", "n_z"].map((name, i) => ({
    name, value: summary.result.vn_reference[i],
  }));

  const blocks: string[] = [];
  let y = MT;
  blocks.push(panel(y, twoQubit ? "measured qubit" : "Bloch components",
                    "A", xs, t, seriesA, refsA, peak));
  y += PH + GAP;

  if (twoQubit) {
    const seriesB = ["nB_x", "nB_y", "nB_z"].map(
      (name) => seriesFrom(table, name, mask));
    const refsB = ["nB_x", "nB_y", "nB_z"].map((name, i) => ({
      name, value: summary.result.vn_reference_B![i],
    }));
    blocks.push(panel(y, "partner marginal", "B", xs, t, seriesB, refsB,
                      peak));
    y += PH + GAP;
  }

  // rate subpanel, linear y
  const rate = seriesFrom(table, "rate_n", mask);
  const rMax = Math.max(...rate.values, 0) || 1;
  const rs = linearScale(0, rMax * 1.06, y + RH, y);
  const rateParts: string[] = [
    el("rect", {
      x: ML, y, width: W - ML - MR, height: RH,
      fill: "none", stroke: "#404040", "stroke-width": 1,
    }),
    yAxis(rs, ML, "|n'(t)| [1/s]"),
  ];
  if (peak !== undefined) {
    rateParts.push(el("line", {
      x1: xs.map(peak), x2: xs.map(peak), y1: y, y2: y + RH,
      class: "peak", "data-t": String(peak),
      stroke: "#707070", "stroke-width": 1, "stroke-dasharray": "5 4",
    }));
  }
  rateParts.push(el("polyline", {
    points: polylinePoints(Array.from(t, (v) => xs.map(v)),
                           Array.from(rate.values, (v) => rs.map(v))),
    class: "series", "data-series": "rate_n", "data-final": rate.lastRaw,
    fill: "none", stroke: COLORS.rate_n, "stroke-width": 1.4,
  }));
  blocks.push(el("g", { class: "panel", "data-panel": "rate" },
                 rateParts.join("")));
  y += RH;
  blocks.push(xAxis(xs, y, "t [s]"));
  y += XSTRIP;

  const title = `${summary.config}  branch=${summary.branch.mode}` +
    `  p=${summary.branch.probability.toPrecision(6)}`;
  const head = text(ML, 24, title, {
    "font-size": 14, fill: "#202020", "font-weight": "bold",
  });

  const H = y + 6;
  return el("svg", {
    xmlns: "http://www.w3.org/2000/svg",
    viewBox: `0 0 ${W} ${H}`, width: W, height: H,
    "font-family": "Helvetica, Arial, sans-serif",
    "data-config": summary.config, "data-branch": summary.branch.mode,
  }, el("rect", { x: 0, y: 0, width: W, height: H, fill: "#ffffff" }),
     head, blocks.join("")) + "\n";
}
