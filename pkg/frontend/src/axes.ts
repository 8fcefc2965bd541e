/** Shared axis drawing: tick marks outside the frame, labels beyond. */

import { Scale } from "./scales.js";
import { el, text } from "./svg.js";

const AXIS = "#404040";

export function xAxis(scale: Scale, yPix: number, label?: string,
                      labelY?: number): string {
  const parts: string[] = [];
  for (const t of scale.ticks) {
    const x = scale.map(t.value);
    parts.push(el("line", {
      x1: x, x2: x, y1: yPix, y2: yPix + 5,
      stroke: AXIS, "stroke-width": 1,
    }));
    parts.push(text(x, yPix + 18, t.label, {
      "text-anchor": "middle", "font-size": 11, fill: AXIS,
    }));
  }
  if (label !== undefined && scale.ticks.length > 0) {
    const xs = scale.ticks.map((t) => scale.map(t.value));
    const mid = (Math.min(...xs) + Math.max(...xs)) / 2;
    parts.push(text(mid, labelY ?? yPix + 34, label, {
      "text-anchor": "middle", "font-size": 12, fill: AXIS,
    }));
  }
  return parts.join("");
}

export function yAxis(scale: Scale, xPix: number, label?: string): string {
  const parts: string[] = [];
  for (const t of scale.ticks) {
    const y = scale.map(t.value);
    parts.push(el("line", {
      x1: xPix - 5, x2: xPix, y1: y, y2: y,
      stroke: AXIS, "stroke-width": 1,
    }));
    parts.push(text(xPix - 8, y + 3.5, t.label, {
      "text-anchor": "end", "font-size": 11, fill: AXIS,
    }));
  }
  if (label !== undefined && scale.ticks.length > 0) {
    const ys = scale.ticks.map((t) => scale.map(t.value));
    const mid = (Math.min(...ys) + Math.max(...ys)) / 2;
    parts.push(el("g",
      { transform: `translate(${(xPix - 46).toFixed(2)} ${mid.toFixed(2)})` },
      text(0, 0, label, {
        "text-anchor": "middle", "font-size": 12, fill: AXIS,
        transform: "rotate(-90)",
      })));
  }
  return parts.join("");
}
