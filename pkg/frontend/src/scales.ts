/** Axis scales and tick placement for the two panel kinds. */

export interface Tick {
  value: number;
  label: string;
}

export interface Scale {
  map(x: number): number;
  ticks: Tick[];
}

export function formatTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-3) {
    // 3e-06 -> 3e-6, 1.5e+08 -> 1.5e8
    return v.toExponential(6)
      .replace(/\.?0+e/, "e")
      .replace(/e([+-])0*(\d)/, (_, s, d) => `e${s === "-" ? "-" : ""}${d}`);
  }
  const r = v.toPrecision(6);
  return r.includes(".") ? r.replace(/\.?0+$/, "") : r;
}

export function linearScale(d0: number, d1: number, r0: number,
                            r1: number): Scale {
  const span = d1 - d0 || 1;
  const map = (x: number) => r0 + ((x - d0) / span) * (r1 - r0);
  // ~5 round-number ticks: step 1/2/5 times a power of ten
  const rough = Math.abs(d1 - d0) / 5 || 1;
  const mag = Math.pow(10, Math.floor(Math.log10(rough)));
  const step = [1, 2, 5, 10].map((m) => m * mag)
    .find((s) => Math.abs(d1 - d0) / s <= 6) ?? 10 * mag;
  const ticks: Tick[] = [];
  const lo = Math.min(d0, d1);
  const hi = Math.max(d0, d1);
  for (let v = Math.ceil(lo / step) * step; v <= hi + step * 1e-9; v += step) {
    const snapped = Math.abs(v) < step * 1e-9 ? 0 : v;
    ticks.push({ value: snapped, label: formatTick(snapped) });
  }
  return { map, ticks };
}

export function log10Scale(d0: number, d1: number, r0: number,
                           r1: number): Scale {
  if (d0 <= 0 || d1 <= 0) {
    throw new RangeError("log scale needs a positive domain");
  }
  const l0 = Math.log10(d0);
  const l1 = Math.log10(d1);
  const span = l1 - l0 || 1;
  const map = (x: number) => r0 + ((Math.log10(x) - l0) / span) * (r1 - r0);
  const ticks: Tick[] = [];
  for (let k = Math.ceil(l0); k <= Math.floor(l1) + 1e-9; k++) {
    const v = Math.pow(10, k);
    ticks.push({ value: v, label: formatTick(v) });
  }
  if (ticks.length < 2) {
    // less than a decade of span: fall back to round linear ticks
    return { map, ticks: linearScale(d0, d1, r0, r1).ticks };
  }
  return { map, ticks };
}
