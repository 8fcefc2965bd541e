/** String-built SVG, no DOM.  Attribute values are escaped; numeric
 * attributes are trimmed for readability except data-* passthrough
 * values, which callers supply as raw strings. */

export type Attrs = Record<string, string | number | undefined>;

export function esc(s: string): string {
  return s
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

/** pixel coordinates: two decimals is below visual resolution */
export function px(x: number): string {
  const r = x.toFixed(2);
  return r === "-0.00" ? "0.00" : r;
}

function attr(v: string | number): string {
  return typeof v === "number" ? px(v) : esc(v);
}

export function el(tag: string, attrs: Attrs, ...children: string[]): string {
  const parts = [tag];
  for (const [k, v] of Object.entries(attrs)) {
    if (v !== undefined) parts.push(`${k}="${attr(v)}"`);
  }
  const open = parts.join(" ");
  if (children.length === 0) return `<${open}/>`;
  return `<${open}>${children.join("")}</${tag}>`;
}

export function text(x: number, y: number, s: string, extra: Attrs = {}): string {
  return el("text", { x, y, ...extra }, esc(s));
}

export function polylinePoints(xs: number[], ys: number[]): string {
  const pts: string[] = [];
  for (let i = 0; i < xs.length; i++) {
    if (!Number.isFinite(xs[i]) || !Number.isFinite(ys[i])) continue;
    pts.push(`${px(xs[i])},${px(ys[i])}`);
  }
  return pts.join(" ");
}
