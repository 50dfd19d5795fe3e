/** Minimal deterministic SVG helpers: scales, ticks, and element assembly. */

export interface Frame {
  width: number;
  height: number;
  margin: { top: number; right: number; bottom: number; left: number };
}

export const DEFAULT_FRAME: Frame = {
  width: 720,
  height: 440,
  margin: { top: 40, right: 160, bottom: 55, left: 65 },
};

export const PALETTE = [
  "#1f77b4",
  "#ff7f0e",
  "#2ca02c",
  "#d62728",
  "#9467bd",
  "#8c564b",
];

export function colorFor(index: number): string {
  return PALETTE[index % PALETTE.length];
}

export interface LinearScale {
  (value: number): number;
  domain: [number, number];
}

export function linearScale(domain: [number, number], range: [number, number]): LinearScale {
  const [d0, d1] = domain;
  const [r0, r1] = range;
  const span = d1 - d0 || 1;
  const scale = ((value: number) => r0 + ((value - d0) / span) * (r1 - r0)) as LinearScale;
  scale.domain = domain;
  return scale;
}

export function ticks(domain: [number, number], count = 5): number[] {
  const [lo, hi] = domain;
  if (lo === hi) return [lo];
  const rawStep = (hi - lo) / count;
  const power = Math.floor(Math.log10(rawStep));
  const base = Math.pow(10, power);
  const step = [1, 2, 5, 10].map((m) => m * base).find((s) => (hi - lo) / s <= count) ?? base * 10;
  const out: number[] = [];
  for (let t = Math.ceil(lo / step) * step; t <= hi + 1e-12; t += step) {
    out.push(Number(t.toFixed(12)));
  }
  return out;
}

export function fmt(value: number): string {
  return Number(value.toFixed(6)).toString();
}

export function el(tag: string, attrs: Record<string, string | number>, body = ""): string {
  const rendered = Object.entries(attrs)
    .map(([k, v]) => `${k}="${v}"`)
    .join(" ");
  return body === "" ? `<${tag} ${rendered}/>` : `<${tag} ${rendered}>${body}</${tag}>`;
}

export function textEl(x: number, y: number, body: string, attrs: Record<string, string | number> = {}): string {
  return el("text", { x: fmt(x), y: fmt(y), "font-family": "sans-serif", "font-size": 13, ...attrs }, body);
}

export function axes(
  frame: Frame,
  x: LinearScale,
  y: LinearScale,
  xLabel: string,
  yLabel: string,
): string {
  const { width, height, margin } = frame;
  const parts: string[] = [];
  const x0 = margin.left;
  const x1 = width - margin.right;
  const y0 = height - margin.bottom;
  const y1 = margin.top;
  parts.push(el("line", { x1: x0, y1: y0, x2: x1, y2: y0, stroke: "#333" }));
  parts.push(el("line", { x1: x0, y1: y0, x2: x0, y2: y1, stroke: "#333" }));
  for (const t of ticks(x.domain)) {
    const px = x(t);
    parts.push(el("line", { x1: fmt(px), y1: y0, x2: fmt(px), y2: y0 + 5, stroke: "#333" }));
    parts.push(textEl(px, y0 + 20, fmt(t), { "text-anchor": "middle" }));
  }
  for (const t of ticks(y.domain)) {
    const py = y(t);
    parts.push(el("line", { x1: x0 - 5, y1: fmt(py), x2: x0, y2: fmt(py), stroke: "#333" }));
    parts.push(textEl(x0 - 9, py + 4, fmt(t), { "text-anchor": "end" }));
  }
  parts.push(textEl((x0 + x1) / 2, height - 12, xLabel, { "text-anchor": "middle" }));
  parts.push(
    textEl(18, (y0 + y1) / 2, yLabel, {
      "text-anchor": "middle",
      transform: `rotate(-90 18 ${fmt((y0 + y1) / 2)})`,
    }),
  );
  return parts.join("\n");
}

export function legend(frame: Frame, entries: { label: string; color: string }[]): string {
  const x = frame.width - frame.margin.right + 16;
  const parts: string[] = [];
  entries.forEach((entry, i) => {
    const y = frame.margin.top + 10 + i * 22;
    parts.push(el("rect", { x, y: y - 10, width: 14, height: 14, fill: entry.color }));
    parts.push(textEl(x + 20, y + 2, entry.label));
  });
  return parts.join("\n");
}

export function document(frame: Frame, title: string, body: string): string {
  return [
    `<svg xmlns="http://www.w3.org/2000/svg" width="${frame.width}" height="${frame.height}" viewBox="0 0 ${frame.width} ${frame.height}">`,
    el("rect", { x: 0, y: 0, width: frame.width, height: frame.height, fill: "white" }),
    textEl(frame.width / 2, 22, title, { "text-anchor": "middle", "font-size": 16 }),
    body,
    "</svg>",
    "",
  ].join("\n");
}
