/** Full-recovery success-rate bars, one per algorithm. */

import { groupBySeed, ResultsTable } from "./data.js";
import {
  DEFAULT_FRAME,
  Frame,
  axes,
  colorFor,
  document,
  el,
  fmt,
  linearScale,
  textEl,
} from "./svg.js";

export function successRates(table: ResultsTable): Map<string, number> {
  const out = new Map<string, number>();
  for (const algorithm of table.algorithms) {
    const groups = [...groupBySeed(table.rows.filter((r) => r.algorithm === algorithm)).values()];
    const successes = groups.filter((g) => g[g.length - 1].recall >= 1.0).length;
    out.set(algorithm, successes / groups.length);
  }
  return out;
}

export function buildSuccessSvg(table: ResultsTable, frame: Frame = DEFAULT_FRAME): string {
  const rates = successRates(table);
  const n = table.algorithms.length;
  const x = linearScale([0, n], [frame.margin.left, frame.width - frame.margin.right]);
  const y = linearScale([0, 1], [frame.height - frame.margin.bottom, frame.margin.top]);
  const baseline = frame.height - frame.margin.bottom;

  const parts: string[] = [];
  parts.push(axes(frame, linearScale([0, 1], [x(0), x(n)]), y, "", "full-recovery rate"));
  const slot = (x(1) - x(0)) || 1;
  table.algorithms.forEach((algorithm, i) => {
    const rate = rates.get(algorithm)!;
    const left = x(i) + slot * 0.2;
    const width = slot * 0.6;
    parts.push(
      el("rect", {
        x: fmt(left),
        y: fmt(y(rate)),
        width: fmt(width),
        height: fmt(baseline - y(rate)),
        fill: colorFor(i),
        class: "success-bar",
      }),
    );
    parts.push(textEl(left + width / 2, y(rate) - 6, rate.toFixed(2), { "text-anchor": "middle" }));
    parts.push(textEl(left + width / 2, baseline + 20, algorithm, { "text-anchor": "middle" }));
  });
  return document(frame, "Full-recovery success rate by algorithm", parts.join("\n"));
}
