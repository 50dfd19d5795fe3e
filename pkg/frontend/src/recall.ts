/**
 * Recall-versus-decisions comparison figure.
 *
 * One mean curve per algorithm (step-function mean across seeds, carrying
 * each seed's last recall forward) with a min-max band across seeds as
 * shading. Monotone inputs produce monotone curves.
 */

import { groupBySeed, ResultRow, ResultsTable } from "./data.js";
import {
  DEFAULT_FRAME,
  Frame,
  axes,
  colorFor,
  document,
  el,
  fmt,
  legend,
  linearScale,
} from "./svg.js";

export interface CurvePoint {
  decisions: number;
  mean: number;
  lo: number;
  hi: number;
}

function stepValue(curve: ResultRow[], x: number): number {
  let value = 0;
  for (const point of curve) {
    if (point.decisionsPerAgent <= x) value = point.recall;
    else break;
  }
  return value;
}

export function meanCurves(table: ResultsTable): Map<string, CurvePoint[]> {
  const byAlgorithm = new Map<string, ResultRow[]>();
  for (const row of table.rows) {
    const bucket = byAlgorithm.get(row.algorithm);
    if (bucket) bucket.push(row);
    else byAlgorithm.set(row.algorithm, [row]);
  }
  const out = new Map<string, CurvePoint[]>();
  for (const algorithm of table.algorithms) {
    const rows = byAlgorithm.get(algorithm) ?? [];
    const seeds = [...groupBySeed(rows).values()];
    const grid = [...new Set(rows.map((r) => r.decisionsPerAgent))].sort((a, b) => a - b);
    const points = grid.map((decisions) => {
      const values = seeds.map((curve) => stepValue(curve, decisions));
      return {
        decisions,
        mean: values.reduce((a, b) => a + b, 0) / values.length,
        lo: Math.min(...values),
        hi: Math.max(...values),
      };
    });
    out.set(algorithm, points);
  }
  return out;
}

export function buildRecallSvg(table: ResultsTable, frame: Frame = DEFAULT_FRAME): string {
  const curves = meanCurves(table);
  const maxDecisions = Math.max(...table.rows.map((r) => r.decisionsPerAgent));
  const x = linearScale([0, maxDecisions], [frame.margin.left, frame.width - frame.margin.right]);
  const y = linearScale([0, 1], [frame.height - frame.margin.bottom, frame.margin.top]);

  const parts: string[] = [];
  parts.push(axes(frame, x, y, "decisions per agent", "recall"));
  table.algorithms.forEach((algorithm, i) => {
    const points = curves.get(algorithm)!;
    const color = colorFor(i);
    if (points.length > 1) {
      const upper = points.map((p) => `${fmt(x(p.decisions))},${fmt(y(p.hi))}`);
      const lower = [...points].reverse().map((p) => `${fmt(x(p.decisions))},${fmt(y(p.lo))}`);
      parts.push(
        el("polygon", {
          points: [...upper, ...lower].join(" "),
          fill: color,
          "fill-opacity": 0.15,
          stroke: "none",
        }),
      );
    }
    const line = points.map((p) => `${fmt(x(p.decisions))},${fmt(y(p.mean))}`).join(" ");
    parts.push(
      el("polyline", {
        points: line,
        fill: "none",
        stroke: color,
        "stroke-width": 2,
        class: "mean-curve",
      }),
    );
  });
  parts.push(legend(frame, table.algorithms.map((a, i) => ({ label: a, color: colorFor(i) }))));
  return document(frame, "Search efficiency: recall vs decisions per agent", parts.join("\n"));
}
