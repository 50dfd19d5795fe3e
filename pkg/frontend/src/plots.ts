/** File-level entry points: CSV in, SVG figure out. */

import { readFileSync, writeFileSync } from "node:fs";

import { parseResultsCsv } from "./data.js";
import { buildRecallSvg } from "./recall.js";
import { buildSuccessSvg } from "./success.js";

export type Metric = "recall" | "success";

/**
 * Render one figure. The input is only ever read; nothing is written unless
 * parsing and validation succeed, so a bad table never leaves a stale file.
 */
export function renderFigure(csvPath: string, outPath: string, metric: Metric): void {
  const text = readFileSync(csvPath, "utf-8");
  const table = parseResultsCsv(text);
  const svg = metric === "success" ? buildSuccessSvg(table) : buildRecallSvg(table);
  writeFileSync(outPath, svg);
}

export function plotRecallCurves(csvPath: string, outPath: string): void {
  renderFigure(csvPath, outPath, "recall");
}

export function plotSuccessBars(csvPath: string, outPath: string): void {
  renderFigure(csvPath, outPath, "success");
}
