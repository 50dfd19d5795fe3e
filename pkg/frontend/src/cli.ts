#!/usr/bin/env node
/**
 * Usage: gutsim-plots <results.csv> <output.svg> [--metric recall|success]
 *
 * Renders the simulator's sweep CSV into a comparison figure. Exits nonzero
 * (printing the schema difference) when the table does not match the
 * expected columns.
 */

import { Metric, renderFigure } from "./plots.js";

export function main(argv: string[]): number {
  const args = [...argv];
  let metric: Metric = "recall";
  const metricIdx = args.indexOf("--metric");
  if (metricIdx >= 0) {
    const value = args[metricIdx + 1];
    if (value !== "recall" && value !== "success") {
      console.error(`unknown metric ${value ?? "(none)"}: expected recall or success`);
      return 2;
    }
    metric = value;
    args.splice(metricIdx, 2);
  }
  if (args.length !== 2) {
    console.error("usage: gutsim-plots <results.csv> <output.svg> [--metric recall|success]");
    return 2;
  }
  const [csvPath, outPath] = args;
  try {
    renderFigure(csvPath, outPath, metric);
  } catch (err) {
    console.error(err instanceof Error ? err.message : String(err));
    return 1;
  }
  console.log(`wrote ${metric} figure -> ${outPath}`);
  return 0;
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
