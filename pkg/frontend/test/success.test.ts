import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { parseResultsCsv } from "../src/data.js";
import { buildSuccessSvg, successRates } from "../src/success.js";

const fixture = fileURLToPath(new URL("./fixtures/sweep.csv", import.meta.url));
const SWEEP = readFileSync(fixture, "utf-8");
const HEADER = "algorithm,seed,decisions_per_agent,recall,simulated_time";

describe("successRates", () => {
  it("counts seeds whose final recall reaches 1.0", () => {
    const csv = [
      HEADER,
      "GUTS,0,1.0,0.5,1.0",
      "GUTS,0,2.0,1.0,2.0",
      "GUTS,1,2.0,0.5,2.0",
      "COVERAGE,0,2.0,0.0,2.0",
      "COVERAGE,1,2.0,1.0,2.0",
    ].join("\n");
    const rates = successRates(parseResultsCsv(csv));
    expect(rates.get("GUTS")).toBe(0.5);
    expect(rates.get("COVERAGE")).toBe(0.5);
  });

  it("single-seed rates are zero or one", () => {
    const csv = [HEADER, "GUTS,0,1.0,1.0,1.0", "NATS,0,1.0,0.5,1.0"].join("\n");
    const rates = successRates(parseResultsCsv(csv));
    expect([...rates.values()].every((r) => r === 0 || r === 1)).toBe(true);
  });

  it("all-successful table puts every bar at 1.0", () => {
    const csv = [HEADER, "GUTS,0,1.0,1.0,1.0", "GUTS,1,1.0,1.0,1.0"].join("\n");
    expect(successRates(parseResultsCsv(csv)).get("GUTS")).toBe(1.0);
  });
});

describe("buildSuccessSvg", () => {
  it("draws one bar per algorithm", () => {
    const table = parseResultsCsv(SWEEP);
    const svg = buildSuccessSvg(table);
    const bars = [...svg.matchAll(/class="success-bar"/g)].length;
    expect(bars).toBe(table.algorithms.length);
  });

  it("output is deterministic for fixed input", () => {
    const table = parseResultsCsv(SWEEP);
    expect(buildSuccessSvg(table)).toBe(buildSuccessSvg(table));
  });
});
