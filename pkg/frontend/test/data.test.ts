import { readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import { parseResultsCsv, SchemaError } from "../src/data.js";

const fixture = fileURLToPath(new URL("./fixtures/sweep.csv", import.meta.url));
const SWEEP = readFileSync(fixture, "utf-8");

const HEADER = "algorithm,seed,decisions_per_agent,recall,simulated_time";

describe("parseResultsCsv", () => {
  it("ingests the simulator sweep fixture", () => {
    const table = parseResultsCsv(SWEEP);
    expect(table.algorithms).toEqual(["COVERAGE", "GUTS", "NATS"]);
    expect(table.rows.length).toBeGreaterThan(50);
    for (const row of table.rows) {
      expect(row.recall).toBeGreaterThanOrEqual(0);
      expect(row.recall).toBeLessThanOrEqual(1);
    }
  });

  it("rejects an empty document", () => {
    expect(() => parseResultsCsv("")).toThrow(SchemaError);
    expect(() => parseResultsCsv("")).toThrow(/empty/);
  });

  it("rejects a header-only document", () => {
    expect(() => parseResultsCsv(HEADER + "\n")).toThrow(/no rows/);
  });

  it("reports the schema difference for wrong columns", () => {
    const bad = "algorithm,seed,recall\nGUTS,0,1.0\n";
    expect(() => parseResultsCsv(bad)).toThrow(/missing \[decisions_per_agent, simulated_time\]/);
  });

  it("reports unexpected columns", () => {
    const bad = HEADER + ",bonus\nGUTS,0,1.0,0.5,10.0,x\n";
    expect(() => parseResultsCsv(bad)).toThrow(/unexpected \[bonus\]/);
  });

  it("rejects non-numeric fields", () => {
    const bad = HEADER + "\nGUTS,zero,1.0,0.5,10.0\n";
    expect(() => parseResultsCsv(bad)).toThrow(/seed is not a number/);
  });

  it("rejects out-of-range recall", () => {
    const bad = HEADER + "\nGUTS,0,1.0,1.5,10.0\n";
    expect(() => parseResultsCsv(bad)).toThrow(/outside \[0, 1\]/);
  });

  it("rejects per-seed curves that go backwards", () => {
    const bad =
      HEADER + "\nGUTS,0,2.0,0.5,10.0\nGUTS,0,1.0,0.6,20.0\n";
    expect(() => parseResultsCsv(bad)).toThrow(/not monotone/);
    const badRecall =
      HEADER + "\nGUTS,0,1.0,0.5,10.0\nGUTS,0,2.0,0.4,20.0\n";
    expect(() => parseResultsCsv(badRecall)).toThrow(/recall decreases/);
  });
});
