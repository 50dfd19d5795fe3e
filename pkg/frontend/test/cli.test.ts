import { createHash } from "node:crypto";
import { copyFileSync, existsSync, mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it, vi } from "vitest";

import { main } from "../src/cli.js";

const fixture = fileURLToPath(new URL("./fixtures/sweep.csv", import.meta.url));

function sha256(path: string): string {
  return createHash("sha256").update(readFileSync(path)).digest("hex");
}

function workdir(): string {
  return mkdtempSync(join(tmpdir(), "gutsim-plots-"));
}

describe("cli", () => {
  it("renders recall curves and leaves the input untouched", () => {
    const dir = workdir();
    const csv = join(dir, "sweep.csv");
    copyFileSync(fixture, csv);
    const before = sha256(csv);
    const out = join(dir, "recall.svg");
    expect(main([csv, out])).toBe(0);
    expect(existsSync(out)).toBe(true);
    expect(readFileSync(out, "utf-8")).toContain("<svg");
    expect(sha256(csv)).toBe(before);
  });

  it("renders success bars with --metric success", () => {
    const dir = workdir();
    const out = join(dir, "success.svg");
    expect(main([fixture, out, "--metric", "success"])).toBe(0);
    expect(readFileSync(out, "utf-8")).toContain("Full-recovery success rate");
  });

  it("identical inputs produce identical files", () => {
    const dir = workdir();
    const a = join(dir, "a.svg");
    const b = join(dir, "b.svg");
    expect(main([fixture, a])).toBe(0);
    expect(main([fixture, b])).toBe(0);
    expect(readFileSync(a)).toEqual(readFileSync(b));
  });

  it("schema mismatch exits nonzero with a diff and writes nothing", () => {
    const dir = workdir();
    const bad = join(dir, "bad.csv");
    const out = join(dir, "out.svg");
    const err = vi.spyOn(console, "error").mockImplementation(() => {});
    try {
      copyFileSync(fixture, bad);
      const mangled = readFileSync(bad, "utf-8").replace("recall", "fraction");
      writeFileSync(bad, mangled);
      expect(main([bad, out])).toBe(1);
      expect(existsSync(out)).toBe(false);
      expect(err.mock.calls.some(([msg]) => String(msg).includes("missing [recall]"))).toBe(true);
    } finally {
      err.mockRestore();
    }
  });

  it("empty input exits nonzero and writes nothing", () => {
    const dir = workdir();
    const empty = join(dir, "empty.csv");
    writeFileSync(empty, "");
    const out = join(dir, "out.svg");
    const err = vi.spyOn(console, "error").mockImplementation(() => {});
    try {
      expect(main([empty, out])).toBe(1);
      expect(existsSync(out)).toBe(false);
    } finally {
      err.mockRestore();
    }
  });

  it("bad usage exits 2", () => {
    const err = vi.spyOn(console, "error").mockImplementation(() => {});
    try {
      expect(main([])).toBe(2);
      expect(main([fixture, "out.svg", "--metric", "pie"])).toBe(2);
    } finally {
      err.mockRestore();
    }
  });
});
