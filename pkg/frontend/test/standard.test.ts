/**
 * Regenerates the five standard figures from committed sweep CSVs (made
 * with the simulator CLI) and checks the rendering contract end to end.
 */

import { mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { describe, expect, it } from "vitest";

import { parseSweepCsv } from "../src/csv.js";
import { loadSpec, main, renderSpec } from "../src/cli.js";
import { standardFigures } from "../src/standard.js";

const DATA = join(__dirname, "..", "data");

function inputs(outDir: string) {
  return {
    superset: join(DATA, "superset.csv"),
    sweep: join(DATA, "ser_sweep.csv"),
    overload: join(DATA, "overload.csv"),
    outDir,
  };
}

describe("standard figure set", () => {
  it("renders all five figures without error", () => {
    const outDir = mkdtempSync(join(tmpdir(), "figs-"));
    const specs = standardFigures(inputs(outDir));
    expect(specs).toHaveLength(5);
    for (const spec of specs) {
      const path = renderSpec(spec);
      const svg = readFileSync(path, "utf-8");
      const detectors = new Set(
        parseSweepCsv(readFileSync(spec.inputs[0], "utf-8"), spec.inputs[0])
          .filter((r) => Math.abs(r.lambda - spec.lambda) < 1e-12)
          .map((r) => r.detector),
      );
      expect(svg.match(/<polyline /g)).toHaveLength(detectors.size);
      for (const det of detectors) {
        expect(svg).toContain(`>${det}</text>`);
      }
      expect(svg).toMatch(/>\de-\d+<\/text>/); // exponential y ticks: log scale
    }
  });

  it("reruns produce byte-identical figures", () => {
    const a = mkdtempSync(join(tmpdir(), "figs-a-"));
    const b = mkdtempSync(join(tmpdir(), "figs-b-"));
    for (const [sa, sb] of standardFigures(inputs(a)).map(
      (s, i) => [s, standardFigures(inputs(b))[i]] as const,
    )) {
      renderSpec(sa);
      renderSpec(sb);
      expect(readFileSync(sa.out, "utf-8")).toBe(readFileSync(sb.out, "utf-8"));
    }
  });

  it("cli standard command succeeds", () => {
    const outDir = mkdtempSync(join(tmpdir(), "figs-cli-"));
    const rc = main([
      "standard",
      "--superset", join(DATA, "superset.csv"),
      "--sweep", join(DATA, "ser_sweep.csv"),
      "--overload", join(DATA, "overload.csv"),
      "--outdir", outDir,
    ]);
    expect(rc).toBe(0);
  });

  it("cli render command accepts a declarative spec file", () => {
    const outDir = mkdtempSync(join(tmpdir(), "figs-spec-"));
    const specPath = join(outDir, "spec.json");
    const out = join(outDir, "fig.svg");
    const spec = {
      inputs: [join(DATA, "ser_sweep.csv")],
      metric: "ser",
      lambda: 0.1,
      logY: true,
      out,
      title: "Symbol error rate",
    };
    require("node:fs").writeFileSync(specPath, JSON.stringify(spec));
    expect(main(["render", specPath])).toBe(0);
    expect(readFileSync(out, "utf-8")).toContain("<svg");
    expect(loadSpec(specPath).metric).toBe("ser");
  });

  it("cli reports malformed csv with a nonzero exit", () => {
    const outDir = mkdtempSync(join(tmpdir(), "figs-bad-"));
    const bad = join(outDir, "bad.csv");
    const specPath = join(outDir, "spec.json");
    const fs = require("node:fs");
    fs.writeFileSync(bad, "detector,oops\n1,2\n");
    fs.writeFileSync(specPath, JSON.stringify({
      inputs: [bad], metric: "ser", lambda: 0.1, out: join(outDir, "f.svg"),
    }));
    expect(main(["render", specPath])).toBe(1);
  });
});
