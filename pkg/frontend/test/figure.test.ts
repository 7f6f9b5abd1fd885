import { describe, expect, it } from "vitest";

import { CSV_HEADER, parseSweepCsv } from "../src/csv.js";
import { FigureSpec, collectSeries, figureFromRows, renderSvg } from "../src/figure.js";

function rows(lines: string[]) {
  return parseSweepCsv([CSV_HEADER, ...lines, ""].join("\n"));
}

const SAMPLE = rows([
  "tl-mpa,0.1,4.0,100,0.02,0.001,0.04,16,7,320,1",
  "tl-mpa,0.1,8.0,100,0.001,0.0001,0.004,1,1,32,1",
  "omp-mpa,0.1,4.0,100,0.3,0.05,0.35,240,360,2800,1",
  "omp-mpa,0.1,8.0,100,0.25,0.07,0.28,200,500,2240,1",
  "tl-mpa,0.3,8.0,100,0.05,0.01,0.08,120,72,1920,1",
]);

const SPEC: FigureSpec = {
  inputs: [],
  metric: "ser",
  lambda: 0.1,
  logY: true,
  out: "unused.svg",
};

describe("collectSeries", () => {
  it("filters by sparsity and sorts detectors", () => {
    const series = collectSeries(SAMPLE, SPEC);
    expect(series.map((s) => s.detector)).toEqual(["omp-mpa", "tl-mpa"]);
    expect(series[1].points.map((p) => p.snr)).toEqual([4.0, 8.0]);
  });

  it("skips absent metrics rather than plotting zeros", () => {
    const withHole = rows([
      "tl-mpa-initial,0.1,4.0,100,0.0,0.01,,0,72,0,1",
      "tl-mpa-initial,0.1,8.0,100,0.0,0.005,,0,36,0,1",
    ]);
    expect(collectSeries(withHole, { ...SPEC, metric: "ser" })).toHaveLength(0);
    const pf = collectSeries(withHole, { ...SPEC, metric: "pf" });
    expect(pf[0].points).toHaveLength(2);
  });

  it("drops nonpositive values on a log axis", () => {
    const withZero = rows([
      "tl-mpa,0.1,4.0,100,0.02,0.001,0.04,16,7,320,1",
      "tl-mpa,0.1,12.0,100,0.0,0.0,0.0,0,0,0,1",
    ]);
    const series = collectSeries(withZero, SPEC);
    expect(series[0].points).toHaveLength(1);
  });
});

describe("renderSvg", () => {
  it("draws one polyline per detector with legend labels", () => {
    const svg = renderSvg(collectSeries(SAMPLE, SPEC), SPEC);
    expect(svg.match(/<polyline /g)).toHaveLength(2);
    expect(svg).toContain(">tl-mpa</text>");
    expect(svg).toContain(">omp-mpa</text>");
  });

  it("uses decade ticks on the log axis", () => {
    const svg = renderSvg(collectSeries(SAMPLE, SPEC), SPEC);
    expect(svg).toContain(">1e-2</text>");
    expect(svg).toContain(">1e-1</text>");
  });

  it("is deterministic", () => {
    const a = renderSvg(collectSeries(SAMPLE, SPEC), SPEC);
    const b = renderSvg(collectSeries(SAMPLE, SPEC), SPEC);
    expect(a).toBe(b);
  });

  it("errors when nothing is plottable", () => {
    expect(() => renderSvg([], SPEC)).toThrowError(/no plottable points/);
  });

  it("honors per-detector style overrides", () => {
    const spec = { ...SPEC, styles: { "tl-mpa": { color: "#123456", dash: "4 2" } } };
    const svg = renderSvg(collectSeries(SAMPLE, spec), spec);
    expect(svg).toContain('stroke="#123456"');
    expect(svg).toContain('stroke-dasharray="4 2"');
  });
});

describe("figureFromRows", () => {
  it("two identical CSVs render the same figure as one", () => {
    const single = figureFromRows([SAMPLE], SPEC);
    const doubled = figureFromRows([SAMPLE, SAMPLE], SPEC);
    expect(doubled).toBe(single);
  });

  it("a sweep including the oracle gets an oracle reference line", () => {
    const withOracle = rows([
      "tl-mpa,0.1,4.0,100,0.02,0.001,0.04,16,7,320,1",
      "tl-mpa,0.1,8.0,100,0.001,0.0001,0.004,1,1,32,1",
      "oracle-mpa,0.1,4.0,100,0.0,0.0,0.03,0,0,240,1",
      "oracle-mpa,0.1,8.0,100,0.0,0.0,0.003,0,0,24,1",
    ]);
    const svg = figureFromRows([withOracle], SPEC);
    expect(svg).toContain(">oracle-mpa</text>");
    expect(svg.match(/<polyline /g)).toHaveLength(2);
  });
});
