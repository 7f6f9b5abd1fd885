/**
 * The five standard figures: superset quality, detection performance at
 * both sparsities, symbol error rate at both sparsities.
 */

import { FigureSpec } from "./figure.js";

export interface StandardInputs {
  superset: string; // step-1 detectors, low sparsity
  sweep: string; // pipeline vs baseline across the SNR grid, lambda 0.1
  overload: string; // the same pair at lambda 0.3
  outDir: string;
}

export function standardFigures(inp: StandardInputs): FigureSpec[] {
  const out = (name: string) => `${inp.outDir}/${name}.svg`;
  return [
    {
      inputs: [inp.superset],
      metric: "pf",
      lambda: 0.1,
      logY: true,
      title: "Initial-set quality: false-alarm rate",
      out: out("superset-quality"),
    },
    {
      inputs: [inp.sweep],
      metric: "pm",
      lambda: 0.1,
      logY: true,
      title: "Detection performance, 10% activity",
      out: out("detection-low-load"),
    },
    {
      inputs: [inp.overload],
      metric: "pm",
      lambda: 0.3,
      logY: true,
      title: "Detection performance, 30% activity",
      out: out("detection-high-load"),
    },
    {
      inputs: [inp.sweep],
      metric: "ser",
      lambda: 0.1,
      logY: true,
      title: "Symbol error rate, 10% activity",
      out: out("ser-low-load"),
    },
    {
      inputs: [inp.overload],
      metric: "ser",
      lambda: 0.3,
      logY: true,
      title: "Symbol error rate, 30% activity",
      out: out("ser-high-load"),
    },
  ];
}
