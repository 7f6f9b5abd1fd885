/** Linear and decade-log axis scales with tick generation. */

export interface Scale {
  toPx(value: number): number;
  ticks(): number[];
  domain: [number, number];
}

export function linearScale(lo: number, hi: number, pxLo: number, pxHi: number): Scale {
  if (hi === lo) {
    lo -= 1;
    hi += 1;
  }
  const span = hi - lo;
  const step = niceStep(span);
  const first = Math.ceil(lo / step) * step;
  const ticks: number[] = [];
  for (let v = first; v <= hi + 1e-9; v += step) ticks.push(roundTo(v, step));
  return {
    toPx: (v) => pxLo + ((v - lo) / span) * (pxHi - pxLo),
    ticks: () => ticks,
    domain: [lo, hi],
  };
}

export function logScale(lo: number, hi: number, pxLo: number, pxHi: number): Scale {
  if (!(lo > 0) || !(hi > 0)) {
    throw new Error("log scale needs positive bounds");
  }
  let llo = Math.log10(lo);
  let lhi = Math.log10(hi);
  if (lhi - llo < 1e-9) {
    llo -= 0.5;
    lhi += 0.5;
  }
  const ticks: number[] = [];
  for (let d = Math.ceil(llo - 1e-9); d <= Math.floor(lhi + 1e-9); d++) {
    ticks.push(Math.pow(10, d));
  }
  if (ticks.length < 2) {
    // span under a decade: fall back to the 1-2-5 series
    ticks.length = 0;
    for (let d = Math.floor(llo) - 1; d <= Math.ceil(lhi); d++) {
      for (const m of [1, 2, 5]) {
        const v = m * Math.pow(10, d);
        const lv = Math.log10(v);
        if (lv >= llo - 1e-9 && lv <= lhi + 1e-9) ticks.push(v);
      }
    }
  }
  return {
    toPx: (v) => pxLo + ((Math.log10(v) - llo) / (lhi - llo)) * (pxHi - pxLo),
    ticks: () => ticks,
    domain: [lo, hi],
  };
}

function niceStep(span: number): number {
  const raw = span / 6;
  const mag = Math.pow(10, Math.floor(Math.log10(raw)));
  for (const m of [1, 2, 5, 10]) {
    if (raw <= m * mag) return m * mag;
  }
  return 10 * mag;
}

function roundTo(v: number, step: number): number {
  const digits = Math.max(0, -Math.floor(Math.log10(step)) + 1);
  return Number(v.toFixed(digits));
}

export function formatTick(v: number, log: boolean): string {
  if (log) {
    return v.toExponential(0).replace("e+", "e");
  }
  return String(v);
}
