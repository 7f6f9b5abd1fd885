/**
 * Figure assembly: sweep rows -> per-detector series -> SVG string.
 *
 * Output is deterministic: detectors render in sorted order, numbers use
 * fixed formatting, and nothing depends on wall time, so the same CSVs
 * always produce byte-identical files.
 */

import { Metric, SweepRow, mergeRows } from "./csv.js";
import { Scale, formatTick, linearScale, logScale } from "./scales.js";

export interface LineStyle {
  color?: string;
  dash?: string;
}

export interface FigureSpec {
  inputs: string[];
  metric: Metric;
  lambda: number;
  out: string;
  logY?: boolean;
  title?: string;
  styles?: Record<string, LineStyle>;
}

export interface Series {
  detector: string;
  points: Array<{ snr: number; value: number }>;
}

const WIDTH = 640;
const HEIGHT = 440;
const MARGIN = { left: 70, right: 170, top: 40, bottom: 50 };

const PALETTE = [
  "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e",
  "#8c564b", "#17becf", "#7f7f7f",
];
const MARKERS = ["circle", "square", "diamond", "triangle"] as const;

export function collectSeries(rows: SweepRow[], spec: FigureSpec): Series[] {
  const filtered = rows.filter((r) => Math.abs(r.lambda - spec.lambda) < 1e-12);
  const detectors = [...new Set(filtered.map((r) => r.detector))].sort();
  const out: Series[] = [];
  for (const det of detectors) {
    const pts = filtered
      .filter((r) => r.detector === det)
      .map((r) => ({ snr: r.snrDb, value: r[spec.metric] }))
      .filter((p): p is { snr: number; value: number } => p.value !== null)
      .filter((p) => !spec.logY || p.value > 0) // zeros cannot sit on a log axis
      .sort((a, b) => a.snr - b.snr);
    if (pts.length > 0) {
      out.push({ detector: det, points: pts });
    }
  }
  return out;
}

function fmt(v: number): string {
  return v.toFixed(2);
}

function marker(kind: (typeof MARKERS)[number], x: number, y: number, color: string): string {
  const r = 3.5;
  switch (kind) {
    case "circle":
      return `<circle cx="${fmt(x)}" cy="${fmt(y)}" r="${r}" fill="${color}"/>`;
    case "square":
      return `<rect x="${fmt(x - r)}" y="${fmt(y - r)}" width="${2 * r}" height="${2 * r}" fill="${color}"/>`;
    case "diamond":
      return `<path d="M${fmt(x)} ${fmt(y - r - 1)} L${fmt(x + r + 1)} ${fmt(y)} L${fmt(x)} ${fmt(y + r + 1)} L${fmt(x - r - 1)} ${fmt(y)} Z" fill="${color}"/>`;
    case "triangle":
      return `<path d="M${fmt(x)} ${fmt(y - r - 1)} L${fmt(x + r + 1)} ${fmt(y + r)} L${fmt(x - r - 1)} ${fmt(y + r)} Z" fill="${color}"/>`;
  }
}

export function renderSvg(series: Series[], spec: FigureSpec): string {
  if (series.length === 0) {
    throw new Error(`no plottable points for metric ${spec.metric} at lambda ${spec.lambda}`);
  }
  const logY = spec.logY !== false;
  const xs = series.flatMap((s) => s.points.map((p) => p.snr));
  const ys = series.flatMap((s) => s.points.map((p) => p.value));
  const x = linearScale(Math.min(...xs), Math.max(...xs), MARGIN.left, WIDTH - MARGIN.right);
  const y: Scale = logY
    ? logScale(Math.min(...ys), Math.max(...ys), HEIGHT - MARGIN.bottom, MARGIN.top)
    : linearScale(0, Math.max(...ys), HEIGHT - MARGIN.bottom, MARGIN.top);

  const parts: string[] = [];
  parts.push(
    `<svg xmlns="http://www.w3.org/2000/svg" width="${WIDTH}" height="${HEIGHT}" viewBox="0 0 ${WIDTH} ${HEIGHT}" font-family="sans-serif" font-size="12">`,
  );
  parts.push(`<rect width="${WIDTH}" height="${HEIGHT}" fill="white"/>`);
  if (spec.title) {
    parts.push(
      `<text x="${WIDTH / 2}" y="22" text-anchor="middle" font-size="14">${escapeXml(spec.title)}</text>`,
    );
  }

  // axes + grid
  const x0 = MARGIN.left;
  const x1 = WIDTH - MARGIN.right;
  const y0 = HEIGHT - MARGIN.bottom;
  const y1 = MARGIN.top;
  for (const t of x.ticks()) {
    const px = x.toPx(t);
    parts.push(`<line x1="${fmt(px)}" y1="${y0}" x2="${fmt(px)}" y2="${y1}" stroke="#eeeeee"/>`);
    parts.push(
      `<text x="${fmt(px)}" y="${y0 + 18}" text-anchor="middle">${formatTick(t, false)}</text>`,
    );
  }
  for (const t of y.ticks()) {
    const py = y.toPx(t);
    parts.push(`<line x1="${x0}" y1="${fmt(py)}" x2="${x1}" y2="${fmt(py)}" stroke="#eeeeee"/>`);
    parts.push(
      `<text x="${x0 - 6}" y="${fmt(py + 4)}" text-anchor="end">${formatTick(t, logY)}</text>`,
    );
  }
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x1}" y2="${y0}" stroke="black"/>`);
  parts.push(`<line x1="${x0}" y1="${y0}" x2="${x0}" y2="${y1}" stroke="black"/>`);
  parts.push(
    `<text x="${(x0 + x1) / 2}" y="${HEIGHT - 12}" text-anchor="middle">SNR (dB)</text>`,
  );
  parts.push(
    `<text x="20" y="${(y0 + y1) / 2}" text-anchor="middle" transform="rotate(-90 20 ${(y0 + y1) / 2})">${spec.metric}</text>`,
  );

  // one line per detector, legend labels matching detector tags
  series.forEach((s, i) => {
    const style = spec.styles?.[s.detector] ?? {};
    const color = style.color ?? PALETTE[i % PALETTE.length];
    const dash = style.dash ? ` stroke-dasharray="${style.dash}"` : "";
    const mk = MARKERS[i % MARKERS.length];
    const path = s.points
      .map((p) => `${fmt(x.toPx(p.snr))},${fmt(y.toPx(p.value))}`)
      .join(" ");
    parts.push(
      `<polyline points="${path}" fill="none" stroke="${color}" stroke-width="1.8"${dash}/>`,
    );
    for (const p of s.points) {
      parts.push(marker(mk, x.toPx(p.snr), y.toPx(p.value), color));
    }
    const ly = MARGIN.top + 16 * i;
    parts.push(
      `<line x1="${x1 + 12}" y1="${ly}" x2="${x1 + 40}" y2="${ly}" stroke="${color}" stroke-width="1.8"${dash}/>`,
    );
    parts.push(marker(mk, x1 + 26, ly, color));
    parts.push(`<text x="${x1 + 46}" y="${ly + 4}">${escapeXml(s.detector)}</text>`);
  });

  parts.push("</svg>");
  return parts.join("\n") + "\n";
}

function escapeXml(text: string): string {
  return text
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;");
}

export function figureFromRows(groups: SweepRow[][], spec: FigureSpec): string {
  return renderSvg(collectSeries(mergeRows(groups), spec), spec);
}
