/**
 * Reader for the sweep CSV contract.
 *
 * Header (exact): detector,lambda,snr_db,trials,pm,pf,ser,miss_count,
 * false_count,symbol_error_count,seed.  Metric fields may be empty
 * (absent, e.g. no decoding stage ran); they parse to null and must never
 * be treated as zeros.
 */

export const CSV_HEADER =
  "detector,lambda,snr_db,trials,pm,pf,ser,miss_count,false_count,symbol_error_count,seed";

export interface SweepRow {
  detector: string;
  lambda: number;
  snrDb: number;
  trials: number;
  pm: number | null;
  pf: number | null;
  ser: number | null;
  missCount: number;
  falseCount: number;
  symbolErrorCount: number;
  seed: number;
}

export type Metric = "pm" | "pf" | "ser";

export class CsvError extends Error {
  constructor(public file: string, public line: number, message: string) {
    super(`${file}:${line}: ${message}`);
  }
}

function num(file: string, line: number, field: string, text: string): number {
  const v = Number(text);
  if (text.trim() === "" || !Number.isFinite(v)) {
    throw new CsvError(file, line, `field ${field}: expected a number, got ${JSON.stringify(text)}`);
  }
  return v;
}

function metric(file: string, line: number, field: string, text: string): number | null {
  if (text.trim() === "") return null;
  return num(file, line, field, text);
}

export function parseSweepCsv(text: string, file = "<string>"): SweepRow[] {
  const lines = text.split(/\r?\n/);
  if (lines.length === 0 || lines[0].trim() !== CSV_HEADER) {
    throw new CsvError(file, 1, `unexpected header: ${JSON.stringify(lines[0] ?? "")}`);
  }
  const rows: SweepRow[] = [];
  for (let i = 1; i < lines.length; i++) {
    const line = lines[i];
    if (line.trim() === "") continue;
    const parts = line.split(",");
    if (parts.length !== 11) {
      throw new CsvError(file, i + 1, `expected 11 fields, got ${parts.length}`);
    }
    rows.push({
      detector: parts[0],
      lambda: num(file, i + 1, "lambda", parts[1]),
      snrDb: num(file, i + 1, "snr_db", parts[2]),
      trials: num(file, i + 1, "trials", parts[3]),
      pm: metric(file, i + 1, "pm", parts[4]),
      pf: metric(file, i + 1, "pf", parts[5]),
      ser: metric(file, i + 1, "ser", parts[6]),
      missCount: num(file, i + 1, "miss_count", parts[7]),
      falseCount: num(file, i + 1, "false_count", parts[8]),
      symbolErrorCount: num(file, i + 1, "symbol_error_count", parts[9]),
      seed: num(file, i + 1, "seed", parts[10]),
    });
  }
  if (rows.length === 0) {
    throw new CsvError(file, 1, "no data rows");
  }
  return rows;
}

/**
 * Merge rows from several files by (detector, lambda, snr) key.
 *
 * Duplicate keys must agree on every metric (identical configs written
 * twice collapse to one point); disagreeing duplicates are an error, so
 * the plotting layer never recomputes or averages metrics.
 */
export function mergeRows(groups: SweepRow[][]): SweepRow[] {
  const byKey = new Map<string, SweepRow>();
  for (const rows of groups) {
    for (const row of rows) {
      const key = `${row.detector}|${row.lambda}|${row.snrDb}`;
      const seen = byKey.get(key);
      if (seen === undefined) {
        byKey.set(key, row);
      } else if (seen.pm !== row.pm || seen.pf !== row.pf || seen.ser !== row.ser) {
        throw new Error(
          `conflicting rows for detector=${row.detector} lambda=${row.lambda} snr=${row.snrDb}`,
        );
      }
    }
  }
  return [...byKey.values()];
}
