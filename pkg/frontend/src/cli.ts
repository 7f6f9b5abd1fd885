/**
 * Figure renderer.
 *
 *   node dist/cli.js render spec.json [more-specs...]
 *   node dist/cli.js standard --superset a.csv --sweep b.csv \
 *        --overload c.csv --outdir figures
 *
 * A spec file is a JSON FigureSpec: {"inputs": [...], "metric": "ser",
 * "lambda": 0.1, "logY": true, "out": "fig.svg", "title": "...",
 * "styles": {"tl-mpa": {"color": "#d62728", "dash": "4 2"}}}.
 */

import { mkdirSync, readFileSync, writeFileSync } from "node:fs";
import { dirname } from "node:path";

import { parseSweepCsv } from "./csv.js";
import { FigureSpec, figureFromRows } from "./figure.js";
import { standardFigures } from "./standard.js";

export function loadSpec(path: string): FigureSpec {
  const raw = JSON.parse(readFileSync(path, "utf-8"));
  for (const key of ["inputs", "metric", "lambda", "out"]) {
    if (!(key in raw)) {
      throw new Error(`${path}: spec is missing "${key}"`);
    }
  }
  if (!["pm", "pf", "ser"].includes(raw.metric)) {
    throw new Error(`${path}: metric must be pm, pf, or ser`);
  }
  return raw as FigureSpec;
}

export function renderSpec(spec: FigureSpec): string {
  const groups = spec.inputs.map((p) => parseSweepCsv(readFileSync(p, "utf-8"), p));
  const svg = figureFromRows(groups, spec);
  mkdirSync(dirname(spec.out), { recursive: true });
  writeFileSync(spec.out, svg);
  return spec.out;
}

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 2) {
    if (!argv[i].startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`expected --flag value pairs, got ${argv[i]}`);
    }
    flags.set(argv[i].slice(2), argv[i + 1]);
  }
  return flags;
}

export function main(argv: string[]): number {
  try {
    const [command, ...rest] = argv;
    if (command === "render") {
      if (rest.length === 0) throw new Error("render needs at least one spec file");
      for (const path of rest) {
        console.error(`wrote ${renderSpec(loadSpec(path))}`);
      }
      return 0;
    }
    if (command === "standard") {
      const flags = parseFlags(rest);
      for (const key of ["superset", "sweep", "overload", "outdir"]) {
        if (!flags.has(key)) throw new Error(`standard needs --${key}`);
      }
      const specs = standardFigures({
        superset: flags.get("superset")!,
        sweep: flags.get("sweep")!,
        overload: flags.get("overload")!,
        outDir: flags.get("outdir")!,
      });
      for (const spec of specs) {
        console.error(`wrote ${renderSpec(spec)}`);
      }
      return 0;
    }
    throw new Error(`unknown command ${command ?? "(none)"}; use render or standard`);
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

if (process.argv[1] && process.argv[1].endsWith("cli.js")) {
  process.exit(main(process.argv.slice(2)));
}
