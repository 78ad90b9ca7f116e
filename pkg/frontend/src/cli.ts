/**
 * Standalone renderer: sweep CSV + figure-spec JSON in, SVG out.
 *
 *   node --loader ts-node/esm src/cli.ts --csv results.csv \
 *        --spec figure.json --out figure.svg
 *
 * Nothing is written when the CSV fails schema validation or is empty.
 */

import { readFileSync, writeFileSync } from "node:fs";
import process from "node:process";

import { parseCsv, SchemaMismatchError } from "./csv.js";
import { FigureError, FigureSpec } from "./figure.js";
import { renderFigure } from "./svg.js";

function parseArgs(argv: string[]): Record<string, string> {
  const out: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    if (!key.startsWith("--") || i + 1 >= argv.length) {
      throw new Error(`malformed arguments near ${key}`);
    }
    out[key.slice(2)] = argv[i + 1];
  }
  return out;
}

export function main(argv: string[]): number {
  let args: Record<string, string>;
  try {
    args = parseArgs(argv);
  } catch (err) {
    console.error(String(err));
    return 2;
  }
  for (const required of ["csv", "spec", "out"]) {
    if (!(required in args)) {
      console.error(`missing --${required}`);
      return 2;
    }
  }
  try {
    const rows = parseCsv(readFileSync(args.csv, "utf8"));
    const spec = JSON.parse(readFileSync(args.spec, "utf8")) as FigureSpec;
    const svg = renderFigure(spec, rows);
    writeFileSync(args.out, svg);
    console.log(`wrote ${args.out}`);
    return 0;
  } catch (err) {
    if (err instanceof SchemaMismatchError || err instanceof FigureError) {
      console.error(err.message);
      return 1;
    }
    console.error(String(err));
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split("/").pop() ?? "");
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
