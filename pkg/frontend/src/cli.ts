#!/usr/bin/env node
import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";
import { pathToFileURL } from "node:url";
import { parseArgs } from "node:util";

import { renderMontage } from "./montage.js";
import { encodePng } from "./png.js";
import { loadRun } from "./run.js";
import { renderSeries } from "./series.js";

const USAGE =
  "usage: plotkit montage|series <run_dir> --out <dir> [--frames k] [--assert-monotone]";

export function main(argv: string[]): number {
  let positionals: string[];
  let values: { out?: string; frames?: string; "assert-monotone"?: boolean };
  try {
    ({ positionals, values } = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        out: { type: "string" },
        frames: { type: "string", default: "6" },
        "assert-monotone": { type: "boolean", default: false },
      },
    }));
  } catch (e) {
    console.error(`plotkit: ${(e as Error).message}\n${USAGE}`);
    return 1;
  }
  const [cmd, runDir] = positionals;
  if (!cmd || !runDir || !values.out || positionals.length !== 2) {
    console.error(USAGE);
    return 1;
  }
  try {
    const run = loadRun(runDir);
    mkdirSync(values.out, { recursive: true });
    if (cmd === "montage") {
      const k = Number(values.frames);
      if (!Number.isInteger(k) || k < 1) {
        throw new Error(`--frames must be a positive integer, got ${values.frames}`);
      }
      writeFileSync(join(values.out, "montage.png"), encodePng(renderMontage(run, k)));
    } else if (cmd === "series") {
      const res = renderSeries(run);
      writeFileSync(join(values.out, "energy.png"), encodePng(res.energy));
      writeFileSync(join(values.out, "angles.png"), encodePng(res.angles));
      if (values["assert-monotone"] && !res.monotone) {
        console.error(`plotkit: energy is not monotone, worst rise ${res.maxRise}`);
        return 1;
      }
    } else {
      console.error(USAGE);
      return 1;
    }
  } catch (e) {
    console.error(`plotkit: ${(e as Error).message}`);
    return 1;
  }
  return 0;
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exitCode = main(process.argv.slice(2));
}
