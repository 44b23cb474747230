import { existsSync, readFileSync, readdirSync } from "node:fs";
import { join } from "node:path";

import { Table, column, parseCsv } from "./csv.js";

export interface Snapshot {
  index: number; // recorded-row number, ties the snapshot to its trace row
  path: string;
  table: Table;
}

export interface RunArtifacts {
  dir: string;
  trace: Table;
  snapshots: Snapshot[];
  meta: Record<string, unknown> | null;
}

const SNAPSHOT_HEAD = ["chart_id", "node", "x"];

export function loadRun(dir: string): RunArtifacts {
  const tracePath = join(dir, "trace.csv");
  if (!existsSync(tracePath)) {
    throw new Error(`${dir}: no trace.csv (not a run directory?)`);
  }
  const trace = parseCsv(tracePath);
  for (const name of ["t", "energy"]) column(trace, name);

  const snapshots: Snapshot[] = [];
  const snapDir = join(dir, "snapshots");
  if (existsSync(snapDir)) {
    for (const name of readdirSync(snapDir)) {
      const m = name.match(/^(\d{6})\.csv$/);
      if (!m) continue;
      const table = parseCsv(join(snapDir, name));
      const head = table.columns.slice(0, 3);
      if (head.join(",") !== SNAPSHOT_HEAD.join(",")) {
        throw new Error(`${name}: unexpected snapshot columns ${table.columns.join(",")}`);
      }
      const index = parseInt(m[1], 10);
      if (index >= trace.rows.length) {
        throw new Error(`${name}: snapshot index ${index} has no trace row`);
      }
      snapshots.push({ index, path: join(snapDir, name), table });
    }
    snapshots.sort((a, b) => a.index - b.index);
  }

  let meta: Record<string, unknown> | null = null;
  const metaPath = join(dir, "meta.json");
  if (existsSync(metaPath)) {
    meta = JSON.parse(readFileSync(metaPath, "utf8")) as Record<string, unknown>;
  }
  return { dir, trace, snapshots, meta };
}

export function snapshotTimes(run: RunArtifacts): number[] {
  const t = column(run.trace, "t");
  return run.snapshots.map((s) => t[s.index]);
}
