import { mkdirSync, writeFileSync } from "node:fs";
import { join } from "node:path";

export const TRACE_COLUMNS = [
  "t", "energy", "area_1", "area_2", "area_3", "len_1", "len_2", "len_3",
  "G2", "G3", "G_third", "sum_gbH", "picard_iters", "dissipation_defect",
];

export interface RunOptions {
  rows?: number;
  snapshotEvery?: number;
  bumpAt?: number; // inject an energy rise at this row
}

/** Tiny synthetic run directory in the simulate on-disk layout. */
export function writeRun(dir: string, opts: RunOptions = {}): void {
  const rows = opts.rows ?? 21;
  const every = opts.snapshotEvery ?? 5;
  mkdirSync(join(dir, "snapshots"), { recursive: true });

  const lines = [TRACE_COLUMNS.join(",")];
  for (let i = 0; i < rows; i++) {
    const t = 0.01 * i;
    let energy = 10 - 0.1 * i;
    if (opts.bumpAt !== undefined && i >= opts.bumpAt) energy += 0.5;
    const cells = [
      t, energy, 3 - t, 3 - t, 1, 3 - t, 3 - t, 1,
      1e-6 * (1 + (i % 3)), 2e-6, 3e-6, 1e-9, 2, 1e-4,
    ];
    lines.push(cells.map((v) => String(v)).join(","));
  }
  writeFileSync(join(dir, "trace.csv"), lines.join("\n") + "\n");

  for (let i = 0; i < rows; i += every) {
    const shrink = 1 - 0.03 * i;
    const snap = ["chart_id,node,x,px,py,rho"];
    for (let chart = 0; chart < 3; chart++) {
      for (let node = 0; node < 5; node++) {
        const x = node / 4;
        const px = shrink * (chart - 1 + x);
        const py = shrink * (chart === 1 ? 0.5 - x : Math.sin(Math.PI * x));
        snap.push(`${chart},${node},${x},${px},${py},0.0`);
      }
    }
    const name = String(i).padStart(6, "0") + ".csv";
    writeFileSync(join(dir, "snapshots", name), snap.join("\n") + "\n");
  }

  writeFileSync(
    join(dir, "meta.json"),
    JSON.stringify({ records: rows, snapshot_every: every, trace_columns: TRACE_COLUMNS }) + "\n",
  );
}
