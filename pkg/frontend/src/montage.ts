import { column, hasColumn } from "./csv.js";
import { formatTick } from "./plot.js";
import { BLACK, RGB, Raster, textWidth } from "./raster.js";
import { RunArtifacts, Snapshot, snapshotTimes } from "./run.js";

const CHART_COLORS: RGB[] = [
  [31, 119, 180],
  [100, 100, 100],
  [214, 39, 40],
];

const PANEL = 280;
const GAP = 10;
const LABEL = 18;

export function pickFrames(run: RunArtifacts, k: number): Snapshot[] {
  const n = run.snapshots.length;
  if (n < k) throw new Error(`need at least ${k} snapshots, have ${n}`);
  const times = snapshotTimes(run);
  const used = new Set<number>();
  for (let i = 0; i < k; i++) {
    const target = times[0] + ((times[n - 1] - times[0]) * i) / Math.max(1, k - 1);
    let best = -1;
    let dist = Infinity;
    for (let j = 0; j < n; j++) {
      if (used.has(j)) continue;
      const d = Math.abs(times[j] - target);
      if (d < dist) {
        dist = d;
        best = j;
      }
    }
    used.add(best);
  }
  return [...used].sort((a, b) => a - b).map((j) => run.snapshots[j]);
}

/** Node positions per chart, in file order (charts are written node-ordered).
 * 3d snapshots are projected along the last axis. */
function chartPaths(snap: Snapshot): Map<number, Array<[number, number]>> {
  const id = column(snap.table, "chart_id");
  const xs = column(snap.table, "px");
  const ys = column(snap.table, "py");
  const out = new Map<number, Array<[number, number]>>();
  for (let i = 0; i < id.length; i++) {
    let path = out.get(id[i]);
    if (!path) {
      path = [];
      out.set(id[i], path);
    }
    path.push([xs[i], ys[i]]);
  }
  return out;
}

export function renderMontage(run: RunArtifacts, k: number): Raster {
  const frames = pickFrames(run, k);
  for (const f of frames) {
    if (!hasColumn(f.table, "px") || !hasColumn(f.table, "py")) {
      throw new Error(`${f.path}: snapshot has no px/py columns`);
    }
  }
  const t = column(run.trace, "t");

  let lo = [Infinity, Infinity];
  let hi = [-Infinity, -Infinity];
  const paths = frames.map((f) => chartPaths(f));
  for (const byChart of paths) {
    for (const path of byChart.values()) {
      for (const [x, y] of path) {
        lo = [Math.min(lo[0], x), Math.min(lo[1], y)];
        hi = [Math.max(hi[0], x), Math.max(hi[1], y)];
      }
    }
  }
  const span = Math.max(hi[0] - lo[0], hi[1] - lo[1], 1e-12);
  const pad = 0.08 * span;
  const cx = (lo[0] + hi[0]) / 2;
  const cy = (lo[1] + hi[1]) / 2;
  const half = span / 2 + pad; // equal axes on every panel

  const cols = Math.min(k, 3);
  const nrows = Math.ceil(k / cols);
  const width = cols * PANEL + (cols + 1) * GAP;
  const height = nrows * (PANEL + LABEL) + (nrows + 1) * GAP;
  const r = new Raster(width, height);

  frames.forEach((frame, fi) => {
    const gx = GAP + (fi % cols) * (PANEL + GAP);
    const gy = GAP + Math.floor(fi / cols) * (PANEL + LABEL + GAP);
    const px = (x: number) => gx + ((x - (cx - half)) / (2 * half)) * PANEL;
    const py = (y: number) => gy + PANEL - ((y - (cy - half)) / (2 * half)) * PANEL;
    r.frame(gx, gy, gx + PANEL, gy + PANEL, BLACK);
    const byChart = paths[fi];
    for (const [chartId, path] of byChart) {
      const color = CHART_COLORS[chartId % CHART_COLORS.length];
      r.polyline(
        path.map(([x, y]) => [px(x), py(y)] as [number, number]),
        color,
      );
    }
    for (const path of byChart.values()) {
      // chart ends are the junction nodes (they coincide across charts)
      for (const [x, y] of [path[0], path[path.length - 1]]) {
        r.disc(px(x), py(y), 3, BLACK);
      }
    }
    const label = `T = ${formatTick(t[frame.index])}`;
    r.text(gx + (PANEL - textWidth(label)) / 2, gy + PANEL + 6, label, BLACK);
  });
  return r;
}
