import { BLACK, GRAY, RGB, Raster, textWidth } from "./raster.js";

export interface SeriesSpec {
  label: string;
  color: RGB;
  x: number[];
  y: number[];
}

export function formatTick(v: number): string {
  if (v === 0) return "0";
  const a = Math.abs(v);
  if (a >= 1e4 || a < 1e-2) return v.toExponential(1).toUpperCase();
  return Number(v.toPrecision(3)).toString();
}

function range(values: number[]): [number, number] {
  let lo = Infinity;
  let hi = -Infinity;
  for (const v of values) {
    if (v < lo) lo = v;
    if (v > hi) hi = v;
  }
  if (!(hi > lo)) {
    const pad = Math.max(1e-12, Math.abs(hi) * 1e-3);
    return [lo - pad, hi + pad];
  }
  const pad = 0.05 * (hi - lo);
  return [lo - pad, hi + pad];
}

const MARGIN = { left: 74, right: 16, top: 28, bottom: 34 };

export function linePlot(
  width: number,
  height: number,
  title: string,
  series: SeriesSpec[],
): Raster {
  const r = new Raster(width, height);
  const [xlo, xhi] = range(series.flatMap((s) => s.x));
  const [ylo, yhi] = range(series.flatMap((s) => s.y));
  const x0 = MARGIN.left;
  const y0 = MARGIN.top;
  const x1 = width - MARGIN.right;
  const y1 = height - MARGIN.bottom;
  const px = (x: number) => x0 + ((x - xlo) / (xhi - xlo)) * (x1 - x0);
  const py = (y: number) => y1 - ((y - ylo) / (yhi - ylo)) * (y1 - y0);

  for (let i = 0; i <= 4; i++) {
    const xv = xlo + (i * (xhi - xlo)) / 4;
    const yv = ylo + (i * (yhi - ylo)) / 4;
    const gx = Math.round(px(xv));
    const gy = Math.round(py(yv));
    r.line(gx, y0, gx, y1, GRAY);
    r.line(x0, gy, x1, gy, GRAY);
    const xs = formatTick(xv);
    r.text(gx - textWidth(xs) / 2, y1 + 6, xs, BLACK);
    const ys = formatTick(yv);
    r.text(x0 - 6 - textWidth(ys), gy - 3, ys, BLACK);
  }
  for (const s of series) {
    r.polyline(
      s.x.map((x, i) => [px(x), py(s.y[i])] as [number, number]),
      s.color,
    );
  }
  r.frame(x0, y0, x1, y1, BLACK);
  r.text((width - textWidth(title, 2)) / 2, 6, title, BLACK, 2);
  if (series.length > 1) {
    let lx = x1 - 10;
    for (const s of [...series].reverse()) {
      lx -= textWidth(s.label) + 22;
      r.disc(lx + 6, y0 + 12, 3, s.color);
      r.text(lx + 14, y0 + 9, s.label, BLACK);
    }
  }
  return r;
}
