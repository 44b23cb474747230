import { column } from "./csv.js";
import { SeriesSpec, linePlot } from "./plot.js";
import { RGB, Raster } from "./raster.js";
import { RunArtifacts } from "./run.js";

const WIDTH = 720;
const HEIGHT = 440;

const ANGLE_COLORS: Array<[string, RGB]> = [
  ["G2", [31, 119, 180]],
  ["G3", [44, 160, 44]],
  ["G_THIRD", [214, 39, 40]],
];

export interface SeriesResult {
  energy: Raster;
  angles: Raster;
  monotone: boolean;
  maxRise: number;
}

export function renderSeries(run: RunArtifacts): SeriesResult {
  const t = column(run.trace, "t");
  const energy = column(run.trace, "energy");

  let maxRise = -Infinity;
  let scale = 1;
  for (const e of energy) scale = Math.max(scale, Math.abs(e));
  for (let i = 1; i < energy.length; i++) {
    maxRise = Math.max(maxRise, energy[i] - energy[i - 1]);
  }
  const monotone = maxRise <= 1e-12 * scale;

  const energyPlot = linePlot(WIDTH, HEIGHT, "ENERGY", [
    { label: "ENERGY", color: [31, 119, 180], x: t, y: energy },
  ]);

  const angleSeries: SeriesSpec[] = [
    { label: "G2", color: ANGLE_COLORS[0][1], x: t, y: column(run.trace, "G2") },
    { label: "G3", color: ANGLE_COLORS[1][1], x: t, y: column(run.trace, "G3") },
    { label: "G THIRD", color: ANGLE_COLORS[2][1], x: t, y: column(run.trace, "G_third") },
  ];
  const anglePlot = linePlot(WIDTH, HEIGHT, "ANGLE DEFECTS", angleSeries);

  return { energy: energyPlot, angles: anglePlot, monotone, maxRise };
}
