import { describe, expect, it } from "vitest";

import { decodePng, encodePng } from "../src/png.js";
import { Raster } from "../src/raster.js";

function sample(): Raster {
  const r = new Raster(64, 48);
  r.line(0, 0, 63, 47, [255, 0, 0]);
  r.disc(30, 20, 5, [0, 128, 0]);
  r.text(2, 36, "T = 1.5E-3", [0, 0, 255]);
  r.frame(0, 0, 63, 47, [0, 0, 0]);
  return r;
}

describe("png", () => {
  it("round trips RGB8 pixels exactly", () => {
    const r = sample();
    const decoded = decodePng(encodePng(r));
    expect(decoded.width).toBe(64);
    expect(decoded.height).toBe(48);
    expect(Buffer.from(decoded.data).equals(Buffer.from(r.data))).toBe(true);
  });

  it("is byte deterministic", () => {
    const a = encodePng(sample());
    const b = encodePng(sample());
    expect(a.equals(b)).toBe(true);
  });

  it("rejects corrupted chunks", () => {
    const buf = encodePng(sample());
    buf[40] ^= 0xff; // somewhere inside IDAT
    expect(() => decodePng(buf)).toThrow(/crc/);
  });
});
