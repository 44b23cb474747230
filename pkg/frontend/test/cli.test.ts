import { existsSync, mkdtempSync, readFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import { main } from "../src/cli.js";
import { writeRun } from "./fixture.js";

function tmp(): string {
  return mkdtempSync(join(tmpdir(), "plotkit-"));
}

describe("cli", () => {
  it("writes montage and series figures with exit 0", () => {
    const run = tmp();
    writeRun(run);
    const out = tmp();
    expect(main(["montage", run, "--out", out, "--frames", "4"])).toBe(0);
    expect(main(["series", run, "--out", out, "--assert-monotone"])).toBe(0);
    for (const name of ["montage.png", "energy.png", "angles.png"]) {
      expect(existsSync(join(out, name))).toBe(true);
    }
  });

  it("is byte deterministic across invocations", () => {
    const run = tmp();
    writeRun(run);
    const a = tmp();
    const b = tmp();
    for (const out of [a, b]) {
      expect(main(["montage", run, "--out", out, "--frames", "4"])).toBe(0);
      expect(main(["series", run, "--out", out])).toBe(0);
    }
    for (const name of ["montage.png", "energy.png", "angles.png"]) {
      expect(readFileSync(join(a, name)).equals(readFileSync(join(b, name)))).toBe(true);
    }
  });

  it("exits nonzero on a bumped trace but still writes the figures", () => {
    const run = tmp();
    writeRun(run, { bumpAt: 10 });
    const out = tmp();
    expect(main(["series", run, "--out", out, "--assert-monotone"])).toBe(1);
    expect(existsSync(join(out, "energy.png"))).toBe(true);
    expect(existsSync(join(out, "angles.png"))).toBe(true);
    // without the flag the bump is only plotted, not enforced
    expect(main(["series", run, "--out", out])).toBe(0);
  });

  it("exits nonzero on bad usage and bad inputs", () => {
    const run = tmp();
    writeRun(run);
    const out = tmp();
    expect(main(["montage", run])).toBe(1); // no --out
    expect(main(["resample", run, "--out", out])).toBe(1); // unknown command
    expect(main(["montage", tmp(), "--out", out])).toBe(1); // empty run dir
    expect(main(["montage", run, "--out", out, "--frames", "9"])).toBe(1); // too few snapshots
    expect(main(["montage", run, "--out", out, "--frames", "zero"])).toBe(1);
    expect(main(["montage", run, "extra", "--out", out])).toBe(1);
  });
});
