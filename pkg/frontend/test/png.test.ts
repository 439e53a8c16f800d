/* PNG decoder tests against ground truth recorded by the Python toolkit
 * (expected_pixels.json stores per-pixel samples and the integer sum of all
 * samples for a handful of fixture images, straight from the reference
 * reader). */

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { decodePng } from "../src/png.js";
import { decodeFixturePng, fixturePath } from "./helpers.js";

interface ExpectedImage {
  path: string[];
  width: number;
  height: number;
  channels: number;
  bit_depth: number;
  samples: [number, number, number[]][];
  sample_sum: number;
}

const EXPECTED: ExpectedImage[] = JSON.parse(
  readFileSync(fixturePath("expected_pixels.json"), "utf8"),
);

describe("decodePng", () => {
  it("covers both bit depths in the recorded ground truth", () => {
    const depths = new Set(EXPECTED.map((e) => e.bit_depth));
    expect(depths).toEqual(new Set([8, 16]));
  });

  it("matches the reference decoder on every recorded image", async () => {
    for (const entry of EXPECTED) {
      const label = entry.path.join("/");
      const png = await decodeFixturePng(...entry.path);
      expect(png.width, label).toBe(entry.width);
      expect(png.height, label).toBe(entry.height);
      expect(png.channels, label).toBe(entry.channels);
      expect(png.bitDepth, label).toBe(entry.bit_depth);
      for (const [x, y, values] of entry.samples) {
        for (let c = 0; c < entry.channels; c++) {
          const got = png.samples[(y * entry.width + x) * entry.channels + c];
          expect(got, `${label} at (${x}, ${y}) channel ${c}`).toBe(values[c]);
        }
      }
      let sum = 0;
      for (const v of png.samples) {
        sum += v;
      }
      expect(sum, `${label} sample sum`).toBe(entry.sample_sum);
    }
  });

  it("rejects non-PNG bytes", async () => {
    await expect(decodePng(new Uint8Array([1, 2, 3, 4]))).rejects.toThrow("bad signature");
  });

  it("rejects truncated files", async () => {
    const whole = await decodeFixturePng("disks", "color.png");
    expect(whole.width).toBe(128);
    const bytes = readFileSync(fixturePath("disks", "color.png"));
    await expect(decodePng(bytes.subarray(0, 64))).rejects.toThrow(/truncated|missing/);
  });
});
