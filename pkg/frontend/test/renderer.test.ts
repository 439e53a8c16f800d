/* Renderer tests.
 *
 * The load-bearing ones compare the CPU reference renderer against frames
 * rendered by the toolkit's CLI from the same container: canonical pose must
 * agree within 40 dB PSNR and ±10 degrees of yaw within 35 dB. The remaining
 * tests pin the over-operator algebra (back-to-front source-over versus
 * front-to-back) on hand-computed values and the plane-slider semantics. */

import { describe, expect, it } from "vitest";

import { loadContainer } from "../src/container.js";
import {
  compositeBackToFront,
  compositeFrontToBack,
  depthDisplay,
  planeColor,
  psnr,
  renderView,
  type WarpedPlane,
} from "../src/renderer.js";
import { createState, defaultState, subsampleIndices } from "../src/state.js";
import type { MpiContainer } from "../src/types.js";
import { directoryReader, fixtureImage, fixturePath } from "./helpers.js";

const disks: Promise<{ mpi: MpiContainer }> = loadContainer(
  directoryReader(fixturePath("disks")),
);

describe("over operator", () => {
  // two translucent planes over black, worked out by hand:
  //   front to back: 0.25*c1 + (1 - 0.25)*0.5*c2
  //   back to front: lerp(0.5*c2, c1, 0.25)
  const planes: WarpedPlane[] = [
    { color: new Float64Array([0.8, 0.2, 0.4]), alpha: new Float64Array([0.25]), value: 1 },
    { color: new Float64Array([0.1, 0.9, 0.6]), alpha: new Float64Array([0.5]), value: 2 },
  ];
  const handComputed = [0.2375, 0.3875, 0.325];

  it("front-to-back compositing matches the hand-computed fixture", () => {
    const result = compositeFrontToBack(planes, 1);
    for (let c = 0; c < 3; c++) {
      expect(result.rgb[c]).toBeCloseTo(handComputed[c], 12);
    }
    expect(result.transmittance[0]).toBeCloseTo(0.75 * 0.5, 12);
    expect(result.value[0]).toBeCloseTo(0.25 * 1 + 0.375 * 2, 12);
  });

  it("back-to-front source-over blending gives the same image", () => {
    const backToFront = compositeBackToFront(planes, 1);
    const frontToBack = compositeFrontToBack(planes, 1).rgb;
    for (let c = 0; c < 3; c++) {
      expect(backToFront[c]).toBeCloseTo(handComputed[c], 12);
      expect(backToFront[c]).toBeCloseTo(frontToBack[c], 14);
    }
  });

  it("agrees with front-to-back on random stacks", () => {
    // deterministic LCG; no randomness in test outcomes
    let seed = 1234567;
    const next = () => {
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed / 2147483648;
    };
    const pixels = 64;
    const stack: WarpedPlane[] = [];
    for (let i = 0; i < 6; i++) {
      const color = new Float64Array(pixels * 3);
      const alpha = new Float64Array(pixels);
      for (let j = 0; j < color.length; j++) color[j] = next();
      for (let j = 0; j < alpha.length; j++) alpha[j] = next();
      stack.push({ color, alpha, value: i });
    }
    const a = compositeFrontToBack(stack, pixels).rgb;
    const b = compositeBackToFront(stack, pixels);
    for (let i = 0; i < a.length; i++) {
      expect(Math.abs(a[i] - b[i])).toBeLessThan(1e-12);
    }
  });
});

describe("renderView against CLI frames", () => {
  it("matches the canonical render with PSNR >= 40 dB", async () => {
    const { mpi } = await disks;
    const reference = await fixtureImage("renders", "canonical_color.png");
    const view = renderView(mpi, defaultState(mpi.numPlanes));
    const db = psnr(view.rgb, reference);
    expect(db).toBeGreaterThanOrEqual(40);
    // at the canonical pose the warp is the identity, so the only difference
    // is the reference PNG's 8-bit quantization
    for (let i = 0; i < view.rgb.length; i++) {
      expect(Math.abs(view.rgb[i] - reference[i])).toBeLessThanOrEqual(0.5 / 255 + 1e-12);
    }
  });

  it("matches the -10 degree yaw render with PSNR >= 35 dB", async () => {
    const { mpi } = await disks;
    const reference = await fixtureImage("renders", "frame_000_color.png");
    const state = createState({ yawDeg: -10, visiblePlanes: subsampleIndices(4, 4) });
    const db = psnr(renderView(mpi, state).rgb, reference);
    expect(db).toBeGreaterThanOrEqual(35);
  });

  it("matches the +10 degree yaw render with PSNR >= 35 dB", async () => {
    const { mpi } = await disks;
    const reference = await fixtureImage("renders", "frame_001_color.png");
    const state = createState({ yawDeg: 10, visiblePlanes: subsampleIndices(4, 4) });
    const db = psnr(renderView(mpi, state).rgb, reference);
    expect(db).toBeGreaterThanOrEqual(35);
  });

  it("is pose-sensitive: the wrong frame scores far lower", async () => {
    // guards against a PSNR helper or fixture mix-up silently passing
    const { mpi } = await disks;
    const reference = await fixtureImage("renders", "frame_001_color.png");
    const state = createState({ yawDeg: -10, visiblePlanes: subsampleIndices(4, 4) });
    const db = psnr(renderView(mpi, state).rgb, reference);
    expect(db).toBeLessThan(25);
  });

  it("matches the canonical shaded render", async () => {
    const { mpi } = await disks;
    const reference = await fixtureImage("renders", "canonical_shaded.png");
    const state = createState({
      visiblePlanes: subsampleIndices(4, 4),
      mode: "shaded",
    });
    const view = renderView(mpi, state);
    expect(psnr(view.rgb, reference)).toBeGreaterThanOrEqual(40);
    for (let i = 0; i < view.rgb.length; i++) {
      expect(Math.abs(view.rgb[i] - reference[i])).toBeLessThanOrEqual(0.5 / 255 + 1e-12);
    }
  });

  it("matches the canonical 16-bit depth render", async () => {
    const { mpi } = await disks;
    const reference = await fixtureImage("renders", "canonical_depth.png");
    const state = createState({ visiblePlanes: subsampleIndices(4, 4), mode: "depth" });
    const view = renderView(mpi, state);
    expect(view.depth).not.toBeNull();
    // both sides normalize by their own min/max before quantizing, and the
    // depth composites are identical, so only 16-bit rounding remains
    const gray = depthDisplay(view.depth!);
    for (let p = 0; p < reference.length; p++) {
      expect(Math.abs(gray[3 * p] - reference[p])).toBeLessThanOrEqual(0.5 / 65535 + 1e-9);
    }
  });
});

describe("plane subsampling in renderView", () => {
  it("slider at 1 shows the nearest plane over the backdrop only", async () => {
    const { mpi } = await disks;
    const picked = subsampleIndices(mpi.numPlanes, 1);
    expect(picked).toEqual([0, mpi.numPlanes - 1]);
    const view = renderView(mpi, createState({ visiblePlanes: picked }));
    // canonical pose, so compositing the raw images by hand is exact: the
    // nearest plane over the (fully opaque) backdrop plane
    const alpha0 = mpi.alphas[0];
    const nearColor = planeColor(mpi, 0);
    const farColor = planeColor(mpi, mpi.numPlanes - 1);
    const farAlpha = mpi.alphas[mpi.numPlanes - 1];
    for (let p = 0; p < alpha0.length; p++) {
      const through = 1 - alpha0[p];
      for (let c = 0; c < 3; c++) {
        const expected =
          alpha0[p] * nearColor[3 * p + c] + through * farAlpha[p] * farColor[3 * p + c];
        expect(view.rgb[3 * p + c]).toBe(expected);
      }
    }
  });

  it("dropping middle planes changes the image less than dropping content", async () => {
    const { mpi } = await disks;
    const full = renderView(mpi, defaultState(mpi.numPlanes));
    const two = renderView(mpi, createState({ visiblePlanes: subsampleIndices(4, 1) }));
    let diff = 0;
    for (let i = 0; i < full.rgb.length; i++) {
      diff = Math.max(diff, Math.abs(full.rgb[i] - two.rgb[i]));
    }
    // the two dropped planes carried disks, so the image must actually change
    expect(diff).toBeGreaterThan(0.1);
  });
});
