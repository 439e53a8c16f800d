/* Print the viewer-vs-CLI agreement numbers on the checked-in fixtures.
 *
 *     npx vite-node scripts/psnr_report.ts
 *
 * The same comparisons run as assertions in test/renderer.test.ts; this
 * script exists to put concrete dB values in front of a human. */

import { readFile } from "node:fs/promises";
import { fileURLToPath } from "node:url";
import path from "node:path";

import { loadContainer } from "../src/container.js";
import { decodePng, pngToFloat } from "../src/png.js";
import { psnr, renderView } from "../src/renderer.js";
import { createState, subsampleIndices } from "../src/state.js";

const FIXTURES = fileURLToPath(new URL("../test/fixtures", import.meta.url));

async function image(...parts: string[]): Promise<Float64Array> {
  return pngToFloat(await decodePng(await readFile(path.join(FIXTURES, ...parts))));
}

const { mpi } = await loadContainer(
  (name) => readFile(path.join(FIXTURES, "disks", name)),
);
const allPlanes = subsampleIndices(mpi.numPlanes, mpi.numPlanes);

const comparisons: [string, string, Parameters<typeof createState>[0]][] = [
  ["canonical, color", "canonical_color.png", { visiblePlanes: allPlanes }],
  ["canonical, shaded", "canonical_shaded.png", { visiblePlanes: allPlanes, mode: "shaded" }],
  ["yaw -10 deg", "frame_000_color.png", { yawDeg: -10, visiblePlanes: allPlanes }],
  ["yaw +10 deg", "frame_001_color.png", { yawDeg: 10, visiblePlanes: allPlanes }],
];

for (const [label, file, fields] of comparisons) {
  const reference = await image("renders", file);
  const view = renderView(mpi, createState(fields));
  console.log(`${label.padEnd(20)} vs ${file.padEnd(24)} ${psnr(view.rgb, reference).toFixed(2)} dB`);
}
