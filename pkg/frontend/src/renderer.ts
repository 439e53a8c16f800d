/* CPU reference renderer.
 *
 * This is the testable implementation of the viewer's drawing math and the
 * fallback when WebGL is unavailable. Per visible plane it maps every target
 * pixel through the plane's homography into the canonical images (bilinear,
 * edge-clamped for color, zero-extended for alpha) and then composites
 * front to back with the over operator:
 *
 *     out += T * alpha_i * value_i;  T *= (1 - alpha_i)
 *
 * Depth mode composites each plane's target-frame offset b_i = d_i - t_z the
 * same way and tone-maps the result; shaded mode lights the color composite
 * with normals derived from that depth. The numbers must track the toolkit's
 * renderer bit for bit up to PNG quantization, which is what the PSNR tests
 * against CLI-rendered frames check. */

import {
  applyHomography,
  orbitPose,
  planeHomography,
  planeOffset,
  zoomedIntrinsics,
} from "./math.js";
import type { ViewerState } from "./state.js";
import type { Intrinsics, MpiContainer, Pose } from "./types.js";

export interface WarpedPlane {
  /** RGB interleaved, res*res*3. */
  color: Float64Array;
  /** Alpha, res*res. */
  alpha: Float64Array;
  /** Scalar composited alongside color in depth mode (plane offset b). */
  value: number;
}

export interface RenderedView {
  width: number;
  height: number;
  /** What the screen shows: RGB interleaved in [0, 1]. */
  rgb: Float64Array;
  /** Scene depth with uncovered pixels filled (depth/shaded modes only). */
  depth: Float64Array | null;
}

/** Ambient/diffuse coefficients for shaded mode (the CLI's defaults). */
export const SHADING_KA = 0.9;
export const SHADING_KD = 0.1;

/** The color image a plane contributes: the shared color image, except that
 * the farthest plane uses the dedicated background image when one exists. */
export function planeColor(mpi: MpiContainer, index: number): Float64Array {
  if (index === mpi.numPlanes - 1 && mpi.background !== null) {
    return mpi.background;
  }
  return mpi.color;
}

function isIdentityMatrix(h: Float64Array): boolean {
  const eye = [1, 0, 0, 0, 1, 0, 0, 0, 1];
  return eye.every((v, i) => h[i] === v);
}

/** Resample one plane into the target view under a target-to-canonical
 * homography. Color is edge-clamped so translucent borders pick up no dark
 * fringe; alpha tapers to zero over the one-pixel border band (outside the
 * canonical image there is no content). Pixels that project behind the
 * canonical camera contribute nothing. */
export function warpPlane(
  mpi: MpiContainer,
  index: number,
  h: Float64Array,
  pose: Pose,
): WarpedPlane {
  const res = mpi.resolution;
  const srcColor = planeColor(mpi, index);
  const srcAlpha = mpi.alphas[index];
  const value = planeOffset(mpi.depths[index], pose);
  if (isIdentityMatrix(h)) {
    return { color: srcColor.slice(), alpha: srcAlpha.slice(), value };
  }
  const color = new Float64Array(res * res * 3);
  const alpha = new Float64Array(res * res);
  for (let y = 0; y < res; y++) {
    for (let x = 0; x < res; x++) {
      const mapped = applyHomography(h, x, y);
      if (mapped === null) {
        continue;
      }
      const pixel = y * res + x;
      sampleClamped(srcColor, res, mapped[0], mapped[1], color, 3 * pixel);
      alpha[pixel] = sampleZeroExtended(srcAlpha, res, mapped[0], mapped[1]);
    }
  }
  return { color, alpha, value };
}

/** Bilinear sample of an RGB image with edge-clamped coordinates. */
function sampleClamped(
  data: Float64Array,
  res: number,
  x: number,
  y: number,
  out: Float64Array,
  outOffset: number,
): void {
  const cx = Math.min(res - 1, Math.max(0, x));
  const cy = Math.min(res - 1, Math.max(0, y));
  const x0 = Math.floor(cx);
  const y0 = Math.floor(cy);
  const fx = cx - x0;
  const fy = cy - y0;
  const x1 = Math.min(x0 + 1, res - 1);
  const y1 = Math.min(y0 + 1, res - 1);
  const w00 = (1 - fy) * (1 - fx);
  const w01 = (1 - fy) * fx;
  const w10 = fy * (1 - fx);
  const w11 = fy * fx;
  const i00 = 3 * (y0 * res + x0);
  const i01 = 3 * (y0 * res + x1);
  const i10 = 3 * (y1 * res + x0);
  const i11 = 3 * (y1 * res + x1);
  for (let c = 0; c < 3; c++) {
    out[outOffset + c] =
      w00 * data[i00 + c] + w01 * data[i01 + c] + w10 * data[i10 + c] + w11 * data[i11 + c];
  }
}

/** Bilinear sample of a single-channel image; out-of-bounds corners weigh 0. */
function sampleZeroExtended(data: Float64Array, res: number, x: number, y: number): number {
  const x0 = Math.floor(x);
  const y0 = Math.floor(y);
  const fx = x - x0;
  const fy = y - y0;
  const x1 = x0 + 1;
  const y1 = y0 + 1;
  const row0 = y0 >= 0 && y0 < res;
  const row1 = y1 >= 0 && y1 < res;
  const col0 = x0 >= 0 && x0 < res;
  const col1 = x1 >= 0 && x1 < res;
  let total = 0;
  if (row0 && col0) total += (1 - fy) * (1 - fx) * data[y0 * res + x0];
  if (row0 && col1) total += (1 - fy) * fx * data[y0 * res + x1];
  if (row1 && col0) total += fy * (1 - fx) * data[y1 * res + x0];
  if (row1 && col1) total += fy * fx * data[y1 * res + x1];
  return total;
}

export interface CompositeResult {
  rgb: Float64Array;
  /** Composited scalar values (depth offsets), no backstop fill. */
  value: Float64Array;
  /** Light remaining after the last plane. */
  transmittance: Float64Array;
}

/** Front-to-back over operator; `planes` ordered near to far. */
export function compositeFrontToBack(planes: WarpedPlane[], pixels: number): CompositeResult {
  const rgb = new Float64Array(pixels * 3);
  const value = new Float64Array(pixels);
  const transmittance = new Float64Array(pixels).fill(1);
  for (const plane of planes) {
    for (let p = 0; p < pixels; p++) {
      const weight = transmittance[p] * plane.alpha[p];
      rgb[3 * p] += weight * plane.color[3 * p];
      rgb[3 * p + 1] += weight * plane.color[3 * p + 1];
      rgb[3 * p + 2] += weight * plane.color[3 * p + 2];
      value[p] += weight * plane.value;
      transmittance[p] *= 1 - plane.alpha[p];
    }
  }
  return { rgb, value, transmittance };
}

/** Back-to-front source-over blending, the fixed-function GPU formulation:
 * out = alpha * color + (1 - alpha) * out, iterating far to near over a
 * black start. Algebraically identical to compositeFrontToBack's rgb. */
export function compositeBackToFront(planes: WarpedPlane[], pixels: number): Float64Array {
  const rgb = new Float64Array(pixels * 3);
  for (let i = planes.length - 1; i >= 0; i--) {
    const plane = planes[i];
    for (let p = 0; p < pixels; p++) {
      const a = plane.alpha[p];
      rgb[3 * p] = a * plane.color[3 * p] + (1 - a) * rgb[3 * p];
      rgb[3 * p + 1] = a * plane.color[3 * p + 1] + (1 - a) * rgb[3 * p + 1];
      rgb[3 * p + 2] = a * plane.color[3 * p + 2] + (1 - a) * rgb[3 * p + 2];
    }
  }
  return rgb;
}

/** Unit light direction from horizontal/vertical angles in radians; zero
 * angles give a headlight along +z, positive vertical raises the light
 * (image y points down). */
export function lightingDirection(lh: number, lv: number): [number, number, number] {
  return [Math.sin(lh) * Math.cos(lv), -Math.sin(lv), Math.cos(lh) * Math.cos(lv)];
}

/** Per-pixel unit normals from a depth map: back-project through the
 * intrinsics, take image-space derivatives of the 3D positions (second-order
 * differences, exact for planes), cross the tangents, and orient along the
 * view direction (n_z > 0). */
export function normalMap(
  depth: Float64Array,
  width: number,
  height: number,
  k: Intrinsics,
): Float64Array {
  for (let i = 0; i < depth.length; i++) {
    if (!(depth[i] > 0)) {
      throw new Error("depth must be positive everywhere");
    }
  }
  const pos = new Float64Array(width * height * 3);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const d = depth[y * width + x];
      const i = 3 * (y * width + x);
      pos[i] = ((x - k.cx) / k.fx) * d;
      pos[i + 1] = ((y - k.cy) / k.fy) * d;
      pos[i + 2] = d;
    }
  }
  const secondOrder = Math.min(width, height) >= 3;
  const tU = gradientAxis1(pos, width, height, secondOrder);
  const tV = gradientAxis0(pos, width, height, secondOrder);
  const normals = new Float64Array(width * height * 3);
  for (let p = 0; p < width * height; p++) {
    const i = 3 * p;
    let nx = tU[i + 1] * tV[i + 2] - tU[i + 2] * tV[i + 1];
    let ny = tU[i + 2] * tV[i] - tU[i] * tV[i + 2];
    let nz = tU[i] * tV[i + 1] - tU[i + 1] * tV[i];
    const norm = Math.hypot(nx, ny, nz);
    if (norm < 1e-15) {
      nx = 0;
      ny = 0;
      nz = 1;
    } else {
      nx /= norm;
      ny /= norm;
      nz /= norm;
    }
    if (nz < 0) {
      nx = -nx;
      ny = -ny;
      nz = -nz;
    }
    normals[i] = nx;
    normals[i + 1] = ny;
    normals[i + 2] = nz;
  }
  return normals;
}

/** d/dx of a (height, width, 3) field: central differences inside, one-sided
 * second-order (or first-order for tiny images) at the borders. */
function gradientAxis1(
  pos: Float64Array,
  width: number,
  height: number,
  secondOrder: boolean,
): Float64Array {
  const out = new Float64Array(pos.length);
  const at = (y: number, x: number, c: number) => pos[3 * (y * width + x) + c];
  for (let y = 0; y < height; y++) {
    for (let c = 0; c < 3; c++) {
      for (let x = 1; x < width - 1; x++) {
        out[3 * (y * width + x) + c] = (at(y, x + 1, c) - at(y, x - 1, c)) / 2;
      }
      if (secondOrder) {
        out[3 * (y * width + 0) + c] =
          (-3 * at(y, 0, c) + 4 * at(y, 1, c) - at(y, 2, c)) / 2;
        out[3 * (y * width + width - 1) + c] =
          (3 * at(y, width - 1, c) - 4 * at(y, width - 2, c) + at(y, width - 3, c)) / 2;
      } else {
        out[3 * (y * width + 0) + c] = at(y, 1, c) - at(y, 0, c);
        out[3 * (y * width + width - 1) + c] = at(y, width - 1, c) - at(y, width - 2, c);
      }
    }
  }
  return out;
}

/** d/dy of a (height, width, 3) field, same scheme as gradientAxis1. */
function gradientAxis0(
  pos: Float64Array,
  width: number,
  height: number,
  secondOrder: boolean,
): Float64Array {
  const out = new Float64Array(pos.length);
  const at = (y: number, x: number, c: number) => pos[3 * (y * width + x) + c];
  for (let x = 0; x < width; x++) {
    for (let c = 0; c < 3; c++) {
      for (let y = 1; y < height - 1; y++) {
        out[3 * (y * width + x) + c] = (at(y + 1, x, c) - at(y - 1, x, c)) / 2;
      }
      if (secondOrder) {
        out[3 * x + c] = (-3 * at(0, x, c) + 4 * at(1, x, c) - at(2, x, c)) / 2;
        out[3 * ((height - 1) * width + x) + c] =
          (3 * at(height - 1, x, c) - 4 * at(height - 2, x, c) + at(height - 3, x, c)) / 2;
      } else {
        out[3 * x + c] = at(1, x, c) - at(0, x, c);
        out[3 * ((height - 1) * width + x) + c] =
          at(height - 1, x, c) - at(height - 2, x, c);
      }
    }
  }
  return out;
}

/** The camera pose a state describes: a look-at orbit around the pivot
 * halfway into the depth range, the same parameterization the CLI's orbit
 * trajectories use (which keeps the numeric readout reproducible there). */
export function statePose(mpi: MpiContainer, state: ViewerState): Pose {
  return orbitPose(state.yawDeg, state.pitchDeg, 0.5 * (mpi.near + mpi.far));
}

/** Render the view a state describes. The color composite starts from black
 * (nothing behind the farthest plane), matching the CLI's default output.
 * Depth and shaded modes fill pixels no plane covers with the farthest
 * plane's offset so the depth stays positive and normals stay defined. */
export function renderView(mpi: MpiContainer, state: ViewerState): RenderedView {
  const res = mpi.resolution;
  const pixels = res * res;
  const pose = statePose(mpi, state);
  const kTgt = zoomedIntrinsics(mpi.intrinsics, state.zoom);
  const warped: WarpedPlane[] = [];
  for (const index of state.visiblePlanes) {
    const h = planeHomography(mpi.intrinsics, kTgt, pose, mpi.depths[index]);
    warped.push(warpPlane(mpi, index, h, pose));
  }
  const composite = compositeFrontToBack(warped, pixels);
  if (state.mode === "color") {
    return { width: res, height: res, rgb: composite.rgb, depth: null };
  }
  const backstop = planeOffset(mpi.depths[mpi.numPlanes - 1], pose);
  const depth = new Float64Array(pixels);
  for (let p = 0; p < pixels; p++) {
    depth[p] = composite.value[p] + composite.transmittance[p] * backstop;
  }
  if (state.mode === "depth") {
    return { width: res, height: res, rgb: depthDisplay(depth), depth };
  }
  const normals = normalMap(depth, res, res, kTgt);
  const light = lightingDirection(
    (state.lightHDeg * Math.PI) / 180,
    (state.lightVDeg * Math.PI) / 180,
  );
  const rgb = new Float64Array(pixels * 3);
  for (let p = 0; p < pixels; p++) {
    const lambert = Math.max(
      0,
      normals[3 * p] * light[0] + normals[3 * p + 1] * light[1] + normals[3 * p + 2] * light[2],
    );
    const gain = SHADING_KA + SHADING_KD * lambert;
    for (let c = 0; c < 3; c++) {
      rgb[3 * p + c] = Math.min(1, Math.max(0, composite.rgb[3 * p + c] * gain));
    }
  }
  return { width: res, height: res, rgb, depth };
}

/** Normalize a depth map to a [0, 1] grayscale RGB image (near = dark). */
export function depthDisplay(depth: Float64Array): Float64Array {
  let lo = Infinity;
  let hi = -Infinity;
  for (const d of depth) {
    lo = Math.min(lo, d);
    hi = Math.max(hi, d);
  }
  const span = hi > lo ? hi - lo : 1;
  const rgb = new Float64Array(depth.length * 3);
  for (let p = 0; p < depth.length; p++) {
    const g = (depth[p] - lo) / span;
    rgb[3 * p] = g;
    rgb[3 * p + 1] = g;
    rgb[3 * p + 2] = g;
  }
  return rgb;
}

/** Peak signal-to-noise ratio between two equal-length [0, 1] images. */
export function psnr(a: Float64Array, b: Float64Array): number {
  if (a.length !== b.length) {
    throw new Error(`image sizes differ: ${a.length} vs ${b.length}`);
  }
  let sum = 0;
  for (let i = 0; i < a.length; i++) {
    const d = a[i] - b[i];
    sum += d * d;
  }
  const mse = sum / a.length;
  return mse === 0 ? Infinity : 10 * Math.log10(1 / mse);
}
