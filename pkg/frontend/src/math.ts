/* Camera math shared by the CPU and WebGL render paths.
 *
 * Conventions match the rendering toolkit that writes the containers:
 * integer pixel coordinates are pixel centers, the camera frame is y-down
 * with +z forward, and poses map target-frame points into the canonical
 * frame (X_cano = R X_tgt + t). Homographies map target pixels to canonical
 * pixels for the plane z_cano = d. */

import type { Intrinsics, Pose } from "./types.js";

/** Homogeneous scale below this counts as "projects behind the camera". */
export const W_EPS = 1e-9;

export function identityPose(): Pose {
  return {
    rotation: new Float64Array([1, 0, 0, 0, 1, 0, 0, 0, 1]),
    translation: [0, 0, 0],
  };
}

export function isIdentityPose(pose: Pose): boolean {
  const eye = [1, 0, 0, 0, 1, 0, 0, 0, 1];
  return (
    eye.every((v, i) => pose.rotation[i] === v) &&
    pose.translation[0] === 0 &&
    pose.translation[1] === 0 &&
    pose.translation[2] === 0
  );
}

function cross(a: number[], b: number[]): number[] {
  return [
    a[1] * b[2] - a[2] * b[1],
    a[2] * b[0] - a[0] * b[2],
    a[0] * b[1] - a[1] * b[0],
  ];
}

function normalize(v: number[]): number[] {
  const n = Math.hypot(v[0], v[1], v[2]);
  if (n < 1e-12) {
    throw new Error("cannot normalize a zero-length vector");
  }
  return [v[0] / n, v[1] / n, v[2] / n];
}

/** Camera at `center` looking at `target`, y-down frame. Rotation columns are
 * the camera's x/y/z axes expressed in the reference frame. */
export function lookAtPose(center: number[], target: number[]): Pose {
  const z = normalize([target[0] - center[0], target[1] - center[1], target[2] - center[2]]);
  const x = normalize(cross([0, 1, 0], z));
  const y = cross(z, x);
  return {
    rotation: new Float64Array([
      x[0], y[0], z[0],
      x[1], y[1], z[1],
      x[2], y[2], z[2],
    ]),
    translation: [center[0], center[1], center[2]],
  };
}

/** Orbit pose for the given yaw/pitch: the camera rides a sphere of radius
 * `pivotDepth` around the pivot (0, 0, pivotDepth), so zero angles reproduce
 * the canonical pose exactly. Matches the trajectory generator the CLI uses,
 * which is what makes viewer poses reproducible from the command line. */
export function orbitPose(yawDeg: number, pitchDeg: number, pivotDepth: number): Pose {
  if (yawDeg === 0 && pitchDeg === 0) {
    return identityPose();
  }
  const yaw = (yawDeg * Math.PI) / 180;
  const pitch = (pitchDeg * Math.PI) / 180;
  const direction = [
    Math.sin(yaw) * Math.cos(pitch),
    -Math.sin(pitch),
    Math.cos(yaw) * Math.cos(pitch),
  ];
  const pivot = [0, 0, pivotDepth];
  const center = [
    pivot[0] - pivotDepth * direction[0],
    pivot[1] - pivotDepth * direction[1],
    pivot[2] - pivotDepth * direction[2],
  ];
  return lookAtPose(center, pivot);
}

export function intrinsicsMatrix(k: Intrinsics): Float64Array {
  return new Float64Array([k.fx, 0, k.cx, 0, k.fy, k.cy, 0, 0, 1]);
}

export function inverseIntrinsicsMatrix(k: Intrinsics): Float64Array {
  return new Float64Array([
    1 / k.fx, 0, -k.cx / k.fx,
    0, 1 / k.fy, -k.cy / k.fy,
    0, 0, 1,
  ]);
}

export function matMul3(a: Float64Array, b: Float64Array): Float64Array {
  const out = new Float64Array(9);
  for (let r = 0; r < 3; r++) {
    for (let c = 0; c < 3; c++) {
      out[3 * r + c] =
        a[3 * r] * b[c] + a[3 * r + 1] * b[3 + c] + a[3 * r + 2] * b[6 + c];
    }
  }
  return out;
}

/** Zoom scales focal length only; the principal point stays put. */
export function zoomedIntrinsics(k: Intrinsics, zoom: number): Intrinsics {
  if (zoom === 1) {
    return k;
  }
  return { ...k, fx: k.fx * zoom, fy: k.fy * zoom };
}

function sameIntrinsics(a: Intrinsics, b: Intrinsics): boolean {
  return (
    a.fx === b.fx && a.fy === b.fy && a.cx === b.cx && a.cy === b.cy &&
    a.width === b.width && a.height === b.height
  );
}

/** Signed plane offset of the canonical plane z = d in the target frame:
 * b = d - t_z. Must stay positive (camera in front of the plane). */
export function planeOffset(depth: number, pose: Pose): number {
  return depth - pose.translation[2];
}

/** Homography induced by the canonical plane z = d between the target and
 * canonical cameras: H = K_cano (R + t n^T / b) K_tgt^-1 with n = R^T z_hat
 * and b = d - t_z. The identity pose with equal intrinsics returns the exact
 * identity matrix so no-op warps reproduce their input bitwise. */
export function planeHomography(
  kCano: Intrinsics,
  kTgt: Intrinsics,
  pose: Pose,
  depth: number,
): Float64Array {
  if (isIdentityPose(pose) && sameIntrinsics(kCano, kTgt)) {
    return new Float64Array([1, 0, 0, 0, 1, 0, 0, 0, 1]);
  }
  const b = planeOffset(depth, pose);
  if (b <= 0) {
    throw new Error(`camera is at or beyond the plane at depth ${depth}`);
  }
  const r = pose.rotation;
  const t = pose.translation;
  // n = R^T z_hat is the third row of R
  const n = [r[6], r[7], r[8]];
  const m = new Float64Array(9);
  for (let i = 0; i < 3; i++) {
    for (let j = 0; j < 3; j++) {
      m[3 * i + j] = r[3 * i + j] + (t[i] * n[j]) / b;
    }
  }
  return matMul3(intrinsicsMatrix(kCano), matMul3(m, inverseIntrinsicsMatrix(kTgt)));
}

/** Map one (x, y) pixel through a homography; returns null behind the camera. */
export function applyHomography(
  h: Float64Array,
  x: number,
  y: number,
): [number, number] | null {
  const w = h[6] * x + h[7] * y + h[8];
  if (w <= W_EPS) {
    return null;
  }
  return [(h[0] * x + h[1] * y + h[2]) / w, (h[3] * x + h[4] * y + h[5]) / w];
}
