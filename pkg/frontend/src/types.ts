/* Shared types for the MPI container viewer. */

export interface Intrinsics {
  fx: number;
  fy: number;
  cx: number;
  cy: number;
  width: number;
  height: number;
}

/** Rigid camera pose mapping target-frame points into the canonical frame:
 *  X_cano = R X_tgt + t. `rotation` is row-major 3x3. */
export interface Pose {
  rotation: Float64Array;
  translation: [number, number, number];
}

export interface Manifest {
  format: string;
  version: number;
  num_planes: number;
  resolution: number;
  depths: number[];
  near: number;
  far: number;
  intrinsics: Intrinsics;
  canonical_pose: number[];
  bit_depth: number;
  color_file: string;
  alpha_files: string[];
  background_file?: string;
  depth_gt_file?: string;
  depth_gt_min?: number;
  depth_gt_max?: number;
}

/** Decoded container: images as float arrays in [0, 1], row-major, RGB
 *  interleaved for color. Alphas are one res*res array per plane, ordered
 *  near to far like `depths`. */
export interface MpiContainer {
  resolution: number;
  numPlanes: number;
  depths: number[];
  near: number;
  far: number;
  intrinsics: Intrinsics;
  color: Float64Array;
  alphas: Float64Array[];
  background: Float64Array | null;
}

/** Error whose message is meant for the viewer's error panel. */
export class ContainerError extends Error {
  constructor(message: string) {
    super(message);
    this.name = "ContainerError";
  }
}
