/* Container loading: fetch + decode + validate an MPI container directory.
 *
 * The on-disk format is a manifest.json next to one shared color PNG, one
 * single-channel alpha PNG per plane, and an optional background PNG. The
 * loader re-checks every structural invariant and reports violations with
 * messages meant for the viewer's error panel, always naming the offending
 * file or manifest field. */

import { decodePng, pngToFloat } from "./png.js";
import { ContainerError, type Manifest, type MpiContainer } from "./types.js";

export const FORMAT_NAME = "mpi-container";
export const FORMAT_VERSION = 1;

export const REQUIRED_MANIFEST_FIELDS = [
  "format",
  "version",
  "num_planes",
  "resolution",
  "depths",
  "near",
  "far",
  "intrinsics",
  "canonical_pose",
  "bit_depth",
  "color_file",
  "alpha_files",
] as const;

const INTRINSICS_FIELDS = ["fx", "fy", "cx", "cy", "width", "height"] as const;

/** Reads one file of the container by name (relative to the container root).
 * Implementations back this with fetch() or a picked local file list; tests
 * back it with the filesystem. A rejected promise marks the file missing. */
export type ContainerFileReader = (name: string) => Promise<Uint8Array>;

/** Build a reader that fetches container files relative to a base URL. */
export function urlReader(baseUrl: string, fetchFn: typeof fetch = fetch): ContainerFileReader {
  const base = baseUrl.endsWith("/") ? baseUrl : baseUrl + "/";
  return async (name: string) => {
    const response = await fetchFn(base + name);
    if (!response.ok) {
      throw new Error(`HTTP ${response.status}`);
    }
    return new Uint8Array(await response.arrayBuffer());
  };
}

export function parseManifest(text: string): Manifest {
  let parsed: unknown;
  try {
    parsed = JSON.parse(text);
  } catch (exc) {
    throw new ContainerError(`container invalid: manifest is not valid JSON (${String(exc)})`);
  }
  if (typeof parsed !== "object" || parsed === null || Array.isArray(parsed)) {
    throw new ContainerError("container invalid: manifest root must be an object");
  }
  const manifest = parsed as Record<string, unknown>;
  for (const key of REQUIRED_MANIFEST_FIELDS) {
    if (!(key in manifest)) {
      throw new ContainerError(`container invalid: manifest missing field '${key}'`);
    }
  }
  if (manifest.format !== FORMAT_NAME) {
    throw new ContainerError(`container invalid: unknown format '${String(manifest.format)}'`);
  }
  if (manifest.version !== FORMAT_VERSION) {
    throw new ContainerError(
      `container invalid: unsupported version '${String(manifest.version)}'`,
    );
  }
  if (manifest.bit_depth !== 8 && manifest.bit_depth !== 16) {
    throw new ContainerError("container invalid: bit_depth must be 8 or 16");
  }
  const intrinsics = manifest.intrinsics as Record<string, unknown>;
  for (const key of INTRINSICS_FIELDS) {
    if (typeof intrinsics !== "object" || intrinsics === null || !(key in intrinsics)) {
      throw new ContainerError(`container invalid: intrinsics missing field '${key}'`);
    }
  }
  const alphaFiles = manifest.alpha_files;
  if (!Array.isArray(alphaFiles) || alphaFiles.length !== manifest.num_planes) {
    const listed = Array.isArray(alphaFiles) ? alphaFiles.length : 0;
    throw new ContainerError(
      "container invalid: manifest/file mismatch: " +
        `num_planes=${String(manifest.num_planes)} but ${listed} alpha files listed`,
    );
  }
  const pose = manifest.canonical_pose;
  if (!Array.isArray(pose) || pose.length !== 16) {
    throw new ContainerError("container invalid: canonical_pose must have 16 entries");
  }
  return manifest as unknown as Manifest;
}

function checkDepths(manifest: Manifest): void {
  const { depths, near, far } = manifest;
  if (!Array.isArray(depths) || depths.length !== manifest.num_planes) {
    throw new ContainerError("container invalid: depths must list one depth per plane");
  }
  if (!(near > 0)) {
    throw new ContainerError("container invalid: near must be positive");
  }
  for (let i = 0; i < depths.length; i++) {
    if (i > 0 && depths[i] <= depths[i - 1]) {
      throw new ContainerError("container invalid: depths must be strictly increasing");
    }
  }
  if (depths[0] < near || depths[depths.length - 1] > far) {
    throw new ContainerError("container invalid: depths must lie within [near, far]");
  }
}

export async function loadContainer(
  readFile: ContainerFileReader,
): Promise<{ mpi: MpiContainer; manifest: Manifest }> {
  const manifestBytes = await readNamed(readFile, "manifest.json");
  const manifest = parseManifest(new TextDecoder().decode(manifestBytes));
  checkDepths(manifest);
  const res = manifest.resolution;

  const readImage = async (name: string, expectColor: boolean): Promise<Float64Array> => {
    const bytes = await readNamed(readFile, name);
    let png;
    try {
      png = await decodePng(bytes);
    } catch (exc) {
      throw new ContainerError(`container invalid: unreadable image ${name} (${String(exc)})`);
    }
    if (png.bitDepth !== manifest.bit_depth) {
      throw new ContainerError(
        `container invalid: ${name} is ${png.bitDepth}-bit, manifest says ` +
          `${manifest.bit_depth}-bit`,
      );
    }
    if (expectColor && png.channels !== 3) {
      throw new ContainerError(`container invalid: ${name} is not a 3-channel image`);
    }
    if (!expectColor && png.channels !== 1) {
      throw new ContainerError(`container invalid: ${name} is not single-channel`);
    }
    if (png.width !== res || png.height !== res) {
      throw new ContainerError(
        `container invalid: ${name} resolution (${png.height}, ${png.width}) does not ` +
          `match manifest resolution ${res}`,
      );
    }
    return pngToFloat(png);
  };

  const color = await readImage(manifest.color_file, true);
  const alphas: Float64Array[] = [];
  for (const name of manifest.alpha_files) {
    alphas.push(await readImage(name, false));
  }
  let background: Float64Array | null = null;
  if (manifest.background_file !== undefined) {
    background = await readImage(manifest.background_file, true);
  }
  const mpi: MpiContainer = {
    resolution: res,
    numPlanes: manifest.num_planes,
    depths: manifest.depths.map(Number),
    near: manifest.near,
    far: manifest.far,
    intrinsics: manifest.intrinsics,
    color,
    alphas,
    background,
  };
  return { mpi, manifest };
}

async function readNamed(readFile: ContainerFileReader, name: string): Promise<Uint8Array> {
  try {
    return await readFile(name);
  } catch {
    throw new ContainerError(`container invalid: missing file ${name}`);
  }
}
