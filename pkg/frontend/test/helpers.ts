/* Shared test utilities: filesystem-backed container readers and fixture
 * paths. Fixtures are generated by scripts/make_fixtures.py from the Python
 * toolkit, which is the reference implementation the viewer must agree
 * with. */

import { readFile } from "node:fs/promises";
import { readdirSync, readFileSync } from "node:fs";
import { fileURLToPath } from "node:url";
import path from "node:path";

import type { ContainerFileReader } from "../src/container.js";
import { decodePng, pngToFloat, type DecodedPng } from "../src/png.js";

export const FIXTURES = fileURLToPath(new URL("./fixtures", import.meta.url));

export function fixturePath(...parts: string[]): string {
  return path.join(FIXTURES, ...parts);
}

/** Container reader over a fixture directory. */
export function directoryReader(directory: string): ContainerFileReader {
  return (name: string) => readFile(path.join(directory, name));
}

/** Container reader over an in-memory snapshot of a fixture directory, so
 * tests can delete or tamper with files without touching the fixtures. */
export function snapshotReader(directory: string): {
  files: Map<string, Uint8Array>;
  reader: ContainerFileReader;
} {
  const files = new Map<string, Uint8Array>();
  for (const name of readdirSync(directory)) {
    files.set(name, readFileSync(path.join(directory, name)));
  }
  const reader: ContainerFileReader = async (name: string) => {
    const data = files.get(name);
    if (data === undefined) {
      throw new Error(`no such file: ${name}`);
    }
    return data;
  };
  return { files, reader };
}

export async function decodeFixturePng(...parts: string[]): Promise<DecodedPng> {
  return decodePng(await readFile(fixturePath(...parts)));
}

/** A rendered fixture PNG as floats in [0, 1]. */
export async function fixtureImage(...parts: string[]): Promise<Float64Array> {
  return pngToFloat(await decodeFixturePng(...parts));
}
