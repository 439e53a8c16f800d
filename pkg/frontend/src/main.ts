/* Browser entry point: loads a container, owns the single ViewerState, and
 * maps DOM events onto the pure state/render modules.
 *
 * Everything runs on the UI thread. Input handlers produce a new immutable
 * state snapshot and mark the view dirty; one requestAnimationFrame callback
 * per frame reads the current snapshot and redraws. The URL fragment always
 * holds the serialized state, so reloading (or sharing the link) reproduces
 * the exact view. */

import { loadContainer, urlReader, type ContainerFileReader } from "./container.js";
import { GlPlaneRenderer } from "./gl.js";
import { renderView } from "./renderer.js";
import {
  applyDrag,
  applyWheel,
  defaultState,
  createState,
  parseState,
  serializeState,
  statesEqual,
  subsampleIndices,
  VIEW_LIMITS,
  type RenderMode,
  type ViewerState,
} from "./state.js";
import { ContainerError, type MpiContainer } from "./types.js";

function element<T extends HTMLElement>(id: string): T {
  const found = document.getElementById(id);
  if (found === null) {
    throw new Error(`missing page element #${id}`);
  }
  return found as T;
}

const glCanvas = element<HTMLCanvasElement>("gl-canvas");
const cpuCanvas = element<HTMLCanvasElement>("cpu-canvas");
const stage = element<HTMLDivElement>("stage");
const errorPanel = element<HTMLDivElement>("error-panel");
const readout = element<HTMLDivElement>("pose-readout");
const modeSelect = element<HTMLSelectElement>("mode-select");
const planeSlider = element<HTMLInputElement>("plane-slider");
const planeLabel = element<HTMLSpanElement>("plane-label");
const lightH = element<HTMLInputElement>("light-h");
const lightV = element<HTMLInputElement>("light-v");
const lightRow = element<HTMLDivElement>("light-row");
const forceCpu = element<HTMLInputElement>("force-cpu");
const sourceLabel = element<HTMLSpanElement>("source-label");
const filePicker = element<HTMLInputElement>("file-picker");

let mpi: MpiContainer | null = null;
let state: ViewerState | null = null;
let glRenderer: GlPlaneRenderer | null = null;
let dirty = false;

function showError(message: string): void {
  errorPanel.textContent = message;
  errorPanel.style.display = "block";
}

function clearError(): void {
  errorPanel.style.display = "none";
}

let hashTimer: ReturnType<typeof setTimeout> | null = null;

/** Keep the fragment in sync without hammering history.replaceState during
 * a drag (browsers rate-limit it); trailing-edge debounce. */
function writeHashSoon(next: ViewerState): void {
  if (hashTimer !== null) {
    clearTimeout(hashTimer);
  }
  hashTimer = setTimeout(() => {
    hashTimer = null;
    history.replaceState(null, "", "#" + serializeState(next));
  }, 150);
}

/** Swap in a new state snapshot; re-render and re-serialize if it differs. */
function setState(next: ViewerState): void {
  if (state !== null && statesEqual(state, next)) {
    return;
  }
  state = next;
  dirty = true;
  writeHashSoon(next);
  updateControls(next);
  scheduleFrame();
}

function updateControls(current: ViewerState): void {
  readout.textContent =
    `yaw ${current.yawDeg >= 0 ? "+" : ""}${current.yawDeg.toFixed(1)}°  ` +
    `pitch ${current.pitchDeg >= 0 ? "+" : ""}${current.pitchDeg.toFixed(1)}°  ` +
    `zoom ${current.zoom.toFixed(2)}×`;
  modeSelect.value = current.mode;
  planeSlider.value = String(current.visiblePlanes.length);
  planeLabel.textContent = `${current.visiblePlanes.length}`;
  lightH.value = String(current.lightHDeg);
  lightV.value = String(current.lightVDeg);
  lightRow.style.display = current.mode === "shaded" ? "" : "none";
}

let frameRequested = false;

function scheduleFrame(): void {
  if (frameRequested) {
    return;
  }
  frameRequested = true;
  requestAnimationFrame(() => {
    frameRequested = false;
    if (dirty && mpi !== null && state !== null) {
      dirty = false;
      drawFrame(mpi, state); // one immutable snapshot per frame
    }
  });
}

function drawFrame(container: MpiContainer, snapshot: ViewerState): void {
  const useGl = glRenderer !== null && snapshot.mode === "color" && !forceCpu.checked;
  glCanvas.style.display = useGl ? "" : "none";
  cpuCanvas.style.display = useGl ? "none" : "";
  if (useGl) {
    glRenderer!.render(snapshot);
    return;
  }
  const view = renderView(container, snapshot);
  const ctx = cpuCanvas.getContext("2d");
  if (ctx === null) {
    showError("2D canvas unavailable");
    return;
  }
  const image = ctx.createImageData(view.width, view.height);
  for (let p = 0; p < view.width * view.height; p++) {
    image.data[4 * p] = Math.round(255 * Math.min(1, Math.max(0, view.rgb[3 * p])));
    image.data[4 * p + 1] = Math.round(255 * Math.min(1, Math.max(0, view.rgb[3 * p + 1])));
    image.data[4 * p + 2] = Math.round(255 * Math.min(1, Math.max(0, view.rgb[3 * p + 2])));
    image.data[4 * p + 3] = 255;
  }
  ctx.putImageData(image, 0, 0);
}

async function useSource(reader: ContainerFileReader, label: string): Promise<void> {
  clearError();
  try {
    const loaded = await loadContainer(reader);
    mpi = loaded.mpi;
  } catch (exc) {
    if (exc instanceof ContainerError) {
      showError(exc.message);
      return;
    }
    throw exc;
  }
  sourceLabel.textContent = `${label} — ${mpi.numPlanes} planes @ ${mpi.resolution}px`;
  glCanvas.width = mpi.resolution;
  glCanvas.height = mpi.resolution;
  cpuCanvas.width = mpi.resolution;
  cpuCanvas.height = mpi.resolution;
  glRenderer = GlPlaneRenderer.create(glCanvas);
  if (glRenderer !== null) {
    glRenderer.setContainer(mpi);
  }
  planeSlider.max = String(mpi.numPlanes);
  planeSlider.value = String(mpi.numPlanes);
  const fromHash = parseState(location.hash, mpi.numPlanes);
  state = null; // force a redraw even if the state value matches the old one
  setState(fromHash ?? defaultState(mpi.numPlanes));
}

/** Reader over a picked local directory (the file input's FileList). */
function fileListReader(files: FileList): ContainerFileReader {
  const byName = new Map<string, File>();
  for (const file of Array.from(files)) {
    byName.set(file.name, file);
  }
  return async (name: string) => {
    const file = byName.get(name);
    if (file === undefined) {
      throw new Error(`not picked: ${name}`);
    }
    return new Uint8Array(await file.arrayBuffer());
  };
}

function wireInput(): void {
  let dragging = false;
  let lastX = 0;
  let lastY = 0;
  stage.addEventListener("pointerdown", (event) => {
    dragging = true;
    lastX = event.clientX;
    lastY = event.clientY;
    stage.setPointerCapture(event.pointerId);
  });
  stage.addEventListener("pointermove", (event) => {
    if (!dragging || state === null) {
      return;
    }
    const dx = event.clientX - lastX;
    const dy = event.clientY - lastY;
    lastX = event.clientX;
    lastY = event.clientY;
    setState(applyDrag(state, dx, dy));
  });
  const stopDragging = (event: PointerEvent) => {
    dragging = false;
    if (stage.hasPointerCapture(event.pointerId)) {
      stage.releasePointerCapture(event.pointerId);
    }
  };
  stage.addEventListener("pointerup", stopDragging);
  stage.addEventListener("pointercancel", stopDragging);
  stage.addEventListener(
    "wheel",
    (event) => {
      event.preventDefault();
      if (state !== null) {
        setState(applyWheel(state, event.deltaY));
      }
    },
    { passive: false },
  );

  modeSelect.addEventListener("change", () => {
    if (state !== null) {
      setState(createState({ ...state, mode: modeSelect.value as RenderMode }));
    }
  });
  planeSlider.addEventListener("input", () => {
    if (state !== null && mpi !== null) {
      const count = Number(planeSlider.value);
      setState(
        createState({ ...state, visiblePlanes: subsampleIndices(mpi.numPlanes, count) }),
      );
    }
  });
  const onLight = () => {
    if (state !== null) {
      setState(
        createState({
          ...state,
          lightHDeg: Number(lightH.value),
          lightVDeg: Number(lightV.value),
        }),
      );
    }
  };
  lightH.addEventListener("input", onLight);
  lightV.addEventListener("input", onLight);
  forceCpu.addEventListener("change", () => {
    dirty = true;
    scheduleFrame();
  });
  filePicker.addEventListener("change", () => {
    if (filePicker.files !== null && filePicker.files.length > 0) {
      void useSource(fileListReader(filePicker.files), "picked files");
    }
  });
  window.addEventListener("hashchange", () => {
    if (mpi !== null) {
      const parsed = parseState(location.hash, mpi.numPlanes);
      if (parsed !== null) {
        setState(parsed);
      }
    }
  });
}

function boot(): void {
  const params = new URLSearchParams(location.search);
  const containerUrl = params.get("container") ?? "test/fixtures/disks";
  element<HTMLSpanElement>("limit-note").textContent =
    `drag to orbit (±${VIEW_LIMITS.yawDeg}° yaw, ±${VIEW_LIMITS.pitchDeg}° ` +
    `pitch), wheel to zoom (${VIEW_LIMITS.zoomMin}×–${VIEW_LIMITS.zoomMax}×)`;
  wireInput();
  void useSource(urlReader(containerUrl), containerUrl);
}

boot();
