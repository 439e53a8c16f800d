/* Viewer state: an immutable snapshot of everything that determines the
 * rendered image, plus the pure functions that map user input onto it.
 * Keeping the state a frozen value type is what lets the render loop read
 * one consistent snapshot per frame and lets the URL fragment reproduce a
 * view exactly. */

export type RenderMode = "color" | "depth" | "shaded";

export interface ViewerState {
  readonly yawDeg: number;
  readonly pitchDeg: number;
  readonly zoom: number;
  /** Plane indices to composite, sorted ascending (near to far), non-empty. */
  readonly visiblePlanes: readonly number[];
  readonly mode: RenderMode;
  readonly lightHDeg: number;
  readonly lightVDeg: number;
}

export const VIEW_LIMITS = {
  yawDeg: 25,
  pitchDeg: 15,
  zoomMin: 0.5,
  zoomMax: 2.5,
} as const;

/** Dragging this many pixels turns the camera by one degree. */
export const DRAG_PIXELS_PER_DEGREE = 8;

/** Wheel delta to zoom-ratio exponent: zoom *= exp(-deltaY * rate). */
export const WHEEL_ZOOM_RATE = 0.0015;

const MODES: readonly RenderMode[] = ["color", "depth", "shaded"];

function clamp(value: number, lo: number, hi: number): number {
  return Math.min(hi, Math.max(lo, value));
}

/** Build a validated, frozen state. Angles and zoom are clamped to the
 * configured limits; a bad plane set is an error rather than a clamp because
 * nothing sensible can be rendered from it. */
export function createState(fields: {
  yawDeg?: number;
  pitchDeg?: number;
  zoom?: number;
  visiblePlanes: readonly number[];
  mode?: RenderMode;
  lightHDeg?: number;
  lightVDeg?: number;
}): ViewerState {
  const planes = fields.visiblePlanes;
  if (planes.length === 0) {
    throw new Error("visible plane set must be non-empty");
  }
  for (let i = 0; i < planes.length; i++) {
    if (!Number.isInteger(planes[i]) || planes[i] < 0) {
      throw new Error(`plane index ${planes[i]} is not a non-negative integer`);
    }
    if (i > 0 && planes[i] <= planes[i - 1]) {
      throw new Error("visible planes must be sorted ascending without duplicates");
    }
  }
  const mode = fields.mode ?? "color";
  if (!MODES.includes(mode)) {
    throw new Error(`unknown render mode ${String(mode)}`);
  }
  const state: ViewerState = {
    yawDeg: clamp(fields.yawDeg ?? 0, -VIEW_LIMITS.yawDeg, VIEW_LIMITS.yawDeg),
    pitchDeg: clamp(fields.pitchDeg ?? 0, -VIEW_LIMITS.pitchDeg, VIEW_LIMITS.pitchDeg),
    zoom: clamp(fields.zoom ?? 1, VIEW_LIMITS.zoomMin, VIEW_LIMITS.zoomMax),
    visiblePlanes: Object.freeze([...planes]),
    mode,
    lightHDeg: fields.lightHDeg ?? 0,
    lightVDeg: fields.lightVDeg ?? 11.5,
  };
  return Object.freeze(state);
}

export function defaultState(numPlanes: number): ViewerState {
  return createState({ visiblePlanes: allPlanes(numPlanes) });
}

export function allPlanes(numPlanes: number): number[] {
  return Array.from({ length: numPlanes }, (_, i) => i);
}

/** Evenly subsampled plane indices. The nearest and farthest planes are
 * always kept (the far plane usually carries the scene backdrop), and the
 * remaining quota is spread evenly between them; at count 1 that leaves the
 * nearest plane over the backdrop only. */
export function subsampleIndices(numPlanes: number, count: number): number[] {
  if (numPlanes < 1) {
    throw new Error("numPlanes must be >= 1");
  }
  if (numPlanes === 1) {
    return [0];
  }
  const kept = clamp(Math.round(count), 1, numPlanes);
  if (kept <= 2) {
    return [0, numPlanes - 1];
  }
  const indices: number[] = [];
  for (let i = 0; i < kept; i++) {
    indices.push(Math.round((i * (numPlanes - 1)) / (kept - 1)));
  }
  return indices;
}

/** Pointer drag in pixels -> new state. Dragging right yaws the camera by
 * +1 degree per DRAG_PIXELS_PER_DEGREE pixels; dragging down pitches it the
 * same way. Limits clamp; a zero drag returns an equal state. */
export function applyDrag(state: ViewerState, dxPixels: number, dyPixels: number): ViewerState {
  return createState({
    ...state,
    yawDeg: state.yawDeg + dxPixels / DRAG_PIXELS_PER_DEGREE,
    pitchDeg: state.pitchDeg + dyPixels / DRAG_PIXELS_PER_DEGREE,
  });
}

/** Wheel scroll -> new state; scrolling up (negative deltaY) zooms in. */
export function applyWheel(state: ViewerState, deltaY: number): ViewerState {
  return createState({ ...state, zoom: state.zoom * Math.exp(-deltaY * WHEEL_ZOOM_RATE) });
}

export function statesEqual(a: ViewerState, b: ViewerState): boolean {
  return (
    a.yawDeg === b.yawDeg &&
    a.pitchDeg === b.pitchDeg &&
    a.zoom === b.zoom &&
    a.mode === b.mode &&
    a.lightHDeg === b.lightHDeg &&
    a.lightVDeg === b.lightVDeg &&
    a.visiblePlanes.length === b.visiblePlanes.length &&
    a.visiblePlanes.every((p, i) => p === b.visiblePlanes[i])
  );
}

/** Serialize for the URL fragment. Numbers use their shortest exact decimal
 * form (ECMAScript ToString), so parsing the fragment back reproduces every
 * field bit for bit. */
export function serializeState(state: ViewerState): string {
  const params = new URLSearchParams();
  params.set("yaw", String(state.yawDeg));
  params.set("pitch", String(state.pitchDeg));
  params.set("zoom", String(state.zoom));
  params.set("planes", state.visiblePlanes.join(","));
  params.set("mode", state.mode);
  params.set("lh", String(state.lightHDeg));
  params.set("lv", String(state.lightVDeg));
  return params.toString();
}

/** Parse a URL fragment produced by serializeState. Returns null when the
 * fragment is missing fields or malformed, so callers can fall back to the
 * default view instead of rendering from garbage. */
export function parseState(fragment: string, numPlanes: number): ViewerState | null {
  const text = fragment.startsWith("#") ? fragment.slice(1) : fragment;
  if (!text) {
    return null;
  }
  const params = new URLSearchParams(text);
  const yaw = parseNumber(params.get("yaw"));
  const pitch = parseNumber(params.get("pitch"));
  const zoom = parseNumber(params.get("zoom"));
  const lh = parseNumber(params.get("lh"));
  const lv = parseNumber(params.get("lv"));
  const mode = params.get("mode") as RenderMode | null;
  const planesText = params.get("planes");
  if (
    yaw === null || pitch === null || zoom === null || lh === null || lv === null ||
    mode === null || !MODES.includes(mode) || planesText === null
  ) {
    return null;
  }
  const planes: number[] = [];
  for (const part of planesText.split(",")) {
    const index = Number(part);
    if (!Number.isInteger(index) || index < 0 || index >= numPlanes) {
      return null;
    }
    planes.push(index);
  }
  if (planes.length === 0 || planes.some((p, i) => i > 0 && p <= planes[i - 1])) {
    return null;
  }
  try {
    return createState({
      yawDeg: yaw,
      pitchDeg: pitch,
      zoom,
      visiblePlanes: planes,
      mode,
      lightHDeg: lh,
      lightVDeg: lv,
    });
  } catch {
    return null;
  }
}

function parseNumber(text: string | null): number | null {
  if (text === null || text.trim() === "") {
    return null;
  }
  const value = Number(text);
  return Number.isFinite(value) ? value : null;
}
