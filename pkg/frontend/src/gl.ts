/* WebGL2 plane renderer: one textured full-screen pass per visible plane,
 * blended back to front with fixed-function source-over, which equals the
 * front-to-back over operator (the equivalence is pinned by the renderer
 * tests on the CPU implementation; both paths share the same homography
 * code). Each plane's texture packs RGB color with its alpha in A at half
 * float precision, so 16-bit containers keep more than 8 bits through the
 * GPU path too.
 *
 * Sampling matches the CPU reference: colors edge-clamp (CLAMP_TO_EDGE),
 * while alpha is zero outside the canonical image. The taper factor in the
 * fragment shader reproduces the zero-extension exactly: within one pixel of
 * the border, clamped-bilinear times a linear ramp equals the zero-extended
 * bilinear weights. */

import { planeHomography, zoomedIntrinsics } from "./math.js";
import { statePose } from "./renderer.js";
import type { ViewerState } from "./state.js";
import type { MpiContainer } from "./types.js";

const VERTEX_SHADER = `#version 300 es
const vec2 POSITIONS[3] = vec2[3](vec2(-1.0, -1.0), vec2(3.0, -1.0), vec2(-1.0, 3.0));
out vec2 vUV;
void main() {
  vec2 pos = POSITIONS[gl_VertexID];
  vUV = 0.5 * (pos + 1.0);
  gl_Position = vec4(pos, 0.0, 1.0);
}
`;

const FRAGMENT_SHADER = `#version 300 es
precision highp float;
uniform mat3 uHomography;   // target pixel -> canonical pixel
uniform vec2 uCanonicalSize;
uniform vec2 uViewSize;
uniform sampler2D uPlane;
in vec2 vUV;
out vec4 outColor;
void main() {
  // target pixel center; vUV.y flipped so image row 0 is the top
  float x = vUV.x * uViewSize.x - 0.5;
  float y = (1.0 - vUV.y) * uViewSize.y - 0.5;
  vec3 mapped = uHomography * vec3(x, y, 1.0);
  if (mapped.z <= 1e-9) {
    outColor = vec4(0.0);  // behind the canonical camera
    return;
  }
  vec2 source = mapped.xy / mapped.z;
  vec4 texel = texture(uPlane, (source + 0.5) / uCanonicalSize);
  float taperX = clamp(min(source.x + 1.0, uCanonicalSize.x - source.x), 0.0, 1.0);
  float taperY = clamp(min(source.y + 1.0, uCanonicalSize.y - source.y), 0.0, 1.0);
  outColor = vec4(texel.rgb, texel.a * taperX * taperY);
}
`;

function compile(gl: WebGL2RenderingContext, type: number, source: string): WebGLShader {
  const shader = gl.createShader(type);
  if (shader === null) {
    throw new Error("failed to allocate shader");
  }
  gl.shaderSource(shader, source);
  gl.compileShader(shader);
  if (!gl.getShaderParameter(shader, gl.COMPILE_STATUS)) {
    throw new Error(`shader compile failed: ${gl.getShaderInfoLog(shader) ?? "unknown"}`);
  }
  return shader;
}

export class GlPlaneRenderer {
  private readonly gl: WebGL2RenderingContext;
  private readonly program: WebGLProgram;
  private readonly uHomography: WebGLUniformLocation;
  private readonly uCanonicalSize: WebGLUniformLocation;
  private readonly uViewSize: WebGLUniformLocation;
  private textures: WebGLTexture[] = [];
  private mpi: MpiContainer | null = null;

  /** Returns null when WebGL2 is unavailable, so callers can fall back to
   * the CPU renderer. */
  static create(canvas: HTMLCanvasElement): GlPlaneRenderer | null {
    const gl = canvas.getContext("webgl2", {
      alpha: false,
      antialias: false,
      premultipliedAlpha: false,
    });
    return gl === null ? null : new GlPlaneRenderer(gl);
  }

  private constructor(gl: WebGL2RenderingContext) {
    this.gl = gl;
    const program = gl.createProgram();
    if (program === null) {
      throw new Error("failed to allocate GL program");
    }
    gl.attachShader(program, compile(gl, gl.VERTEX_SHADER, VERTEX_SHADER));
    gl.attachShader(program, compile(gl, gl.FRAGMENT_SHADER, FRAGMENT_SHADER));
    gl.linkProgram(program);
    if (!gl.getProgramParameter(program, gl.LINK_STATUS)) {
      throw new Error(`program link failed: ${gl.getProgramInfoLog(program) ?? "unknown"}`);
    }
    this.program = program;
    this.uHomography = this.uniform("uHomography");
    this.uCanonicalSize = this.uniform("uCanonicalSize");
    this.uViewSize = this.uniform("uViewSize");
  }

  private uniform(name: string): WebGLUniformLocation {
    const location = this.gl.getUniformLocation(this.program, name);
    if (location === null) {
      throw new Error(`missing uniform ${name}`);
    }
    return location;
  }

  /** Upload one RGBA half-float texture per plane (alpha in A; the farthest
   * plane's RGB comes from the background image when the container has
   * one). */
  setContainer(mpi: MpiContainer): void {
    const gl = this.gl;
    for (const texture of this.textures) {
      gl.deleteTexture(texture);
    }
    this.textures = [];
    this.mpi = mpi;
    const res = mpi.resolution;
    const pixels = new Float32Array(res * res * 4);
    for (let i = 0; i < mpi.numPlanes; i++) {
      const color =
        i === mpi.numPlanes - 1 && mpi.background !== null ? mpi.background : mpi.color;
      const alpha = mpi.alphas[i];
      for (let p = 0; p < res * res; p++) {
        pixels[4 * p] = color[3 * p];
        pixels[4 * p + 1] = color[3 * p + 1];
        pixels[4 * p + 2] = color[3 * p + 2];
        pixels[4 * p + 3] = alpha[p];
      }
      const texture = gl.createTexture();
      if (texture === null) {
        throw new Error("failed to allocate plane texture");
      }
      gl.bindTexture(gl.TEXTURE_2D, texture);
      gl.texImage2D(gl.TEXTURE_2D, 0, gl.RGBA16F, res, res, 0, gl.RGBA, gl.FLOAT, pixels);
      gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_MIN_FILTER, gl.LINEAR);
      gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_MAG_FILTER, gl.LINEAR);
      gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_WRAP_S, gl.CLAMP_TO_EDGE);
      gl.texParameteri(gl.TEXTURE_2D, gl.TEXTURE_WRAP_T, gl.CLAMP_TO_EDGE);
      this.textures.push(texture);
    }
  }

  /** Draw the state's view: clear to black, then source-over the visible
   * planes back to front. */
  render(state: ViewerState): void {
    const mpi = this.mpi;
    if (mpi === null) {
      return;
    }
    const gl = this.gl;
    const res = mpi.resolution;
    const pose = statePose(mpi, state);
    const kTgt = zoomedIntrinsics(mpi.intrinsics, state.zoom);
    gl.viewport(0, 0, gl.drawingBufferWidth, gl.drawingBufferHeight);
    gl.clearColor(0, 0, 0, 1);
    gl.clear(gl.COLOR_BUFFER_BIT);
    gl.enable(gl.BLEND);
    gl.blendFunc(gl.SRC_ALPHA, gl.ONE_MINUS_SRC_ALPHA);
    gl.useProgram(this.program);
    gl.uniform2f(this.uCanonicalSize, res, res);
    gl.uniform2f(this.uViewSize, res, res);
    gl.activeTexture(gl.TEXTURE0);
    const matrix = new Float32Array(9);
    for (let v = state.visiblePlanes.length - 1; v >= 0; v--) {
      const index = state.visiblePlanes[v];
      const h = planeHomography(mpi.intrinsics, kTgt, pose, mpi.depths[index]);
      matrix.set(h);
      // row-major source, so let GL transpose on upload
      gl.uniformMatrix3fv(this.uHomography, true, matrix);
      gl.bindTexture(gl.TEXTURE_2D, this.textures[index]);
      gl.drawArrays(gl.TRIANGLES, 0, 3);
    }
  }
}
