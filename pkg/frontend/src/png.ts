/* Minimal PNG decoder for the image subset the container format uses:
 * non-interlaced grayscale or RGB at 8 or 16 bits per sample. Inflate is
 * delegated to the platform's DecompressionStream (available in browsers and
 * in Node 18+), so the decoder itself only walks chunks and undoes the
 * per-row filters. 16-bit samples keep their full precision. */

const PNG_SIGNATURE = [0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a];

export interface DecodedPng {
  width: number;
  height: number;
  channels: 1 | 3;
  bitDepth: 8 | 16;
  /** Row-major, channel-interleaved samples; length width*height*channels. */
  samples: Uint8Array | Uint16Array;
}

async function inflate(compressed: Uint8Array): Promise<Uint8Array> {
  const stream = new Blob([compressed as BlobPart])
    .stream()
    .pipeThrough(new DecompressionStream("deflate"));
  return new Uint8Array(await new Response(stream).arrayBuffer());
}

function paeth(a: number, b: number, c: number): number {
  const p = a + b - c;
  const pa = Math.abs(p - a);
  const pb = Math.abs(p - b);
  const pc = Math.abs(p - c);
  if (pa <= pb && pa <= pc) return a;
  return pb <= pc ? b : c;
}

/** Undo the per-row filter bytes, returning raw scanline bytes. */
function unfilter(data: Uint8Array, width: number, height: number, bpp: number): Uint8Array {
  const stride = width * bpp;
  if (data.length < height * (stride + 1)) {
    throw new Error("invalid PNG: truncated image data");
  }
  const out = new Uint8Array(height * stride);
  for (let y = 0; y < height; y++) {
    const filter = data[y * (stride + 1)];
    const src = y * (stride + 1) + 1;
    const dst = y * stride;
    const prev = dst - stride;
    switch (filter) {
      case 0:
        out.set(data.subarray(src, src + stride), dst);
        break;
      case 1:
        for (let i = 0; i < stride; i++) {
          const left = i >= bpp ? out[dst + i - bpp] : 0;
          out[dst + i] = (data[src + i] + left) & 0xff;
        }
        break;
      case 2:
        for (let i = 0; i < stride; i++) {
          const up = y > 0 ? out[prev + i] : 0;
          out[dst + i] = (data[src + i] + up) & 0xff;
        }
        break;
      case 3:
        for (let i = 0; i < stride; i++) {
          const left = i >= bpp ? out[dst + i - bpp] : 0;
          const up = y > 0 ? out[prev + i] : 0;
          out[dst + i] = (data[src + i] + ((left + up) >> 1)) & 0xff;
        }
        break;
      case 4:
        for (let i = 0; i < stride; i++) {
          const left = i >= bpp ? out[dst + i - bpp] : 0;
          const up = y > 0 ? out[prev + i] : 0;
          const upLeft = y > 0 && i >= bpp ? out[prev + i - bpp] : 0;
          out[dst + i] = (data[src + i] + paeth(left, up, upLeft)) & 0xff;
        }
        break;
      default:
        throw new Error(`invalid PNG: unknown filter type ${filter}`);
    }
  }
  return out;
}

export async function decodePng(bytes: Uint8Array): Promise<DecodedPng> {
  if (bytes.length < 8 || PNG_SIGNATURE.some((v, i) => bytes[i] !== v)) {
    throw new Error("invalid PNG: bad signature");
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  let width = 0;
  let height = 0;
  let bitDepth = 0;
  let colorType = -1;
  const idatParts: Uint8Array[] = [];
  let offset = 8;
  let sawEnd = false;
  while (offset + 8 <= bytes.length) {
    const length = view.getUint32(offset);
    const type = String.fromCharCode(
      bytes[offset + 4], bytes[offset + 5], bytes[offset + 6], bytes[offset + 7],
    );
    const body = offset + 8;
    if (body + length + 4 > bytes.length) {
      throw new Error("invalid PNG: truncated chunk");
    }
    if (type === "IHDR") {
      width = view.getUint32(body);
      height = view.getUint32(body + 4);
      bitDepth = bytes[body + 8];
      colorType = bytes[body + 9];
      const interlace = bytes[body + 12];
      if (interlace !== 0) {
        throw new Error("unsupported PNG: interlaced image");
      }
    } else if (type === "IDAT") {
      idatParts.push(bytes.subarray(body, body + length));
    } else if (type === "IEND") {
      sawEnd = true;
      break;
    }
    offset = body + length + 4; // skip CRC
  }
  if (!sawEnd || width === 0 || height === 0) {
    throw new Error("invalid PNG: missing IHDR or IEND");
  }
  if (colorType !== 0 && colorType !== 2) {
    throw new Error(`unsupported PNG: color type ${colorType} (need grayscale or RGB)`);
  }
  if (bitDepth !== 8 && bitDepth !== 16) {
    throw new Error(`unsupported PNG: bit depth ${bitDepth}`);
  }
  const channels = colorType === 2 ? 3 : 1;
  const compressed = new Uint8Array(idatParts.reduce((n, p) => n + p.length, 0));
  let at = 0;
  for (const part of idatParts) {
    compressed.set(part, at);
    at += part.length;
  }
  const bpp = channels * (bitDepth / 8);
  const raw = unfilter(await inflate(compressed), width, height, bpp);
  let samples: Uint8Array | Uint16Array;
  if (bitDepth === 8) {
    samples = raw;
  } else {
    samples = new Uint16Array(width * height * channels);
    for (let i = 0; i < samples.length; i++) {
      samples[i] = (raw[2 * i] << 8) | raw[2 * i + 1]; // network byte order
    }
  }
  return { width, height, channels: channels as 1 | 3, bitDepth: bitDepth as 8 | 16, samples };
}

/** Decoded samples as floats in [0, 1]. */
export function pngToFloat(png: DecodedPng): Float64Array {
  const scale = png.bitDepth === 8 ? 255 : 65535;
  const out = new Float64Array(png.samples.length);
  for (let i = 0; i < out.length; i++) {
    out[i] = png.samples[i] / scale;
  }
  return out;
}
