/**
 * Two resizing pipelines with very different aliasing behavior.
 *
 * clean-bicubic: separable Catmull-Rom resampling whose kernel support is
 * widened by the scale factor when downscaling, i.e. a proper antialiasing
 * low-pass. legacy-bilinear: the classic GPU-style sample-at-mapped-
 * coordinates bilinear lookup with no filter widening, which aliases on
 * downscale. Feature files record which one produced them, because mixing
 * the two silently shifts distance metrics.
 */

import type { RawImage } from "./image.js";

export type ResizeMode = "clean-bicubic" | "legacy-bilinear";

/** Catmull-Rom cubic (a = -0.5). */
function cubic(t: number): number {
  const x = Math.abs(t);
  if (x <= 1) return 1.5 * x * x * x - 2.5 * x * x + 1;
  if (x < 2) return -0.5 * x * x * x + 2.5 * x * x - 4 * x + 2;
  return 0;
}

interface Tap {
  indices: Int32Array;
  weights: Float64Array;
}

function cubicTaps(src: number, dst: number): Tap[] {
  const scale = src / dst;
  const filterScale = Math.max(1, scale);
  const support = 2 * filterScale;
  const taps: Tap[] = [];
  for (let i = 0; i < dst; i++) {
    const center = (i + 0.5) * scale;
    const lo = Math.floor(center - support + 0.5);
    const hi = Math.ceil(center + support - 0.5);
    const indices: number[] = [];
    const weights: number[] = [];
    let total = 0;
    for (let j = lo; j <= hi; j++) {
      const w = cubic((j + 0.5 - center) / filterScale);
      if (w === 0) continue;
      indices.push(Math.min(src - 1, Math.max(0, j))); // clamp-to-edge
      weights.push(w);
      total += w;
    }
    taps.push({
      indices: Int32Array.from(indices),
      weights: Float64Array.from(weights.map((w) => w / total)),
    });
  }
  return taps;
}

function resampleAxis(
  input: Float64Array,
  width: number,
  height: number,
  taps: Tap[],
  horizontal: boolean,
): Float64Array {
  const outW = horizontal ? taps.length : width;
  const outH = horizontal ? height : taps.length;
  const out = new Float64Array(outW * outH * 3);
  for (let y = 0; y < outH; y++) {
    for (let x = 0; x < outW; x++) {
      const tap = horizontal ? taps[x] : taps[y];
      let r = 0;
      let g = 0;
      let b = 0;
      for (let k = 0; k < tap.indices.length; k++) {
        const idx = horizontal
          ? (y * width + tap.indices[k]) * 3
          : (tap.indices[k] * width + x) * 3;
        const w = tap.weights[k];
        r += w * input[idx];
        g += w * input[idx + 1];
        b += w * input[idx + 2];
      }
      const o = (y * outW + x) * 3;
      out[o] = r;
      out[o + 1] = g;
      out[o + 2] = b;
    }
  }
  return out;
}

function clampPixels(values: Float64Array): Float32Array {
  const out = new Float32Array(values.length);
  for (let i = 0; i < values.length; i++) out[i] = Math.min(1, Math.max(0, values[i]));
  return out;
}

export function cleanBicubic(img: RawImage, size: number): RawImage {
  const f64 = Float64Array.from(img.pixels);
  const horizontal = resampleAxis(f64, img.width, img.height, cubicTaps(img.width, size), true);
  const both = resampleAxis(horizontal, size, img.height, cubicTaps(img.height, size), false);
  return { width: size, height: size, pixels: clampPixels(both) };
}

export function legacyBilinear(img: RawImage, size: number): RawImage {
  const out = new Float64Array(size * size * 3);
  const scaleX = img.width / size;
  const scaleY = img.height / size;
  for (let y = 0; y < size; y++) {
    const srcY = Math.min(img.height - 1, Math.max(0, (y + 0.5) * scaleY - 0.5));
    const y0 = Math.floor(srcY);
    const y1 = Math.min(img.height - 1, y0 + 1);
    const fy = srcY - y0;
    for (let x = 0; x < size; x++) {
      const srcX = Math.min(img.width - 1, Math.max(0, (x + 0.5) * scaleX - 0.5));
      const x0 = Math.floor(srcX);
      const x1 = Math.min(img.width - 1, x0 + 1);
      const fx = srcX - x0;
      for (let c = 0; c < 3; c++) {
        const p00 = img.pixels[(y0 * img.width + x0) * 3 + c];
        const p01 = img.pixels[(y0 * img.width + x1) * 3 + c];
        const p10 = img.pixels[(y1 * img.width + x0) * 3 + c];
        const p11 = img.pixels[(y1 * img.width + x1) * 3 + c];
        out[(y * size + x) * 3 + c] =
          p00 * (1 - fx) * (1 - fy) + p01 * fx * (1 - fy) + p10 * (1 - fx) * fy + p11 * fx * fy;
      }
    }
  }
  return { width: size, height: size, pixels: clampPixels(out) };
}

export function resizeImage(img: RawImage, size: number, mode: ResizeMode): RawImage {
  return mode === "clean-bicubic" ? cleanBicubic(img, size) : legacyBilinear(img, size);
}
