/**
 * Image decoding to planar-free RGB float pixels in [0, 1].
 * Formats are detected by magic bytes, not file extension.
 */

import { readFileSync } from "node:fs";
import jpeg from "jpeg-js";
import { PNG } from "pngjs";

export interface RawImage {
  width: number;
  height: number;
  /** RGB interleaved, length = width * height * 3, values in [0, 1]. */
  pixels: Float32Array;
}

export class DecodeError extends Error {}

function fromRgba(width: number, height: number, rgba: Uint8Array): RawImage {
  const pixels = new Float32Array(width * height * 3);
  for (let i = 0, j = 0; i < rgba.length; i += 4, j += 3) {
    pixels[j] = rgba[i] / 255;
    pixels[j + 1] = rgba[i + 1] / 255;
    pixels[j + 2] = rgba[i + 2] / 255;
  }
  return { width, height, pixels };
}

export function decodeImage(path: string): RawImage {
  const raw = readFileSync(path);
  if (raw.length >= 8 && raw.readUInt32BE(0) === 0x89504e47) {
    try {
      const png = PNG.sync.read(raw);
      return fromRgba(png.width, png.height, png.data);
    } catch (err) {
      throw new DecodeError(`${path}: broken PNG (${(err as Error).message})`);
    }
  }
  if (raw.length >= 2 && raw[0] === 0xff && raw[1] === 0xd8) {
    try {
      const img = jpeg.decode(raw, { useTArray: true, maxMemoryUsageInMB: 512 });
      return fromRgba(img.width, img.height, img.data);
    } catch (err) {
      throw new DecodeError(`${path}: broken JPEG (${(err as Error).message})`);
    }
  }
  throw new DecodeError(`${path}: not a PNG or JPEG`);
}
