/**
 * Regenerates the bundled deterministic test corpus (16 PNGs + 4 JPEGs).
 * Patterns are chosen to exercise the resize pipelines: fine checkerboards
 * and rings alias hard under legacy bilinear, gradients and noise do not.
 */

import { mkdirSync, writeFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import jpeg from "jpeg-js";
import { PNG } from "pngjs";
import { Rng } from "../src/rng.js";

// Compiled to dist/scripts/, so the package root is two levels up.
const here = dirname(fileURLToPath(import.meta.url));
const outDir = join(here, "..", "..", "testdata", "corpus");

type Painter = (x: number, y: number, w: number, h: number, rng: Rng) => [number, number, number];

const painters: Record<string, Painter> = {
  gradient: (x, y, w, h) => [x / w, y / h, (x + y) / (w + h)],
  checker2: (x, y) => {
    const v = (Math.floor(x / 2) + Math.floor(y / 2)) % 2;
    return [v, v, 1 - v];
  },
  checker5: (x, y) => {
    const v = (Math.floor(x / 5) + Math.floor(y / 5)) % 2;
    return [v, 0.2 + 0.6 * v, 0.8 - 0.6 * v];
  },
  rings: (x, y, w, h) => {
    const cx = x - w / 2;
    const cy = y - h / 2;
    const v = 0.5 + 0.5 * Math.sin(Math.sqrt(cx * cx + cy * cy) * 1.7);
    return [v, v * 0.7, 1 - v];
  },
  noise: (_x, _y, _w, _h, rng) => [rng.next(), rng.next(), rng.next()],
  disk: (x, y, w, h) => {
    const cx = x - w / 2;
    const cy = y - h / 2;
    const inside = Math.sqrt(cx * cx + cy * cy) < Math.min(w, h) / 3 ? 1 : 0;
    return [inside, 0.3, 1 - inside];
  },
  stripes: (x, _y) => {
    const v = 0.5 + 0.5 * Math.sin(x * 2.2);
    return [v, 1 - v, 0.4];
  },
};

function render(painter: Painter, w: number, h: number, seed: string): Buffer {
  const rng = new Rng(seed);
  const rgba = Buffer.alloc(w * h * 4);
  for (let y = 0; y < h; y++) {
    for (let x = 0; x < w; x++) {
      const [r, g, b] = painter(x, y, w, h, rng);
      const o = (y * w + x) * 4;
      rgba[o] = Math.round(255 * Math.min(1, Math.max(0, r)));
      rgba[o + 1] = Math.round(255 * Math.min(1, Math.max(0, g)));
      rgba[o + 2] = Math.round(255 * Math.min(1, Math.max(0, b)));
      rgba[o + 3] = 255;
    }
  }
  return rgba;
}

function savePng(name: string, w: number, h: number, rgba: Buffer): void {
  const png = new PNG({ width: w, height: h });
  rgba.copy(png.data);
  writeFileSync(join(outDir, name), PNG.sync.write(png));
}

function saveJpeg(name: string, w: number, h: number, rgba: Buffer): void {
  const encoded = jpeg.encode({ data: rgba, width: w, height: h }, 90);
  writeFileSync(join(outDir, name), encoded.data);
}

mkdirSync(outDir, { recursive: true });

const sizes: Array<[number, number]> = [
  [48, 48], [64, 48], [96, 96], [128, 80], [75, 75], [56, 84], [112, 112], [90, 60],
];
const kinds = Object.keys(painters);

let index = 0;
for (const kind of kinds) {
  for (let variant = 0; variant < 3 && index < 20; variant++) {
    const [w, h] = sizes[(index + variant) % sizes.length];
    const rgba = render(painters[kind], w, h, `corpus:${kind}:${variant}`);
    const name = `${String(index).padStart(2, "0")}-${kind}-${variant}`;
    if (index % 5 === 4) saveJpeg(`${name}.jpg`, w, h, rgba);
    else savePng(`${name}.png`, w, h, rgba);
    index++;
  }
}
console.log(`wrote ${index} images to ${outDir}`);
