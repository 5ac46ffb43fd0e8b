/**
 * Backbone encoders mapping a resized image to an embedding row.
 *
 * No pretrained network weights are shippable in this build environment,
 * so each backbone slot is filled by a deterministic stand-in: average-pool
 * the resized image to a fixed grid, then apply a seeded random projection
 * and tanh. The output dimensions match the real networks (2048 pool
 * features, 512 image embeddings, 1000 softmax classes), the sidecar
 * records the stand-in's identity and weights digest, and swapping in a
 * real model is a matter of implementing this same interface.
 */

import { createHash } from "node:crypto";
import type { RawImage } from "./image.js";
import { Rng } from "./rng.js";

export type Backbone = "inception-pool3" | "inception-logits" | "clip-image";

export interface BackboneSpec {
  inputSize: number;
  outDim: number;
  kind: "feature" | "prob";
}

export const BACKBONES: Record<Backbone, BackboneSpec> = {
  "inception-pool3": { inputSize: 299, outDim: 2048, kind: "feature" },
  "inception-logits": { inputSize: 299, outDim: 1000, kind: "prob" },
  "clip-image": { inputSize: 224, outDim: 512, kind: "feature" },
};

const POOL_GRID = 16; // pooled input vector is 16 * 16 * 3 = 768 values

export class ProjectionEncoder {
  readonly backbone: Backbone;
  readonly spec: BackboneSpec;
  readonly modelId: string;
  readonly weightsDigest: string;
  private readonly weights: Float32Array; // outDim x 768
  private readonly bias: Float32Array;

  constructor(backbone: Backbone) {
    this.backbone = backbone;
    this.spec = BACKBONES[backbone];
    const inDim = POOL_GRID * POOL_GRID * 3;
    const rng = new Rng(`projection-encoder-v1:${backbone}`);
    const scale = 1 / Math.sqrt(inDim);
    this.weights = new Float32Array(this.spec.outDim * inDim);
    for (let i = 0; i < this.weights.length; i++) this.weights[i] = rng.normal() * scale;
    this.bias = new Float32Array(this.spec.outDim);
    for (let i = 0; i < this.bias.length; i++) this.bias[i] = rng.normal() * 0.1;
    const hash = createHash("sha256");
    hash.update(Buffer.from(this.weights.buffer));
    hash.update(Buffer.from(this.bias.buffer));
    this.weightsDigest = hash.digest("hex");
    this.modelId = `projection-encoder-v1/${backbone}`;
  }

  /** Average-pool to the fixed grid; keeps resize-mode differences visible. */
  private pool(img: RawImage): Float64Array {
    const pooled = new Float64Array(POOL_GRID * POOL_GRID * 3);
    const counts = new Float64Array(POOL_GRID * POOL_GRID);
    for (let y = 0; y < img.height; y++) {
      const gy = Math.min(POOL_GRID - 1, Math.floor((y * POOL_GRID) / img.height));
      for (let x = 0; x < img.width; x++) {
        const gx = Math.min(POOL_GRID - 1, Math.floor((x * POOL_GRID) / img.width));
        const cell = gy * POOL_GRID + gx;
        const src = (y * img.width + x) * 3;
        pooled[cell * 3] += img.pixels[src];
        pooled[cell * 3 + 1] += img.pixels[src + 1];
        pooled[cell * 3 + 2] += img.pixels[src + 2];
        counts[cell] += 1;
      }
    }
    for (let cell = 0; cell < counts.length; cell++) {
      if (counts[cell] === 0) continue;
      pooled[cell * 3] /= counts[cell];
      pooled[cell * 3 + 1] /= counts[cell];
      pooled[cell * 3 + 2] /= counts[cell];
    }
    // Center around 0 so tanh has dynamic range on both sides.
    for (let i = 0; i < pooled.length; i++) pooled[i] = pooled[i] * 2 - 1;
    return pooled;
  }

  encode(img: RawImage): Float32Array {
    const pooled = this.pool(img);
    const inDim = pooled.length;
    const out = new Float32Array(this.spec.outDim);
    const logits = new Float64Array(this.spec.outDim);
    for (let o = 0; o < this.spec.outDim; o++) {
      let acc = this.bias[o];
      const base = o * inDim;
      for (let i = 0; i < inDim; i++) acc += this.weights[base + i] * pooled[i];
      logits[o] = acc;
    }
    if (this.spec.kind === "prob") {
      // Softmax in float64, normalized before the float32 cast so stored
      // rows stay stochastic within the format's 1e-6 budget.
      let max = -Infinity;
      for (const v of logits) max = Math.max(max, v);
      let total = 0;
      for (let o = 0; o < logits.length; o++) {
        logits[o] = Math.exp(logits[o] - max);
        total += logits[o];
      }
      for (let o = 0; o < logits.length; o++) out[o] = logits[o] / total;
    } else {
      for (let o = 0; o < logits.length; o++) out[o] = Math.tanh(logits[o]) * 4;
    }
    return out;
  }
}
