/**
 * Directory → GMF1 extraction jobs.
 *
 * Rows follow stable filename order so they stay joinable with index-based
 * anomaly listings downstream. Undecodable files either fail the job
 * (strict) or are skipped with a warning.
 */

import { readdirSync } from "node:fs";
import { join } from "node:path";
import { BACKBONES, Backbone, ProjectionEncoder } from "./encoder.js";
import { writeMatrix, Matrix, Provenance } from "./gmf.js";
import { DecodeError, decodeImage } from "./image.js";
import { ResizeMode, resizeImage } from "./resize.js";

export interface ExtractJob {
  imageDir: string;
  backbone: Backbone;
  resizeMode: ResizeMode;
  outPath: string;
  batchSize?: number;
  strict?: boolean;
  sourceId?: string;
  creationTime?: string;
  onWarning?: (message: string) => void;
}

export interface ExtractResult {
  rows: number;
  cols: number;
  files: string[];
  skipped: string[];
}

const encoderCache = new Map<Backbone, ProjectionEncoder>();

export function encoderFor(backbone: Backbone): ProjectionEncoder {
  let enc = encoderCache.get(backbone);
  if (!enc) {
    enc = new ProjectionEncoder(backbone);
    encoderCache.set(backbone, enc);
  }
  return enc;
}

export function preprocessingTag(resizeMode: ResizeMode, backbone: Backbone): string {
  return `${resizeMode}-${BACKBONES[backbone].inputSize}`;
}

export function extract(job: ExtractJob): ExtractResult {
  const spec = BACKBONES[job.backbone];
  if (!spec) throw new Error(`unknown backbone ${job.backbone}`);
  const encoder = encoderFor(job.backbone);
  const warn = job.onWarning ?? ((msg: string) => console.warn(msg));

  const names = readdirSync(job.imageDir).sort();
  const rows: Float32Array[] = [];
  const files: string[] = [];
  const skipped: string[] = [];
  for (const name of names) {
    const path = join(job.imageDir, name);
    let decoded;
    try {
      decoded = decodeImage(path);
    } catch (err) {
      if (!(err instanceof DecodeError)) throw err;
      if (job.strict) throw err;
      warn(`skipping ${path}: ${err.message}`);
      skipped.push(name);
      continue;
    }
    const resized = resizeImage(decoded, spec.inputSize, job.resizeMode);
    rows.push(encoder.encode(resized));
    files.push(name);
  }
  if (rows.length === 0) {
    throw new Error(`no decodable images in ${job.imageDir}`);
  }

  const data = new Float32Array(rows.length * spec.outDim);
  rows.forEach((row, i) => data.set(row, i * spec.outDim));
  const matrix: Matrix = {
    kind: spec.kind === "prob" ? 1 : 0,
    rows: rows.length,
    cols: spec.outDim,
    data,
  };
  const meta: Provenance = {
    backbone: job.backbone,
    preprocessing: preprocessingTag(job.resizeMode, job.backbone),
    source_id: job.sourceId ?? job.imageDir,
    creation_time: job.creationTime ?? new Date().toISOString(),
    extra: { model_id: encoder.modelId, weights_sha256: encoder.weightsDigest },
  };
  writeMatrix(job.outPath, matrix, meta);
  return { rows: rows.length, cols: spec.outDim, files, skipped };
}

export interface ExtractPairJob {
  realDir: string;
  genDir: string;
  backbone: Backbone;
  resizeMode: ResizeMode;
  realResizeMode?: ResizeMode;
  genResizeMode?: ResizeMode;
  outReal: string;
  outGen: string;
  strict?: boolean;
  onWarning?: (message: string) => void;
}

/** Extract a reference/generated pair under guaranteed-identical preprocessing. */
export function extractPair(job: ExtractPairJob): { real: ExtractResult; gen: ExtractResult } {
  const realMode = job.realResizeMode ?? job.resizeMode;
  const genMode = job.genResizeMode ?? job.resizeMode;
  if (realMode !== genMode) {
    throw new Error(
      `refusing mismatched preprocessing: real=${realMode} gen=${genMode}; ` +
        "distance metrics are only comparable under one pipeline"
    );
  }
  const creationTime = new Date().toISOString();
  const shared = {
    backbone: job.backbone,
    resizeMode: realMode,
    strict: job.strict,
    creationTime,
    onWarning: job.onWarning,
  };
  const real = extract({ ...shared, imageDir: job.realDir, outPath: job.outReal, sourceId: `real:${job.realDir}` });
  const gen = extract({ ...shared, imageDir: job.genDir, outPath: job.outGen, sourceId: `gen:${job.genDir}` });
  return { real, gen };
}
