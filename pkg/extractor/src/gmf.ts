/**
 * GMF1 binary writer/reader and its JSON sidecar.
 *
 * Layout (little-endian): "GMF1", u32 version = 1, u8 kind
 * (0 feature / 1 prob / 2 loglik), u64 rows, u64 cols, then
 * rows*cols float32 row-major. Provenance lives in `<path>.meta.json`.
 * This must stay byte-compatible with the metrics engine that consumes
 * the files.
 */

import { readFileSync, writeFileSync } from "node:fs";

export const MAGIC = "GMF1";
export const FORMAT_VERSION = 1;
export const HEADER_BYTES = 25;

export type MatrixKind = 0 | 1 | 2;

const KIND_NAMES: Record<MatrixKind, string> = { 0: "feature", 1: "prob", 2: "loglik" };

export interface Provenance {
  backbone: string;
  preprocessing: string;
  source_id: string;
  creation_time: string;
  /** Extra traceability keys (model id, weights digest); the reader side ignores unknown keys. */
  extra?: Record<string, string>;
}

export interface Matrix {
  kind: MatrixKind;
  rows: number;
  cols: number;
  data: Float32Array; // row-major
}

export function writeMatrix(path: string, matrix: Matrix, meta: Provenance): void {
  const { kind, rows, cols, data } = matrix;
  if (rows < 1 || cols < 1) throw new Error(`refusing to write empty matrix ${rows}x${cols}`);
  if (data.length !== rows * cols) {
    throw new Error(`payload length ${data.length} != ${rows}x${cols}`);
  }
  for (const v of data) {
    if (!Number.isFinite(v)) throw new Error("refusing to write non-finite values");
  }
  if (!meta.backbone || !meta.preprocessing) {
    throw new Error("provenance backbone and preprocessing must be non-empty");
  }
  const header = Buffer.alloc(HEADER_BYTES);
  header.write(MAGIC, 0, "ascii");
  header.writeUInt32LE(FORMAT_VERSION, 4);
  header.writeUInt8(kind, 8);
  header.writeBigUInt64LE(BigInt(rows), 9);
  header.writeBigUInt64LE(BigInt(cols), 17);
  const payload = Buffer.alloc(data.length * 4);
  for (let i = 0; i < data.length; i++) payload.writeFloatLE(data[i], i * 4);
  writeFileSync(path, Buffer.concat([header, payload]));

  const doc: Record<string, string> = {
    backbone: meta.backbone,
    creation_time: meta.creation_time,
    kind: KIND_NAMES[kind],
    preprocessing: meta.preprocessing,
    source_id: meta.source_id,
    ...(meta.extra ?? {}),
  };
  const sorted = Object.fromEntries(Object.entries(doc).sort(([a], [b]) => (a < b ? -1 : 1)));
  writeFileSync(sidecarPath(path), JSON.stringify(sorted, null, 2) + "\n");
}

export function sidecarPath(path: string): string {
  return `${path}.meta.json`;
}

export function readMatrix(path: string): Matrix {
  const raw = readFileSync(path);
  if (raw.length < HEADER_BYTES) throw new Error(`${path}: too short for a GMF1 header`);
  if (raw.toString("ascii", 0, 4) !== MAGIC) throw new Error(`${path}: bad magic`);
  const version = raw.readUInt32LE(4);
  if (version !== FORMAT_VERSION) throw new Error(`${path}: unsupported version ${version}`);
  const kind = raw.readUInt8(8) as MatrixKind;
  const rows = Number(raw.readBigUInt64LE(9));
  const cols = Number(raw.readBigUInt64LE(17));
  if (raw.length !== HEADER_BYTES + rows * cols * 4) {
    throw new Error(`${path}: payload size mismatch`);
  }
  const data = new Float32Array(rows * cols);
  for (let i = 0; i < data.length; i++) data[i] = raw.readFloatLE(HEADER_BYTES + i * 4);
  return { kind, rows, cols, data };
}
