#!/usr/bin/env node
/**
 * CLI: turn image directories into GMF1 feature / probability files.
 *
 *   gmf-extract extract --dir D --backbone B --resize M --out P [--strict] [--source-id S]
 *   gmf-extract extract-pair --real-dir A --gen-dir B --backbone B --resize M \
 *       --out-real P1 --out-gen P2 [--strict]
 */

import { parseArgs } from "node:util";
import { BACKBONES, Backbone } from "./encoder.js";
import { extract, extractPair } from "./extract.js";
import type { ResizeMode } from "./resize.js";

const RESIZE_MODES = ["clean-bicubic", "legacy-bilinear"];

function requireChoice<T extends string>(value: string | undefined, name: string, choices: string[]): T {
  if (!value || !choices.includes(value)) {
    throw new Error(`--${name} must be one of ${choices.join(", ")} (got ${value ?? "nothing"})`);
  }
  return value as T;
}

function requireValue(value: string | undefined, name: string): string {
  if (!value) throw new Error(`--${name} is required`);
  return value;
}

export function main(argv: string[]): number {
  const [command, ...rest] = argv;
  try {
    if (command === "extract") {
      const { values } = parseArgs({
        args: rest,
        options: {
          dir: { type: "string" },
          backbone: { type: "string" },
          resize: { type: "string" },
          out: { type: "string" },
          "source-id": { type: "string" },
          strict: { type: "boolean", default: false },
        },
      });
      const result = extract({
        imageDir: requireValue(values.dir, "dir"),
        backbone: requireChoice<Backbone>(values.backbone, "backbone", Object.keys(BACKBONES)),
        resizeMode: requireChoice<ResizeMode>(values.resize, "resize", RESIZE_MODES),
        outPath: requireValue(values.out, "out"),
        sourceId: values["source-id"],
        strict: values.strict,
      });
      console.log(
        `wrote ${result.rows}x${result.cols} to ${values.out}` +
          (result.skipped.length ? ` (skipped ${result.skipped.length})` : "")
      );
      return 0;
    }
    if (command === "extract-pair") {
      const { values } = parseArgs({
        args: rest,
        options: {
          "real-dir": { type: "string" },
          "gen-dir": { type: "string" },
          backbone: { type: "string" },
          resize: { type: "string" },
          "out-real": { type: "string" },
          "out-gen": { type: "string" },
          strict: { type: "boolean", default: false },
        },
      });
      const { real, gen } = extractPair({
        realDir: requireValue(values["real-dir"], "real-dir"),
        genDir: requireValue(values["gen-dir"], "gen-dir"),
        backbone: requireChoice<Backbone>(values.backbone, "backbone", Object.keys(BACKBONES)),
        resizeMode: requireChoice<ResizeMode>(values.resize, "resize", RESIZE_MODES),
        outReal: requireValue(values["out-real"], "out-real"),
        outGen: requireValue(values["out-gen"], "out-gen"),
        strict: values.strict,
      });
      console.log(`wrote real ${real.rows}x${real.cols}, gen ${gen.rows}x${gen.cols}`);
      return 0;
    }
    console.error("usage: gmf-extract <extract|extract-pair> [options]");
    return 2;
  } catch (err) {
    console.error(`gmf-extract: ${(err as Error).message}`);
    return 2;
  }
}

if (import.meta.url === `file://${process.argv[1]}`) {
  process.exit(main(process.argv.slice(2)));
}
