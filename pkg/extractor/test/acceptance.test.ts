/**
 * Cross-component acceptance: files written here must be accepted and
 * consumed by the Python metrics engine through its public CLI alone.
 */

import { spawnSync } from "node:child_process";
import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";
import { extractPair, extract } from "../src/extract.js";
import { readMatrix } from "../src/gmf.js";
import { corpusNames, corpusSubset, tmp } from "./extract.test.js";

function metrics(args: string[]): { status: number; stdout: string; stderr: string } {
  const run = spawnSync("python3", ["-m", "genmetrics", ...args], { encoding: "utf8" });
  return { status: run.status ?? -1, stdout: run.stdout, stderr: run.stderr };
}

function fidOf(realPath: string, genPath: string, outPath: string): number {
  const run = metrics(["fid", realPath, genPath, "--out", outPath]);
  expect(run.stderr).toBe("");
  expect(run.status).toBe(0);
  return JSON.parse(readFileSync(outPath, "utf8")).results.fid;
}

const names = corpusNames();

describe("extractor round trip through the metrics engine", () => {
  it("inception-pool3 files (N x 2048) feed the fid command without error", { timeout: 180_000 }, () => {
    const dir = tmp();
    const realDir = corpusSubset(names.slice(0, 10));
    const genDir = corpusSubset(names.slice(10));
    const outReal = join(dir, "real.gmf");
    const outGen = join(dir, "gen.gmf");
    extractPair({
      realDir,
      genDir,
      backbone: "inception-pool3",
      resizeMode: "clean-bicubic",
      outReal,
      outGen,
    });
    expect(readMatrix(outReal)).toMatchObject({ rows: 10, cols: 2048 });
    const fid = fidOf(outReal, outGen, join(dir, "fid.json"));
    expect(fid).toBeGreaterThanOrEqual(0);
    expect(Number.isFinite(fid)).toBe(true);
  });

  it("clip-image files (N x 512) validate, and clean vs legacy resize shift the FID", { timeout: 120_000 }, () => {
    const dir = tmp();
    const realDir = corpusSubset(names.slice(0, 10));
    const genDir = corpusSubset(names.slice(10));
    const values: Record<string, number> = {};
    for (const mode of ["clean-bicubic", "legacy-bilinear"] as const) {
      const outReal = join(dir, `real-${mode}.gmf`);
      const outGen = join(dir, `gen-${mode}.gmf`);
      extractPair({ realDir, genDir, backbone: "clip-image", resizeMode: mode, outReal, outGen });
      expect(readMatrix(outReal)).toMatchObject({ rows: 10, cols: 512 });
      values[mode] = fidOf(outReal, outGen, join(dir, `fid-${mode}.json`));
    }
    // Directional check only: the two pipelines must give different numbers.
    expect(values["clean-bicubic"]).not.toBe(values["legacy-bilinear"]);
    expect(Math.abs(values["clean-bicubic"] - values["legacy-bilinear"])).toBeGreaterThan(1e-9);
  });

  it("mixing backbones is refused by the engine with exit code 2", { timeout: 120_000 }, () => {
    const dir = tmp();
    const inception = join(dir, "i.gmf");
    const clip = join(dir, "c.gmf");
    extract({ imageDir: corpusSubset(names.slice(0, 5)), backbone: "inception-pool3", resizeMode: "clean-bicubic", outPath: inception });
    extract({ imageDir: corpusSubset(names.slice(0, 5)), backbone: "clip-image", resizeMode: "clean-bicubic", outPath: clip });
    const run = metrics(["fid", inception, clip]);
    expect(run.status).toBe(2);
  });

  it("logits files drive the score command", { timeout: 120_000 }, () => {
    const dir = tmp();
    const probs = join(dir, "p.gmf");
    extract({ imageDir: corpusSubset(names), backbone: "inception-logits", resizeMode: "clean-bicubic", outPath: probs });
    const out = join(dir, "is.json");
    const run = metrics(["is", probs, "--splits", "4", "--out", out]);
    expect(run.status).toBe(0);
    const doc = JSON.parse(readFileSync(out, "utf8"));
    expect(doc.results.is_mean).toBeGreaterThanOrEqual(1);
  });

  it("runs the normality pipeline on both backbones (Table-2 style comparison)", { timeout: 240_000 }, () => {
    // The published CLIP > Inception mean-p ordering needs real pretrained
    // backbones and thousands of natural images, neither of which ships
    // here; this exercises the exact pipeline and reports the values.
    const dir = tmp();
    const all = corpusSubset(names);
    const means: Record<string, number> = {};
    for (const backbone of ["clip-image", "inception-pool3"] as const) {
      const path = join(dir, `${backbone}.gmf`);
      extract({ imageDir: all, backbone, resizeMode: "clean-bicubic", outPath: path });
      const out = join(dir, `${backbone}-normality.json`);
      const run = metrics(["normality", path, "--projections", "50", "--seed", "1", "--out", out]);
      expect(run.status).toBe(0);
      const doc = JSON.parse(readFileSync(out, "utf8"));
      means[backbone] = doc.results.mean_p;
      expect(doc.results.mean_p).toBeGreaterThanOrEqual(0);
      expect(doc.results.mean_p).toBeLessThanOrEqual(1);
    }
    console.log(
      `mean p on bundled synthetic corpus: clip-image=${means["clip-image"]}, ` +
        `inception-pool3=${means["inception-pool3"]} (stand-in encoders; ordering not asserted)`,
    );
  });
});
