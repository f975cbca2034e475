/**
 * Dataset generation and handling. Samples are produced by the Python
 * toolkit's `simulate` command, one directory per sample, so the pairs on
 * disk are exactly what the reconstruction pipelines consume. A manifest
 * records the pairs, their train/test split, and the acquisition settings
 * used at generation time.
 */

import { spawnSync } from "node:child_process";
import * as fs from "node:fs";
import * as path from "node:path";
import { readRaster } from "./raster.js";

export interface ManifestEntry {
  fbp: string;
  gt: string;
  sinogram: string;
  split: "train" | "test";
  seed: number;
}

export interface DatasetManifest {
  size: number;
  views: number;
  nu: number;
  seedBase: number;
  phantom: string;
  geometry: Record<string, unknown> | null;
  entries: ManifestEntry[];
}

export interface BuildConfig {
  outdir: string;
  count: number;
  testCount: number;
  size?: number;
  views?: number;
  nu?: number;
  seedBase?: number;
  phantom?: string;
  python?: string;
}

export function simulateSample(
  python: string,
  outdir: string,
  phantom: string,
  size: number,
  views: number,
  nu: number,
  seed: number,
): void {
  const result = spawnSync(
    python,
    [
      "-m", "wtvtomo", "simulate",
      "--phantom", phantom,
      "--size", String(size),
      "--views", String(views),
      "--nu", String(nu),
      "--seed", String(seed),
      "--outdir", outdir,
    ],
    { encoding: "utf8" },
  );
  if (result.status !== 0) {
    throw new Error(
      `simulate failed for seed ${seed}: ${result.stderr || result.stdout}`,
    );
  }
}

export function buildDataset(cfg: BuildConfig): DatasetManifest {
  const size = cfg.size ?? 64;
  const views = cfg.views ?? 20;
  const nu = cfg.nu ?? 0.01;
  const seedBase = cfg.seedBase ?? 0;
  const phantom = cfg.phantom ?? "coule";
  const python = cfg.python ?? "python3";
  if (cfg.count < 1 || cfg.testCount < 0 || cfg.testCount >= cfg.count) {
    throw new Error("need count >= 1 and 0 <= testCount < count");
  }
  const entries: ManifestEntry[] = [];
  for (let i = 0; i < cfg.count; i++) {
    const sampleDir = path.join(cfg.outdir, `sample_${String(i).padStart(4, "0")}`);
    simulateSample(python, sampleDir, phantom, size, views, nu, seedBase + i);
    entries.push({
      fbp: path.join(sampleDir, "fbp.f32"),
      gt: path.join(sampleDir, "gt.f32"),
      sinogram: path.join(sampleDir, "sino_noisy.f32"),
      split: i < cfg.count - cfg.testCount ? "train" : "test",
      seed: seedBase + i,
    });
  }
  const sino = readRaster(entries[0].sinogram);
  const manifest: DatasetManifest = {
    size, views, nu, seedBase, phantom,
    geometry: (sino.header.geometry as Record<string, unknown>) ?? null,
    entries,
  };
  validateManifest(manifest);
  saveManifest(manifest, path.join(cfg.outdir, "manifest.json"));
  return manifest;
}

export function saveManifest(manifest: DatasetManifest, file: string): void {
  fs.mkdirSync(path.dirname(file), { recursive: true });
  fs.writeFileSync(file, JSON.stringify(manifest, null, 2) + "\n");
}

export function loadManifest(file: string): DatasetManifest {
  if (!fs.existsSync(file)) {
    throw new Error(`manifest missing: ${file}`);
  }
  const manifest = JSON.parse(fs.readFileSync(file, "utf8")) as DatasetManifest;
  validateManifest(manifest);
  return manifest;
}

/**
 * Paired files must exist and share dimensions, and no ground-truth image
 * may appear in both splits.
 */
export function validateManifest(manifest: DatasetManifest): void {
  if (!manifest.entries.length) {
    throw new Error("manifest has no entries");
  }
  const trainSet = new Set<string>();
  const testSet = new Set<string>();
  for (const entry of manifest.entries) {
    for (const file of [entry.fbp, entry.gt]) {
      const { header } = readRaster(file);
      if (header.width !== manifest.size || header.height !== manifest.size) {
        throw new Error(
          `${file} is ${header.width}x${header.height}, manifest says ${manifest.size}`,
        );
      }
    }
    (entry.split === "train" ? trainSet : testSet).add(path.resolve(entry.gt));
  }
  for (const file of trainSet) {
    if (testSet.has(file)) {
      throw new Error(`sample in both splits: ${file}`);
    }
  }
}

export interface SplitArrays {
  fbp: Float32Array;
  gt: Float32Array;
  count: number;
  side: number;
}

export function loadSplit(
  manifest: DatasetManifest,
  split: "train" | "test",
): SplitArrays {
  const selected = manifest.entries.filter((e) => e.split === split);
  if (!selected.length) {
    throw new Error(`manifest has no '${split}' entries`);
  }
  const side = manifest.size;
  const fbp = new Float32Array(selected.length * side * side);
  const gt = new Float32Array(selected.length * side * side);
  selected.forEach((entry, i) => {
    fbp.set(readRaster(entry.fbp).data, i * side * side);
    gt.set(readRaster(entry.gt).data, i * side * side);
  });
  return { fbp, gt, count: selected.length, side };
}
