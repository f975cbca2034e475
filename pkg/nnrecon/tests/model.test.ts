import { describe, expect, test } from "vitest";
import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import * as tf from "@tensorflow/tfjs";
import { buildResidualUNet, loadCheckpoint, saveCheckpoint } from "../src/model.js";
import { inferImage } from "../src/infer.js";
import { seededRng } from "../src/train.js";

function fixedInput(side: number, seed: number): Float32Array {
  const rng = seededRng(seed);
  return Float32Array.from({ length: side * side }, () => rng());
}

describe("residual U-Net", () => {
  test("shape, size, and seeded determinism", () => {
    const model = buildResidualUNet({ side: 32, baseChannels: 16, seed: 0 });
    expect(model.countParams()).toBeGreaterThan(100_000);
    expect(model.countParams()).toBeLessThan(1_000_000);
    const input = fixedInput(32, 11);
    const out = inferImage(model, input, 32);
    expect(out.length).toBe(32 * 32);

    const twin = buildResidualUNet({ side: 32, baseChannels: 16, seed: 0 });
    expect(Array.from(inferImage(twin, input, 32))).toEqual(Array.from(out));

    const other = buildResidualUNet({ side: 32, baseChannels: 16, seed: 1 });
    const outOther = inferImage(other, input, 32);
    expect(Array.from(outOther)).not.toEqual(Array.from(out));
  });

  test("odd grid sizes are rejected", () => {
    expect(() => buildResidualUNet({ side: 30 })).toThrow(/divisible by 4/);
  });

  test("checkpoint round trip reproduces predictions exactly", async () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "nnrecon-ckpt-"));
    const model = buildResidualUNet({ side: 16, baseChannels: 4, seed: 5 });
    const input = fixedInput(16, 12);
    const before = inferImage(model, input, 16);
    await saveCheckpoint(model, dir);
    const restored = await loadCheckpoint(dir);
    const after = inferImage(restored, input, 16);
    expect(Array.from(after)).toEqual(Array.from(before));
    tf.dispose();
  });

  test("missing checkpoint files are reported", async () => {
    const dir = fs.mkdtempSync(path.join(os.tmpdir(), "nnrecon-empty-"));
    await expect(loadCheckpoint(dir)).rejects.toThrow(/checkpoint incomplete/);
  });
});
