/**
 * Training loop: adaptive-moment optimizer with framework defaults,
 * seeded batch shuffling, per-epoch loss logging. The CPU backend is
 * deterministic, so a fixed seed reproduces the run exactly.
 */

import * as tf from "@tensorflow/tfjs";
import { LossKind, lossFunction } from "./losses.js";
import { SplitArrays } from "./dataset.js";

export interface TrainConfig {
  loss: LossKind;
  epochs: number;
  batchSize: number;
  seed: number;
  learningRate?: number;
}

export interface TrainHistory {
  epochLosses: number[];
  initialLoss: number;
}

// small deterministic PRNG for shuffling (mulberry32)
export function seededRng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function shuffled(n: number, rng: () => number): number[] {
  const order = Array.from({ length: n }, (_, i) => i);
  for (let i = n - 1; i > 0; i--) {
    const j = Math.floor(rng() * (i + 1));
    [order[i], order[j]] = [order[j], order[i]];
  }
  return order;
}

function gatherBatch(
  arrays: SplitArrays,
  indices: number[],
): { x: tf.Tensor4D; y: tf.Tensor4D } {
  const side = arrays.side;
  const pixels = side * side;
  const x = new Float32Array(indices.length * pixels);
  const y = new Float32Array(indices.length * pixels);
  indices.forEach((sample, i) => {
    x.set(arrays.fbp.subarray(sample * pixels, (sample + 1) * pixels), i * pixels);
    y.set(arrays.gt.subarray(sample * pixels, (sample + 1) * pixels), i * pixels);
  });
  return {
    x: tf.tensor4d(x, [indices.length, side, side, 1]),
    y: tf.tensor4d(y, [indices.length, side, side, 1]),
  };
}

/** Loss of the current model on the first batch, without training. */
export function batchLoss(
  model: tf.LayersModel,
  arrays: SplitArrays,
  cfg: TrainConfig,
): number {
  const indices = Array.from(
    { length: Math.min(cfg.batchSize, arrays.count) }, (_, i) => i);
  const { x, y } = gatherBatch(arrays, indices);
  const loss = lossFunction(cfg.loss);
  const value = tf.tidy(() => loss(model.predict(x) as tf.Tensor4D, y));
  const out = value.dataSync()[0];
  tf.dispose([x, y, value]);
  return out;
}

export function trainModel(
  model: tf.LayersModel,
  arrays: SplitArrays,
  cfg: TrainConfig,
  onEpoch?: (epoch: number, loss: number) => void,
): TrainHistory {
  if (cfg.epochs < 1) {
    throw new Error("epochs must be >= 1");
  }
  if (cfg.batchSize < 1) {
    throw new Error("batch size must be >= 1");
  }
  const optimizer = tf.train.adam(cfg.learningRate ?? 0.001);
  const loss = lossFunction(cfg.loss);
  const rng = seededRng(cfg.seed);
  const initialLoss = batchLoss(model, arrays, cfg);
  const epochLosses: number[] = [];
  for (let epoch = 1; epoch <= cfg.epochs; epoch++) {
    const order = shuffled(arrays.count, rng);
    let epochTotal = 0;
    for (let start = 0; start < order.length; start += cfg.batchSize) {
      const indices = order.slice(start, start + cfg.batchSize);
      const { x, y } = gatherBatch(arrays, indices);
      const value = optimizer.minimize(
        () => loss(model.predict(x) as tf.Tensor4D, y),
        true,
      ) as tf.Scalar;
      epochTotal += value.dataSync()[0];
      tf.dispose([x, y, value]);
    }
    epochLosses.push(epochTotal);
    if (onEpoch) {
      onEpoch(epoch, epochTotal);
    }
  }
  optimizer.dispose();
  return { epochLosses, initialLoss };
}
