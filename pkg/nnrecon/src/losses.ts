/**
 * Training losses. The image loss is the summed squared error between the
 * network output and the ground truth over the batch. The gradient loss
 * compares per-pixel gradient magnitudes instead, using the same forward
 * differences as the reconstruction toolkit (last column/row zero); the
 * in-graph magnitude carries a small smoothing constant so its derivative
 * exists on flat regions.
 */

import * as tf from "@tensorflow/tfjs";
import { forwardDifferences } from "./gradient.js";

export type LossKind = "image" | "gradient";

// sqrt(dh^2 + dv^2 + EPS^2); EPS bounds the absolute magnitude error
export const MAGNITUDE_EPS = 1e-8;

export function imageLoss(pred: tf.Tensor4D, target: tf.Tensor4D): tf.Scalar {
  return tf.tidy(() => tf.sum(tf.square(tf.sub(target, pred))) as tf.Scalar);
}

function smoothedMagnitude(x: tf.Tensor4D): tf.Tensor4D {
  return tf.tidy(() => {
    const [n, h, w, c] = x.shape;
    const right = tf.slice4d(x, [0, 0, 1, 0], [n, h, w - 1, c]);
    const left = tf.slice4d(x, [0, 0, 0, 0], [n, h, w - 1, c]);
    const dh = tf.pad4d(
      tf.sub(right, left) as tf.Tensor4D, [[0, 0], [0, 0], [0, 1], [0, 0]]);
    const below = tf.slice4d(x, [0, 1, 0, 0], [n, h - 1, w, c]);
    const above = tf.slice4d(x, [0, 0, 0, 0], [n, h - 1, w, c]);
    const dv = tf.pad4d(
      tf.sub(below, above) as tf.Tensor4D, [[0, 0], [0, 1], [0, 0], [0, 0]]);
    const sq = tf.add(tf.square(dh), tf.square(dv));
    return tf.sqrt(tf.add(sq, MAGNITUDE_EPS * MAGNITUDE_EPS)) as tf.Tensor4D;
  });
}

export function gradientLoss(pred: tf.Tensor4D, target: tf.Tensor4D): tf.Scalar {
  return tf.tidy(() =>
    tf.sum(
      tf.square(tf.sub(smoothedMagnitude(target), smoothedMagnitude(pred))),
    ) as tf.Scalar,
  );
}

export function lossFunction(kind: LossKind) {
  if (kind === "image") {
    return imageLoss;
  }
  if (kind === "gradient") {
    return gradientLoss;
  }
  throw new Error(`unknown loss kind '${kind}'`);
}

/**
 * Independent recomputation of either loss from plain arrays, double
 * precision all the way, for oracle checks against the in-graph value.
 */
export function recomputeLoss(
  kind: LossKind,
  pred: Float32Array,
  target: Float32Array,
  batch: number,
  side: number,
): number {
  if (pred.length !== target.length || pred.length !== batch * side * side) {
    throw new Error("loss oracle arrays disagree in size");
  }
  let total = 0;
  if (kind === "image") {
    for (let k = 0; k < pred.length; k++) {
      const diff = target[k] - pred[k];
      total += diff * diff;
    }
    return total;
  }
  const eps2 = MAGNITUDE_EPS * MAGNITUDE_EPS;
  for (let b = 0; b < batch; b++) {
    const offset = b * side * side;
    const gp = forwardDifferences(pred.subarray(offset, offset + side * side), side, side);
    const gt = forwardDifferences(target.subarray(offset, offset + side * side), side, side);
    for (let k = 0; k < side * side; k++) {
      const mp = Math.sqrt(gp.dh[k] * gp.dh[k] + gp.dv[k] * gp.dv[k] + eps2);
      const mt = Math.sqrt(gt.dh[k] * gt.dh[k] + gt.dv[k] * gt.dv[k] + eps2);
      const diff = mt - mp;
      total += diff * diff;
    }
  }
  return total;
}
