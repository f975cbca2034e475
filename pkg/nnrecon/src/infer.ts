/**
 * Inference and export: run the trained post-processor on FBP rasters and
 * write the results as image rasters the reconstruction toolkit accepts
 * through its `--intermediate` flag.
 */

import * as tf from "@tensorflow/tfjs";
import { readRaster, writeRaster } from "./raster.js";

export function inferImage(
  model: tf.LayersModel,
  fbp: Float32Array,
  side: number,
): Float32Array {
  const input = tf.tensor4d(fbp, [1, side, side, 1]);
  const output = tf.tidy(() => model.predict(input) as tf.Tensor4D);
  const data = output.dataSync() as Float32Array;
  tf.dispose([input, output]);
  return Float32Array.from(data);
}

export function inferExport(
  model: tf.LayersModel,
  fbpPath: string,
  outPath: string,
): string {
  const { data, header } = readRaster(fbpPath);
  if (header.kind !== "image" || header.width !== header.height) {
    throw new Error(`expected a square image raster, got ${fbpPath}`);
  }
  const side = header.width;
  const result = inferImage(model, data, side);
  const extra: Record<string, unknown> = {};
  if (header.pixel_size !== undefined) {
    extra.pixel_size = header.pixel_size;
  }
  return writeRaster(outPath, result, side, side, "image", extra);
}
