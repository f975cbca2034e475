/**
 * Residual U-Net post-processor: three resolution levels, skip
 * concatenations, and a final addition of the network input, so the model
 * learns a correction to the FBP image rather than the image itself.
 * Around 120k parameters at the default width of 16 channels.
 */

import * as fs from "node:fs";
import * as path from "node:path";
import * as tf from "@tensorflow/tfjs";

export interface ModelSpec {
  side: number;
  baseChannels?: number;
  seed?: number;
}

function convBlock(
  x: tf.SymbolicTensor,
  channels: number,
  seed: number,
  name: string,
): tf.SymbolicTensor {
  let out = x;
  for (let i = 0; i < 2; i++) {
    out = tf.layers
      .conv2d({
        filters: channels,
        kernelSize: 3,
        padding: "same",
        activation: "relu",
        kernelInitializer: tf.initializers.heNormal({ seed: seed + i }),
        biasInitializer: "zeros",
        name: `${name}_conv${i}`,
      })
      .apply(out) as tf.SymbolicTensor;
  }
  return out;
}

export function buildResidualUNet(spec: ModelSpec): tf.LayersModel {
  const side = spec.side;
  const base = spec.baseChannels ?? 16;
  const seed = spec.seed ?? 0;
  if (side % 4 !== 0) {
    throw new Error(`side ${side} must be divisible by 4 for two poolings`);
  }

  const input = tf.input({ shape: [side, side, 1], name: "fbp" });

  const enc1 = convBlock(input, base, seed + 10, "enc1");
  const down1 = tf.layers.maxPooling2d({ poolSize: 2, name: "down1" })
    .apply(enc1) as tf.SymbolicTensor;
  const enc2 = convBlock(down1, base * 2, seed + 20, "enc2");
  const down2 = tf.layers.maxPooling2d({ poolSize: 2, name: "down2" })
    .apply(enc2) as tf.SymbolicTensor;

  const bottom = convBlock(down2, base * 4, seed + 30, "bottom");

  const up2 = tf.layers.upSampling2d({ size: [2, 2], name: "up2" })
    .apply(bottom) as tf.SymbolicTensor;
  const cat2 = tf.layers.concatenate({ name: "cat2" })
    .apply([up2, enc2]) as tf.SymbolicTensor;
  const dec2 = convBlock(cat2, base * 2, seed + 40, "dec2");

  const up1 = tf.layers.upSampling2d({ size: [2, 2], name: "up1" })
    .apply(dec2) as tf.SymbolicTensor;
  const cat1 = tf.layers.concatenate({ name: "cat1" })
    .apply([up1, enc1]) as tf.SymbolicTensor;
  const dec1 = convBlock(cat1, base, seed + 50, "dec1");

  const residual = tf.layers
    .conv2d({
      filters: 1,
      kernelSize: 1,
      padding: "same",
      kernelInitializer: tf.initializers.heNormal({ seed: seed + 60 }),
      biasInitializer: "zeros",
      name: "residual",
    })
    .apply(dec1) as tf.SymbolicTensor;
  const output = tf.layers.add({ name: "add_input" })
    .apply([residual, input]) as tf.SymbolicTensor;

  return tf.model({ inputs: input, outputs: output, name: "residual_unet" });
}

/**
 * Plain tfjs in Node has no file:// IO handler, so checkpoints are stored
 * as a topology/spec JSON next to a raw weight-bytes file.
 */
export async function saveCheckpoint(model: tf.LayersModel, dir: string): Promise<void> {
  fs.mkdirSync(dir, { recursive: true });
  await model.save(
    tf.io.withSaveHandler(async (artifacts) => {
      const weightData = artifacts.weightData as ArrayBuffer;
      fs.writeFileSync(
        path.join(dir, "model.json"),
        JSON.stringify(
          {
            modelTopology: artifacts.modelTopology,
            weightSpecs: artifacts.weightSpecs,
          },
          null,
          2,
        ),
      );
      fs.writeFileSync(path.join(dir, "weights.bin"), Buffer.from(weightData));
      return {
        modelArtifactsInfo: {
          dateSaved: new Date(0),
          modelTopologyType: "JSON",
        },
      };
    }),
  );
}

export async function loadCheckpoint(dir: string): Promise<tf.LayersModel> {
  const metaPath = path.join(dir, "model.json");
  const weightsPath = path.join(dir, "weights.bin");
  if (!fs.existsSync(metaPath) || !fs.existsSync(weightsPath)) {
    throw new Error(`checkpoint incomplete under ${dir}`);
  }
  const meta = JSON.parse(fs.readFileSync(metaPath, "utf8"));
  const bytes = fs.readFileSync(weightsPath);
  const weightData = bytes.buffer.slice(
    bytes.byteOffset,
    bytes.byteOffset + bytes.byteLength,
  );
  return tf.loadLayersModel(
    tf.io.fromMemory({
      modelTopology: meta.modelTopology,
      weightSpecs: meta.weightSpecs,
      weightData,
    }),
  );
}
