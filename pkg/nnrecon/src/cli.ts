/**
 * Command line: build-dataset, train, infer-export. All heavy lifting
 * lives in the library modules; this file only parses flags.
 */

import { parseArgs } from "node:util";
import * as path from "node:path";
import { buildDataset, loadManifest, loadSplit } from "./dataset.js";
import { buildResidualUNet, loadCheckpoint, saveCheckpoint } from "./model.js";
import { inferExport } from "./infer.js";
import { LossKind } from "./losses.js";
import { trainModel } from "./train.js";

function intFlag(value: string | undefined, fallback: number): number {
  if (value === undefined) {
    return fallback;
  }
  const parsed = Number(value);
  if (!Number.isFinite(parsed)) {
    throw new Error(`not a number: ${value}`);
  }
  return parsed;
}

async function cmdBuildDataset(argv: string[]): Promise<void> {
  const { values } = parseArgs({
    args: argv,
    options: {
      outdir: { type: "string" },
      count: { type: "string" },
      "test-count": { type: "string" },
      size: { type: "string" },
      views: { type: "string" },
      nu: { type: "string" },
      "seed-base": { type: "string" },
      phantom: { type: "string" },
    },
  });
  if (!values.outdir) {
    throw new Error("--outdir is required");
  }
  const manifest = buildDataset({
    outdir: values.outdir,
    count: intFlag(values.count, 52),
    testCount: intFlag(values["test-count"], 2),
    size: intFlag(values.size, 64),
    views: intFlag(values.views, 20),
    nu: values.nu === undefined ? 0.01 : Number(values.nu),
    seedBase: intFlag(values["seed-base"], 0),
    phantom: values.phantom ?? "coule",
  });
  console.log(
    `wrote ${manifest.entries.length} samples to ${values.outdir} ` +
    `(${manifest.entries.filter((e) => e.split === "test").length} held out)`,
  );
}

async function cmdTrain(argv: string[]): Promise<void> {
  const { values } = parseArgs({
    args: argv,
    options: {
      manifest: { type: "string" },
      checkpoint: { type: "string" },
      loss: { type: "string" },
      epochs: { type: "string" },
      "batch-size": { type: "string" },
      seed: { type: "string" },
      "base-channels": { type: "string" },
      "learning-rate": { type: "string" },
    },
  });
  if (!values.manifest || !values.checkpoint) {
    throw new Error("--manifest and --checkpoint are required");
  }
  const loss = (values.loss ?? "image") as LossKind;
  if (loss !== "image" && loss !== "gradient") {
    throw new Error(`--loss must be 'image' or 'gradient', got '${loss}'`);
  }
  const manifest = loadManifest(values.manifest);
  const train = loadSplit(manifest, "train");
  const model = buildResidualUNet({
    side: manifest.size,
    baseChannels: intFlag(values["base-channels"], 16),
    seed: intFlag(values.seed, 0),
  });
  const history = trainModel(
    model,
    train,
    {
      loss,
      epochs: intFlag(values.epochs, 50),
      batchSize: intFlag(values["batch-size"], 4),
      seed: intFlag(values.seed, 0),
      learningRate:
        values["learning-rate"] === undefined
          ? undefined
          : Number(values["learning-rate"]),
    },
    (epoch, value) => console.log(`epoch ${epoch} loss ${value.toExponential(6)}`),
  );
  await saveCheckpoint(model, values.checkpoint);
  console.log(
    `checkpoint ${values.checkpoint} (initial batch loss ` +
    `${history.initialLoss.toExponential(6)})`,
  );
}

async function cmdInferExport(argv: string[]): Promise<void> {
  const { values, positionals } = parseArgs({
    args: argv,
    options: {
      checkpoint: { type: "string" },
      output: { type: "string" },
    },
    allowPositionals: true,
  });
  if (!values.checkpoint || positionals.length === 0) {
    throw new Error("usage: infer-export --checkpoint DIR FBP_RASTER [...]");
  }
  const model = await loadCheckpoint(values.checkpoint);
  for (const input of positionals) {
    const out =
      positionals.length === 1 && values.output
        ? values.output
        : path.join(
            path.dirname(input),
            path.parse(input).name + "_net.f32",
          );
    console.log(inferExport(model, input, out));
  }
}

export async function main(argv: string[]): Promise<number> {
  const [command, ...rest] = argv;
  try {
    if (command === "build-dataset") {
      await cmdBuildDataset(rest);
    } else if (command === "train") {
      await cmdTrain(rest);
    } else if (command === "infer-export") {
      await cmdInferExport(rest);
    } else {
      console.error(
        "usage: nnrecon <build-dataset|train|infer-export> [flags]",
      );
      return 2;
    }
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url === new URL(`file://${path.resolve(process.argv[1])}`).href;
if (invokedDirectly) {
  main(process.argv.slice(2)).then((code) => {
    process.exitCode = code;
  });
}
