/**
 * Raster exchange format shared with the reconstruction toolkit: a raw
 * little-endian float32 payload (`name.f32`, row-major) plus a JSON
 * sidecar (`name.json`) with dimensions and provenance. Files written
 * here must load in the Python package unchanged, and vice versa.
 */

import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";

export const RASTER_KINDS = ["image", "sinogram", "weights"] as const;
export type RasterKind = (typeof RASTER_KINDS)[number];

export interface RasterHeader {
  width: number;
  height: number;
  dtype: "f32le";
  kind: RasterKind;
  pixel_size?: number;
  geometry?: Record<string, unknown>;
  [key: string]: unknown;
}

export interface Raster {
  data: Float32Array;
  header: RasterHeader;
}

function assertLittleEndian(): void {
  if (os.endianness() !== "LE") {
    throw new Error("raster payloads are little-endian; host is not");
  }
}

export function sidecarPath(payloadPath: string): string {
  const parsed = path.parse(payloadPath);
  return path.join(parsed.dir, parsed.name + ".json");
}

export function writeRaster(
  outPath: string,
  data: Float32Array | Float64Array | number[],
  width: number,
  height: number,
  kind: RasterKind,
  extra?: Record<string, unknown>,
): string {
  assertLittleEndian();
  if (!RASTER_KINDS.includes(kind)) {
    throw new Error(`unknown raster kind '${kind}'`);
  }
  if (!Number.isInteger(width) || !Number.isInteger(height) || width < 1 || height < 1) {
    throw new Error(`bad raster dimensions ${width}x${height}`);
  }
  const flat = data instanceof Float32Array ? data : Float32Array.from(data);
  if (flat.length !== width * height) {
    throw new Error(
      `payload has ${flat.length} values, header says ${width * height}`,
    );
  }
  const parsed = path.parse(outPath);
  const payloadPath = path.join(parsed.dir, parsed.name + ".f32");
  const header: RasterHeader = { width, height, dtype: "f32le", kind };
  if (extra) {
    for (const [key, value] of Object.entries(extra)) {
      if (!(key in header)) {
        header[key] = value;
      }
    }
  }
  fs.mkdirSync(parsed.dir || ".", { recursive: true });
  fs.writeFileSync(payloadPath, Buffer.from(flat.buffer, flat.byteOffset, flat.byteLength));
  fs.writeFileSync(sidecarPath(payloadPath), JSON.stringify(header, null, 2) + "\n");
  return payloadPath;
}

export function readRaster(payloadPath: string): Raster {
  assertLittleEndian();
  const sidecar = sidecarPath(payloadPath);
  if (!fs.existsSync(payloadPath)) {
    throw new Error(`raster payload missing: ${payloadPath}`);
  }
  if (!fs.existsSync(sidecar)) {
    throw new Error(`raster sidecar missing: ${sidecar}`);
  }
  let header: RasterHeader;
  try {
    header = JSON.parse(fs.readFileSync(sidecar, "utf8"));
  } catch (err) {
    throw new Error(`unreadable raster sidecar ${sidecar}: ${err}`);
  }
  for (const field of ["width", "height", "dtype", "kind"] as const) {
    if (!(field in header)) {
      throw new Error(`raster sidecar lacks '${field}': ${sidecar}`);
    }
  }
  if (header.dtype !== "f32le") {
    throw new Error(`unsupported raster dtype '${header.dtype}'`);
  }
  if (!RASTER_KINDS.includes(header.kind)) {
    throw new Error(`unknown raster kind '${header.kind}'`);
  }
  const bytes = fs.readFileSync(payloadPath);
  const expected = header.width * header.height * 4;
  if (bytes.length !== expected) {
    throw new Error(
      `raster payload is ${bytes.length} bytes, header expects ${expected}`,
    );
  }
  const data = new Float32Array(
    bytes.buffer.slice(bytes.byteOffset, bytes.byteOffset + bytes.length),
  );
  return { data, header };
}
