/**
 * Forward differences and gradient magnitude, matching the reconstruction
 * toolkit's convention bit for bit: channel 0 differences along rows
 * (horizontal, last column zero), channel 1 along columns (vertical, last
 * row zero), magnitude as the per-pixel Euclidean length of the pair.
 */

export interface GradientField {
  dh: Float64Array;
  dv: Float64Array;
  height: number;
  width: number;
}

export function forwardDifferences(
  x: ArrayLike<number>,
  height: number,
  width: number,
): GradientField {
  if (x.length !== height * width) {
    throw new Error(`image has ${x.length} values, expected ${height * width}`);
  }
  const dh = new Float64Array(height * width);
  const dv = new Float64Array(height * width);
  for (let i = 0; i < height; i++) {
    for (let j = 0; j < width; j++) {
      const k = i * width + j;
      if (j + 1 < width) {
        dh[k] = x[k + 1] - x[k];
      }
      if (i + 1 < height) {
        dv[k] = x[k + width] - x[k];
      }
    }
  }
  return { dh, dv, height, width };
}

export function gradientMagnitude(
  x: ArrayLike<number>,
  height: number,
  width: number,
): Float64Array {
  const { dh, dv } = forwardDifferences(x, height, width);
  const mag = new Float64Array(height * width);
  for (let k = 0; k < mag.length; k++) {
    mag[k] = Math.hypot(dh[k], dv[k]);
  }
  return mag;
}
