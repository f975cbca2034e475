"""JIT-compiled sampling loops for projection, backprojection, and FBP.

Both directions of the projector walk the same sample positions with the same
bilinear weights (gather in one, scatter in the other), so the pair is an
exact adjoint by construction up to float rounding.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# sample step along each ray, in units of pixel_size
_STEP_FRACTION = 0.5


@njit(cache=True, fastmath=True)
def project_kernel(image, angles_rad, num_detectors, detector_spacing,
                   source_to_center, source_to_detector, pixel_size, out):
    height, width = image.shape
    half_w = 0.5 * width * pixel_size
    half_h = 0.5 * height * pixel_size
    nominal = _STEP_FRACTION * pixel_size
    inv_px = 1.0 / pixel_size
    for v in range(angles_rad.shape[0]):
        beta = angles_rad[v]
        cb = math.cos(beta)
        sb = math.sin(beta)
        sx = source_to_center * cb
        sy = source_to_center * sb
        # unit central-ray direction (source toward origin) and detector axis
        ux = -cb
        uy = -sb
        ax = -sb
        ay = cb
        dcx = sx + source_to_detector * ux
        dcy = sy + source_to_detector * uy
        for d in range(num_detectors):
            td = (d - 0.5 * (num_detectors - 1)) * detector_spacing
            rx = dcx + td * ax - sx
            ry = dcy + td * ay - sy
            length = math.sqrt(rx * rx + ry * ry)
            dx = rx / length
            dy = ry / length
            # clip the ray segment to the image bounding box (slab test)
            t0 = 0.0
            t1 = length
            if dx != 0.0:
                ta = (-half_w - sx) / dx
                tb = (half_w - sx) / dx
                if ta > tb:
                    ta, tb = tb, ta
                if ta > t0:
                    t0 = ta
                if tb < t1:
                    t1 = tb
            elif sx <= -half_w or sx >= half_w:
                out[v, d] = 0.0
                continue
            if dy != 0.0:
                ta = (-half_h - sy) / dy
                tb = (half_h - sy) / dy
                if ta > tb:
                    ta, tb = tb, ta
                if ta > t0:
                    t0 = ta
                if tb < t1:
                    t1 = tb
            elif sy <= -half_h or sy >= half_h:
                out[v, d] = 0.0
                continue
            if t1 <= t0:
                out[v, d] = 0.0
                continue
            seg = t1 - t0
            n_samples = int(math.ceil(seg / nominal))
            step = seg / n_samples
            px = sx + (t0 + 0.5 * step) * dx
            py = sy + (t0 + 0.5 * step) * dy
            ddx = step * dx
            ddy = step * dy
            acc = 0.0
            for _ in range(n_samples):
                fx = px * inv_px + 0.5 * (width - 1)
                fy = 0.5 * (height - 1) - py * inv_px
                j0 = int(math.floor(fx))
                i0 = int(math.floor(fy))
                wx = fx - j0
                wy = fy - i0
                if 0 <= i0 < height:
                    if 0 <= j0 < width:
                        acc += (1.0 - wy) * (1.0 - wx) * image[i0, j0]
                    if 0 <= j0 + 1 < width:
                        acc += (1.0 - wy) * wx * image[i0, j0 + 1]
                if 0 <= i0 + 1 < height:
                    if 0 <= j0 < width:
                        acc += wy * (1.0 - wx) * image[i0 + 1, j0]
                    if 0 <= j0 + 1 < width:
                        acc += wy * wx * image[i0 + 1, j0 + 1]
                px += ddx
                py += ddy
            out[v, d] = acc * step
    return out


@njit(cache=True, fastmath=True)
def backproject_kernel(sino, angles_rad, num_detectors, detector_spacing,
                       source_to_center, source_to_detector, pixel_size, out):
    height, width = out.shape
    half_w = 0.5 * width * pixel_size
    half_h = 0.5 * height * pixel_size
    nominal = _STEP_FRACTION * pixel_size
    inv_px = 1.0 / pixel_size
    for v in range(angles_rad.shape[0]):
        beta = angles_rad[v]
        cb = math.cos(beta)
        sb = math.sin(beta)
        sx = source_to_center * cb
        sy = source_to_center * sb
        ux = -cb
        uy = -sb
        ax = -sb
        ay = cb
        dcx = sx + source_to_detector * ux
        dcy = sy + source_to_detector * uy
        for d in range(num_detectors):
            td = (d - 0.5 * (num_detectors - 1)) * detector_spacing
            rx = dcx + td * ax - sx
            ry = dcy + td * ay - sy
            length = math.sqrt(rx * rx + ry * ry)
            dx = rx / length
            dy = ry / length
            t0 = 0.0
            t1 = length
            if dx != 0.0:
                ta = (-half_w - sx) / dx
                tb = (half_w - sx) / dx
                if ta > tb:
                    ta, tb = tb, ta
                if ta > t0:
                    t0 = ta
                if tb < t1:
                    t1 = tb
            elif sx <= -half_w or sx >= half_w:
                continue
            if dy != 0.0:
                ta = (-half_h - sy) / dy
                tb = (half_h - sy) / dy
                if ta > tb:
                    ta, tb = tb, ta
                if ta > t0:
                    t0 = ta
                if tb < t1:
                    t1 = tb
            elif sy <= -half_h or sy >= half_h:
                continue
            if t1 <= t0:
                continue
            seg = t1 - t0
            n_samples = int(math.ceil(seg / nominal))
            step = seg / n_samples
            px = sx + (t0 + 0.5 * step) * dx
            py = sy + (t0 + 0.5 * step) * dy
            ddx = step * dx
            ddy = step * dy
            val = sino[v, d] * step
            for _ in range(n_samples):
                fx = px * inv_px + 0.5 * (width - 1)
                fy = 0.5 * (height - 1) - py * inv_px
                j0 = int(math.floor(fx))
                i0 = int(math.floor(fy))
                wx = fx - j0
                wy = fy - i0
                if 0 <= i0 < height:
                    if 0 <= j0 < width:
                        out[i0, j0] += (1.0 - wy) * (1.0 - wx) * val
                    if 0 <= j0 + 1 < width:
                        out[i0, j0 + 1] += (1.0 - wy) * wx * val
                if 0 <= i0 + 1 < height:
                    if 0 <= j0 < width:
                        out[i0 + 1, j0] += wy * (1.0 - wx) * val
                    if 0 <= j0 + 1 < width:
                        out[i0 + 1, j0 + 1] += wy * wx * val
                px += ddx
                py += ddy
    return out


@njit(cache=True, fastmath=True)
def fbp_backproject_kernel(filtered, angles_rad, num_detectors, virtual_spacing,
                           source_to_center, pixel_size, out):
    """Distance-weighted backprojection of filtered views.

    ``filtered`` lives on the virtual detector through the origin; the
    1/U^2 magnification weight and the pi/N_v angular factor are applied here.
    """
    height, width = out.shape
    num_views = angles_rad.shape[0]
    cosines = np.cos(angles_rad)
    sines = np.sin(angles_rad)
    angular = math.pi / num_views
    r = source_to_center
    for i in range(height):
        py = (0.5 * (height - 1) - i) * pixel_size
        for j in range(width):
            px = (j - 0.5 * (width - 1)) * pixel_size
            acc = 0.0
            for v in range(num_views):
                cb = cosines[v]
                sb = sines[v]
                depth = r - (px * cb + py * sb)
                if depth <= 1e-12:
                    continue
                s_virt = r * (-px * sb + py * cb) / depth
                fi = s_virt / virtual_spacing + 0.5 * (num_detectors - 1)
                i0 = int(math.floor(fi))
                w = fi - i0
                q = 0.0
                if 0 <= i0 < num_detectors:
                    q += (1.0 - w) * filtered[v, i0]
                if 0 <= i0 + 1 < num_detectors:
                    q += w * filtered[v, i0 + 1]
                acc += q * (r * r) / (depth * depth)
            out[i, j] = acc * angular
    return out
