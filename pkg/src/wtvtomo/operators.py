"""Discrete operators: fan-beam projector K, difference operator D, and the
spectral norm of the stacked operator M = [K; D].

Images are (H, W) float64 arrays, sinograms (num_views, num_detectors),
gradient fields (2, H, W) with the horizontal component first (the stacked
vector [D_h x; D_v x] when raveled).
"""

from __future__ import annotations

import numpy as np

from . import _kernels
from ._validation import (ConfigurationError, check_gradient_field,
                          check_image, check_sinogram)
from .geometry import FanBeamGeometry

# dense materialization is for SVD oracles on tiny grids only
_DENSE_MAX_PIXELS = 4096


class FanBeamOperator:
    """Matrix-free line-integral projector for a fixed geometry and grid.

    Rays are sampled at a fixed step of half a pixel with bilinear
    interpolation; project and backproject share the sample weights, so
    ``backproject`` is the exact adjoint of ``project``.
    """

    def __init__(self, image_shape: tuple[int, int], geometry: FanBeamGeometry,
                 pixel_size: float = 1.0):
        height, width = int(image_shape[0]), int(image_shape[1])
        if height < 1 or width < 1:
            raise ConfigurationError(f"bad image shape {image_shape}")
        if pixel_size <= 0:
            raise ConfigurationError("pixel_size must be positive")
        geometry.check_source_clearance(width, height, pixel_size)
        self.image_shape = (height, width)
        self.geometry = geometry
        self.pixel_size = float(pixel_size)
        self._angles_rad = np.deg2rad(geometry.angles_deg)

    @property
    def n_pixels(self) -> int:
        return self.image_shape[0] * self.image_shape[1]

    @property
    def sino_shape(self) -> tuple[int, int]:
        return (self.geometry.num_views, self.geometry.num_detectors)

    def project(self, x) -> np.ndarray:
        x = check_image(x)
        if x.shape != self.image_shape:
            raise ConfigurationError(
                f"image shape {x.shape} does not match operator grid {self.image_shape}")
        out = np.empty(self.sino_shape, dtype=np.float64)
        g = self.geometry
        return _kernels.project_kernel(
            np.ascontiguousarray(x), self._angles_rad, g.num_detectors,
            g.detector_spacing, g.source_to_center, g.source_to_detector,
            self.pixel_size, out)

    def backproject(self, y) -> np.ndarray:
        y = check_sinogram(y, self.geometry)
        out = np.zeros(self.image_shape, dtype=np.float64)
        g = self.geometry
        return _kernels.backproject_kernel(
            np.ascontiguousarray(y), self._angles_rad, g.num_detectors,
            g.detector_spacing, g.source_to_center, g.source_to_detector,
            self.pixel_size, out)

    def as_dense(self) -> np.ndarray:
        """Materialize K as an (m, n) matrix. Tiny grids only (SVD oracles)."""
        if self.n_pixels > _DENSE_MAX_PIXELS:
            raise ConfigurationError(
                f"dense materialization limited to {_DENSE_MAX_PIXELS} pixels, "
                f"grid has {self.n_pixels}")
        height, width = self.image_shape
        cols = []
        basis = np.zeros(self.image_shape)
        for k in range(self.n_pixels):
            basis.flat[k] = 1.0
            cols.append(self.project(basis).ravel())
            basis.flat[k] = 0.0
        return np.stack(cols, axis=1)


def grad(x) -> np.ndarray:
    """Forward differences with replicate boundary (last column/row -> 0)."""
    x = check_image(x)
    out = np.zeros((2,) + x.shape, dtype=np.float64)
    out[0, :, :-1] = x[:, 1:] - x[:, :-1]
    out[1, :-1, :] = x[1:, :] - x[:-1, :]
    return out


def grad_adjoint(f) -> np.ndarray:
    """Adjoint of ``grad`` (negative divergence, matching boundary rule)."""
    f = check_gradient_field(f)
    fh, fv = f[0], f[1]
    out = np.zeros(fh.shape, dtype=np.float64)
    out[:, :-1] -= fh[:, :-1]
    out[:, 1:] += fh[:, :-1]
    out[:-1, :] -= fv[:-1, :]
    out[1:, :] += fv[:-1, :]
    return out


def gradient_magnitude(f) -> np.ndarray:
    """Per-pixel Euclidean length of the gradient pair."""
    f = check_gradient_field(f)
    return np.hypot(f[0], f[1])


def total_variation(x) -> float:
    """Isotropic TV = l1 norm of the gradient-magnitude image."""
    return float(np.sum(gradient_magnitude(grad(x))))


def power_iteration(forward, adjoint, shape, iters: int = 200, seed: int = 0,
                    tol: float = 1e-9) -> float:
    """Largest singular value of a generic linear operator.

    Runs power iteration on A^T A from a seeded Gaussian start. The Rayleigh
    quotient is non-decreasing, so the estimate approaches the norm from
    below; stops early when the relative change drops under ``tol``
    (``tol=0`` always runs ``iters`` rounds).
    """
    if iters < 1:
        raise ConfigurationError("iters must be >= 1")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(shape)
    v /= np.linalg.norm(v.ravel())
    estimate = 0.0
    for _ in range(iters):
        w = adjoint(forward(v))
        rayleigh = float(np.vdot(v.ravel(), w.ravel()))
        new_estimate = np.sqrt(max(rayleigh, 0.0))
        done = tol > 0 and abs(new_estimate - estimate) <= tol * max(new_estimate, 1e-300)
        estimate = new_estimate
        if done:
            break
        norm_w = np.linalg.norm(w.ravel())
        if norm_w == 0.0:
            return 0.0
        v = w / norm_w
    return estimate


def stacked_forward(op: FanBeamOperator, x) -> np.ndarray:
    """Apply M = [K; D]: returns [Kx (view-major); D_h x; D_v x] raveled."""
    return np.concatenate([op.project(x).ravel(), grad(x).ravel()])


def stacked_adjoint(op: FanBeamOperator, z) -> np.ndarray:
    """Apply M^T to a stacked vector of length m + 2n."""
    m = op.geometry.num_rays
    height, width = op.image_shape
    sino_part = z[:m].reshape(op.sino_shape)
    grad_part = z[m:].reshape((2, height, width))
    return op.backproject(sino_part) + grad_adjoint(grad_part)


def operator_norm(op: FanBeamOperator, iters: int = 200, seed: int = 0,
                  tol: float = 1e-9) -> float:
    """Power-iteration estimate of ||M||_2 with M = [K; D]."""
    return power_iteration(
        lambda x: stacked_forward(op, x),
        lambda z: stacked_adjoint(op, z),
        op.image_shape, iters=iters, seed=seed, tol=tol)


def stacked_dense(op: FanBeamOperator) -> np.ndarray:
    """Materialize M = [K; D] as an (m + 2n, n) matrix. Tiny grids only."""
    if op.n_pixels > _DENSE_MAX_PIXELS:
        raise ConfigurationError("stacked dense materialization is for tiny grids only")
    n = op.n_pixels
    k_dense = op.as_dense()
    d_dense = np.zeros((2 * n, n))
    basis = np.zeros(op.image_shape)
    for k in range(n):
        basis.flat[k] = 1.0
        d_dense[:, k] = grad(basis).ravel()
        basis.flat[k] = 0.0
    return np.vstack([k_dense, d_dense])


def kernel_assumption_check(op: FanBeamOperator, tol: float = 1e-10) -> bool:
    """True iff constants are not in ker(K), i.e. ker(K) and ker(D) only
    share the zero image for this geometry (ker(D) is spanned by constants).
    """
    ones = np.ones(op.image_shape)
    return bool(np.linalg.norm(op.project(ones).ravel()) > tol)
