"""Image quality metrics: relative error, PSNR, and SSIM.

All three are pure functions of pixel values; flat and 2-D layouts of the
same data give identical results.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.ndimage import gaussian_filter

from ._validation import ConfigurationError

PSNR_CAP = 100.0

# standard SSIM constants from the original definition
_SSIM_SIGMA = 1.5
_SSIM_RADIUS = 5  # 11x11 window
_SSIM_K1 = 0.01
_SSIM_K2 = 0.03


@dataclass(frozen=True)
class MetricsRecord:
    re: float
    psnr: float
    ssim: float

    def as_row(self) -> tuple[float, float, float]:
        return (self.re, self.psnr, self.ssim)


def _pair(x, ref):
    x = np.asarray(x, dtype=np.float64)
    ref = np.asarray(ref, dtype=np.float64)
    if x.shape != ref.shape:
        raise ConfigurationError(f"shape mismatch {x.shape} vs {ref.shape}")
    return x, ref


def relative_error(x, ref) -> float:
    x, ref = _pair(x, ref)
    denom = np.linalg.norm(ref.ravel())
    if denom == 0.0:
        raise ConfigurationError("reference image is identically zero")
    return float(np.linalg.norm((x - ref).ravel()) / denom)


def psnr(x, ref, peak: float = 1.0) -> float:
    """10 log10(peak^2 / MSE); identical images return the 100.0 cap."""
    x, ref = _pair(x, ref)
    mse = float(np.mean((x - ref) ** 2))
    if mse == 0.0:
        return PSNR_CAP
    return float(10.0 * np.log10(peak * peak / mse))


def ssim(x, ref, dynamic_range: float = 1.0) -> float:
    """Mean structural similarity with an 11x11 Gaussian window (sigma 1.5).

    Local moments come from Gaussian filtering with reflected borders; a
    5-pixel margin is cropped before averaging so edge padding never enters
    the score.
    """
    x, ref = _pair(x, ref)
    if x.ndim == 1:
        # layout-invariance contract: metrics see pixel values only
        side = int(round(np.sqrt(x.size)))
        if side * side != x.size:
            raise ConfigurationError("flat input must be a square image")
        x = x.reshape(side, side)
        ref = ref.reshape(side, side)
    if min(x.shape) <= 2 * _SSIM_RADIUS:
        raise ConfigurationError("image too small for the 11x11 SSIM window")
    c1 = (_SSIM_K1 * dynamic_range) ** 2
    c2 = (_SSIM_K2 * dynamic_range) ** 2

    def smooth(a):
        return gaussian_filter(a, sigma=_SSIM_SIGMA, radius=_SSIM_RADIUS,
                               mode="reflect")

    mu_x = smooth(x)
    mu_r = smooth(ref)
    var_x = smooth(x * x) - mu_x * mu_x
    var_r = smooth(ref * ref) - mu_r * mu_r
    cov = smooth(x * ref) - mu_x * mu_r
    num = (2.0 * mu_x * mu_r + c1) * (2.0 * cov + c2)
    den = (mu_x ** 2 + mu_r ** 2 + c1) * (var_x + var_r + c2)
    ssim_map = num / den
    crop = ssim_map[_SSIM_RADIUS:-_SSIM_RADIUS, _SSIM_RADIUS:-_SSIM_RADIUS]
    return float(np.mean(crop))


def metrics_record(x, ref) -> MetricsRecord:
    return MetricsRecord(re=relative_error(x, ref), psnr=psnr(x, ref),
                         ssim=ssim(x, ref))
