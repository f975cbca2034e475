"""Filtered back projection for the fan-beam geometry.

The classic equispaced-detector weighted FBP: detector samples are rescaled
to a virtual detector through the origin, cosine pre-weighted, ramp filtered
per view in the frequency domain, then backprojected with the 1/U^2
magnification weight and a pi/N_v angular factor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._validation import ConfigurationError, check_sinogram
from .geometry import FanBeamGeometry

_FILTER_KINDS = ("ram-lak", "hann")


@dataclass(frozen=True)
class FbpFilter:
    kind: str = "ram-lak"
    cutoff: float = 1.0

    def __post_init__(self):
        if self.kind not in _FILTER_KINDS:
            raise ConfigurationError(
                f"unknown filter kind {self.kind!r}, expected one of {_FILTER_KINDS}")
        if not 0.0 < self.cutoff <= 1.0:
            raise ConfigurationError("filter cutoff must lie in (0, 1]")


def ramp_response(n_pad: int, spacing: float, filt: FbpFilter) -> np.ndarray:
    """Frequency response of the discrete ramp on a padded circle.

    Built from the spatial-domain kernel h[0] = 1/(4 s^2),
    h[n] = -1/(pi n s)^2 for odd n, 0 for even n (wrapped symmetrically),
    which keeps the DC behavior of the discrete Radon transform correct;
    sampling |omega| directly would bias flat regions.
    """
    kernel = np.zeros(n_pad)
    kernel[0] = 1.0 / (4.0 * spacing ** 2)
    odd = np.arange(1, n_pad // 2 + 1, 2)
    vals = -1.0 / (np.pi * odd * spacing) ** 2
    kernel[odd] = vals
    kernel[-odd] = vals
    response = np.fft.rfft(kernel).real
    freqs = np.fft.rfftfreq(n_pad, d=spacing)
    nyquist = 0.5 / spacing
    keep = freqs <= filt.cutoff * nyquist + 1e-15
    response = np.where(keep, response, 0.0)
    if filt.kind == "hann":
        window = 0.5 * (1.0 + np.cos(np.pi * freqs / (filt.cutoff * nyquist)))
        response = response * np.where(keep, window, 0.0)
    return response


def fbp(y, geometry: FanBeamGeometry, image_shape: tuple[int, int],
        pixel_size: float = 1.0, filt: FbpFilter | None = None,
        clip_negative: bool = False) -> np.ndarray:
    """Reconstruct an image from a fan-beam sinogram.

    Raw output may be negative; pass ``clip_negative=True`` for display.
    """
    if filt is None:
        filt = FbpFilter()
    if geometry.num_views < 2:
        raise ConfigurationError("FBP needs at least 2 views")
    y2d = check_sinogram(y, geometry)
    n_det = geometry.num_detectors
    scale = geometry.source_to_center / geometry.source_to_detector
    virtual_spacing = geometry.detector_spacing * scale
    # detector coordinates rescaled onto the virtual detector through origin
    s_virt = (np.arange(n_det) - 0.5 * (n_det - 1)) * virtual_spacing
    cosine = geometry.source_to_center / np.sqrt(
        geometry.source_to_center ** 2 + s_virt ** 2)
    weighted = y2d * cosine[None, :]

    n_pad = 1
    while n_pad < 2 * n_det:
        n_pad *= 2
    response = ramp_response(n_pad, virtual_spacing, filt)
    spectra = np.fft.rfft(weighted, n=n_pad, axis=1)
    filtered = np.fft.irfft(spectra * response[None, :], n=n_pad, axis=1)[:, :n_det]
    filtered = np.ascontiguousarray(filtered * virtual_spacing)

    out = np.zeros(image_shape, dtype=np.float64)
    angles_rad = np.deg2rad(geometry.angles_deg)
    _kernels.fbp_backproject_kernel(
        filtered, angles_rad, n_det, virtual_spacing,
        geometry.source_to_center, pixel_size, out)
    if clip_negative:
        np.maximum(out, 0.0, out=out)
    return out
