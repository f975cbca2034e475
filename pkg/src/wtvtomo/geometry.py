"""Fan-beam acquisition geometry.

A point source moves on a circle of radius ``source_to_center`` around the
image origin; a flat detector with equally spaced cells sits perpendicular to
the source-origin axis at distance ``source_to_detector`` from the source.
View angles are given in degrees and span [0, 180).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ._validation import ConfigurationError


@dataclass(frozen=True, eq=False)
class FanBeamGeometry:
    angles_deg: np.ndarray
    num_detectors: int
    detector_spacing: float
    source_to_center: float
    source_to_detector: float

    def __eq__(self, other):
        # generated dataclass equality is ambiguous on the angle array
        if not isinstance(other, FanBeamGeometry):
            return NotImplemented
        return (self.num_detectors == other.num_detectors
                and self.detector_spacing == other.detector_spacing
                and self.source_to_center == other.source_to_center
                and self.source_to_detector == other.source_to_detector
                and np.array_equal(self.angles_deg, other.angles_deg))

    def __post_init__(self):
        angles = np.asarray(self.angles_deg, dtype=np.float64)
        if angles.ndim != 1 or angles.size == 0:
            raise ConfigurationError("angles_deg must be a non-empty 1-D sequence")
        if np.any(np.diff(angles) <= 0):
            raise ConfigurationError("view angles must be strictly increasing")
        if angles[0] < 0 or angles[-1] >= 180.0:
            raise ConfigurationError("view angles must lie in [0, 180)")
        if self.num_detectors < 1:
            raise ConfigurationError("num_detectors must be >= 1")
        if self.detector_spacing <= 0:
            raise ConfigurationError("detector_spacing must be positive")
        if not self.source_to_detector > self.source_to_center > 0:
            raise ConfigurationError(
                "need source_to_detector > source_to_center > 0"
            )
        object.__setattr__(self, "angles_deg", angles)

    @property
    def num_views(self) -> int:
        return int(self.angles_deg.size)

    @property
    def num_rays(self) -> int:
        return self.num_views * self.num_detectors

    def check_source_clearance(self, width: int, height: int, pixel_size: float = 1.0):
        """The source must stay outside the image (beyond half its diagonal)."""
        half_diag = 0.5 * math.hypot(width * pixel_size, height * pixel_size)
        if self.source_to_center <= half_diag:
            raise ConfigurationError(
                "source_to_center must exceed half the image diagonal "
                f"({self.source_to_center} <= {half_diag})"
            )

    def to_dict(self) -> dict:
        return {
            "angles_deg": [float(a) for a in self.angles_deg],
            "num_detectors": int(self.num_detectors),
            "detector_spacing": float(self.detector_spacing),
            "source_to_center": float(self.source_to_center),
            "source_to_detector": float(self.source_to_detector),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FanBeamGeometry":
        try:
            return cls(
                angles_deg=np.asarray(d["angles_deg"], dtype=np.float64),
                num_detectors=int(d["num_detectors"]),
                detector_spacing=float(d["detector_spacing"]),
                source_to_center=float(d["source_to_center"]),
                source_to_detector=float(d["source_to_detector"]),
            )
        except KeyError as exc:
            raise ConfigurationError(f"geometry dict missing field {exc}") from exc

    @classmethod
    def standard(cls, side: int, num_views: int, *, pixel_size: float = 1.0,
                 num_detectors: int | None = None) -> "FanBeamGeometry":
        """Default acquisition for a ``side`` x ``side`` image.

        Source orbit radius 2x the image diagonal, detector at 4x the
        diagonal, 2x ``side`` detector cells sized so the detector exactly
        covers the shadow of the image's circumscribed circle, and
        ``num_views`` angles uniform over [0, 180).
        """
        if side < 1:
            raise ConfigurationError("side must be >= 1")
        if num_views < 1:
            raise ConfigurationError("num_views must be >= 1")
        diag = math.hypot(side, side) * pixel_size
        r_src = 2.0 * diag
        r_det = 4.0 * diag
        if num_detectors is None:
            num_detectors = 2 * side
        # width of the circumscribed circle's shadow on the detector plane
        half_fan = math.asin((0.5 * diag) / r_src)
        det_width = 2.0 * r_det * math.tan(half_fan)
        spacing = det_width / num_detectors
        angles = np.arange(num_views, dtype=np.float64) * (180.0 / num_views)
        return cls(
            angles_deg=angles,
            num_detectors=int(num_detectors),
            detector_spacing=spacing,
            source_to_center=r_src,
            source_to_detector=r_det,
        )


def unit_square_pixel_size(image_shape) -> float:
    """Pixel size placing the image on the unit square.

    Working in object-size units keeps the projector and gradient blocks of
    the stacked operator on comparable scales, which the solver's uniform
    step rule needs to make progress on both duals.
    """
    return 1.0 / max(int(image_shape[0]), int(image_shape[1]))
