"""Input validation helpers shared by the public entry points."""

from __future__ import annotations

import numpy as np


class ConfigurationError(ValueError):
    """Bad parameters, shapes, or file contents. CLI exit code 2."""


class DependencyError(RuntimeError):
    """A required input artifact is missing. CLI exit code 3."""


class DivergenceError(RuntimeError):
    """Non-finite values appeared during iteration. CLI exit code 4."""

    def __init__(self, iteration: int):
        self.iteration = iteration
        super().__init__(f"non-finite iterate at iteration {iteration}")


def check_image(x, *, name: str = "image") -> np.ndarray:
    """Coerce to a finite float64 2-D array."""
    arr = np.asarray(x, dtype=np.float64)
    if arr.ndim != 2:
        raise ConfigurationError(f"{name} must be 2-D, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} contains non-finite values")
    return arr


def check_sinogram(y, geometry, *, name: str = "sinogram") -> np.ndarray:
    """Coerce to float64 with shape (num_views, num_detectors).

    Accepts the flat view-major layout of the file format and reshapes it.
    """
    arr = np.asarray(y, dtype=np.float64)
    shape = (geometry.num_views, geometry.num_detectors)
    if arr.ndim == 1:
        if arr.size != shape[0] * shape[1]:
            raise ConfigurationError(
                f"{name} has {arr.size} entries, geometry expects {shape[0] * shape[1]}"
            )
        arr = arr.reshape(shape)
    elif arr.shape != shape:
        raise ConfigurationError(f"{name} shape {arr.shape} does not match geometry {shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigurationError(f"{name} contains non-finite values")
    return arr


def check_gradient_field(f, *, name: str = "gradient field") -> np.ndarray:
    """Coerce to float64 with shape (2, H, W): horizontal then vertical."""
    arr = np.asarray(f, dtype=np.float64)
    if arr.ndim != 3 or arr.shape[0] != 2:
        raise ConfigurationError(f"{name} must have shape (2, H, W), got {arr.shape}")
    return arr


def check_positive(value: float, name: str) -> float:
    value = float(value)
    if not np.isfinite(value) or value <= 0:
        raise ConfigurationError(f"{name} must be positive, got {value}")
    return value


def check_in_range(value: float, name: str, lo: float, hi: float,
                   *, include_lo: bool = True, include_hi: bool = True) -> float:
    value = float(value)
    ok_lo = value >= lo if include_lo else value > lo
    ok_hi = value <= hi if include_hi else value < hi
    if not (np.isfinite(value) and ok_lo and ok_hi):
        lo_b = "[" if include_lo else "("
        hi_b = "]" if include_hi else ")"
        raise ConfigurationError(f"{name} must lie in {lo_b}{lo}, {hi}{hi_b}, got {value}")
    return value
