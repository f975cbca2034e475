"""Raster exchange format: raw little-endian float32 payload plus a JSON
sidecar describing it.

A raster named ``foo.f32`` carries the pixel data (row-major for images,
view-major for sinograms) and ``foo.json`` carries
``{width, height, dtype: "f32le", kind, geometry?, pixel_size?}``.
The format is deliberately trivial so any language can read it.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from ._validation import ConfigurationError, DependencyError
from .geometry import FanBeamGeometry

KINDS = ("image", "sinogram", "weights")
PAYLOAD_SUFFIX = ".f32"


def sidecar_path(path) -> Path:
    return Path(path).with_suffix(".json")


def write_raster(path, array, kind: str, geometry: FanBeamGeometry | None = None,
                 pixel_size: float | None = None,
                 extra: dict | None = None) -> Path:
    """Write a 2-D array as a raster pair; returns the payload path.

    ``extra`` adds informational header keys (readers may ignore them).
    """
    if kind not in KINDS:
        raise ConfigurationError(f"kind must be one of {KINDS}, got {kind!r}")
    array = np.asarray(array)
    if array.ndim != 2:
        raise ConfigurationError(f"raster payload must be 2-D, got shape {array.shape}")
    path = Path(path)
    if path.suffix != PAYLOAD_SUFFIX:
        path = path.with_suffix(PAYLOAD_SUFFIX)
    height, width = array.shape
    header = {
        "width": int(width),
        "height": int(height),
        "dtype": "f32le",
        "kind": kind,
    }
    if geometry is not None:
        header["geometry"] = geometry.to_dict()
    if pixel_size is not None:
        header["pixel_size"] = float(pixel_size)
    if extra:
        for key, value in extra.items():
            header.setdefault(key, value)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_bytes(np.ascontiguousarray(array, dtype="<f4").tobytes())
    sidecar_path(path).write_text(json.dumps(header, indent=1) + "\n")
    return path


def read_raster(path) -> tuple[np.ndarray, dict]:
    """Read a raster pair; returns (float32 2-D array, header dict)."""
    path = Path(path)
    side = sidecar_path(path)
    if not path.exists():
        raise DependencyError(f"raster payload not found: {path}")
    if not side.exists():
        raise DependencyError(f"raster sidecar not found: {side}")
    try:
        header = json.loads(side.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"unparsable raster sidecar {side}: {exc}") from exc
    for key in ("width", "height", "dtype", "kind"):
        if key not in header:
            raise ConfigurationError(f"raster sidecar {side} missing field {key!r}")
    if header["dtype"] != "f32le":
        raise ConfigurationError(f"unsupported raster dtype {header['dtype']!r}")
    if header["kind"] not in KINDS:
        raise ConfigurationError(f"unsupported raster kind {header['kind']!r}")
    width, height = int(header["width"]), int(header["height"])
    payload = path.read_bytes()
    if len(payload) != width * height * 4:
        raise ConfigurationError(
            f"raster payload {path} has {len(payload)} bytes, "
            f"header implies {width * height * 4}")
    data = np.frombuffer(payload, dtype="<f4").reshape(height, width)
    return data.copy(), header


def geometry_from_header(header: dict) -> FanBeamGeometry:
    if "geometry" not in header:
        raise ConfigurationError("raster sidecar carries no geometry block")
    return FanBeamGeometry.from_dict(header["geometry"])
