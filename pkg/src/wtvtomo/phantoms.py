"""Piecewise-constant test phantoms and ground-truth loaders.

Shapes are placed in normalized coordinates ([-1, 1] across the image, x to
the right, y up) and rasterized by pixel-center sampling in painter's order:
later elements overwrite earlier ones. All intensities are constant per
shape and lie in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ._validation import ConfigurationError


@dataclass(frozen=True)
class Disk:
    cx: float
    cy: float
    radius: float
    value: float


@dataclass(frozen=True)
class Ellipse:
    cx: float
    cy: float
    a: float
    b: float
    angle_deg: float
    value: float


@dataclass(frozen=True)
class Rectangle:
    cx: float
    cy: float
    width: float
    height: float
    angle_deg: float
    value: float


@dataclass(frozen=True)
class Cross:
    cx: float
    cy: float
    arm_length: float
    arm_width: float
    angle_deg: float
    value: float


Primitive = Disk | Ellipse | Rectangle | Cross


@dataclass(frozen=True)
class PhantomSpec:
    size: int
    elements: tuple

    def __post_init__(self):
        if self.size < 1:
            raise ConfigurationError("phantom size must be >= 1")
        if len(self.elements) == 0:
            raise ConfigurationError("phantom needs at least one element")
        for el in self.elements:
            if not 0.0 <= el.value <= 1.0:
                raise ConfigurationError(
                    f"element intensity {el.value} outside [0, 1]")
        object.__setattr__(self, "elements", tuple(self.elements))


def _rotated(u, v, cx, cy, angle_deg):
    t = math.radians(angle_deg)
    du = u - cx
    dv = v - cy
    return (du * math.cos(t) + dv * math.sin(t),
            -du * math.sin(t) + dv * math.cos(t))


def _mask(el: Primitive, u, v) -> np.ndarray:
    if isinstance(el, Disk):
        return (u - el.cx) ** 2 + (v - el.cy) ** 2 <= el.radius ** 2
    if isinstance(el, Ellipse):
        ru, rv = _rotated(u, v, el.cx, el.cy, el.angle_deg)
        return (ru / el.a) ** 2 + (rv / el.b) ** 2 <= 1.0
    if isinstance(el, Rectangle):
        ru, rv = _rotated(u, v, el.cx, el.cy, el.angle_deg)
        return (np.abs(ru) <= 0.5 * el.width) & (np.abs(rv) <= 0.5 * el.height)
    if isinstance(el, Cross):
        ru, rv = _rotated(u, v, el.cx, el.cy, el.angle_deg)
        half_l = 0.5 * el.arm_length
        half_w = 0.5 * el.arm_width
        bar_h = (np.abs(ru) <= half_l) & (np.abs(rv) <= half_w)
        bar_v = (np.abs(ru) <= half_w) & (np.abs(rv) <= half_l)
        return bar_h | bar_v
    raise ConfigurationError(f"unknown phantom element {type(el).__name__}")


def make_phantom(spec: PhantomSpec) -> np.ndarray:
    """Rasterize a phantom spec to a (size, size) image in [0, 1]."""
    n = spec.size
    centers = (np.arange(n) + 0.5) / n * 2.0 - 1.0
    u = centers[None, :]
    v = -centers[:, None]  # row 0 is the top of the image, y points up
    img = np.zeros((n, n), dtype=np.float64)
    for el in spec.elements:
        img[_mask(el, u, v)] = el.value
    return img


def synthetic_phantom(size: int = 256) -> np.ndarray:
    """Bundled piecewise-constant phantom: homogeneous masses of varying
    contrast inside a body disk, plus a thin cross."""
    spec = PhantomSpec(size=size, elements=(
        Disk(0.0, 0.0, 0.88, 0.25),
        Ellipse(-0.25, 0.20, 0.40, 0.28, 20.0, 0.55),
        Ellipse(0.38, -0.30, 0.26, 0.17, -35.0, 0.45),
        Disk(-0.30, -0.42, 0.12, 0.75),
        Rectangle(0.07, -0.03, 0.22, 0.14, 10.0, 0.65),
        Disk(0.33, 0.42, 0.06, 1.0),
        Cross(-0.05, 0.52, 0.34, 0.035, 0.0, 0.9),
    ))
    return make_phantom(spec)


def coule_phantom(size: int = 256, seed: int = 0, n_ellipses: int = 8) -> np.ndarray:
    """Seeded random phantom of contrasted overlapping uniform ellipses with
    a few small high-intensity dots, in the style of synthetic CT
    training corpora."""
    rng = np.random.default_rng(seed)
    elements = [Disk(0.0, 0.0, 0.9, 0.15)]
    for _ in range(n_ellipses):
        r = 0.55 * math.sqrt(rng.uniform())
        t = rng.uniform(0.0, 2.0 * math.pi)
        elements.append(Ellipse(
            cx=r * math.cos(t), cy=r * math.sin(t),
            a=rng.uniform(0.08, 0.45), b=rng.uniform(0.08, 0.45),
            angle_deg=rng.uniform(0.0, 180.0),
            value=round(rng.uniform(0.2, 0.85), 3)))
    for _ in range(3):
        r = 0.6 * math.sqrt(rng.uniform())
        t = rng.uniform(0.0, 2.0 * math.pi)
        elements.append(Disk(
            cx=r * math.cos(t), cy=r * math.sin(t),
            radius=rng.uniform(0.02, 0.05),
            value=round(rng.uniform(0.9, 1.0), 3)))
    return make_phantom(PhantomSpec(size=size, elements=tuple(elements)))


def load_image(path, size: int | None = None) -> np.ndarray:
    """Load a grayscale ground-truth image from disk, scaled to [0, 1]."""
    from PIL import Image as PILImage

    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"image file not found: {path}")
    with PILImage.open(path) as im:
        im = im.convert("F")
        if size is not None and im.size != (size, size):
            im = im.resize((size, size), PILImage.BILINEAR)
        arr = np.asarray(im, dtype=np.float64)
    lo, hi = float(arr.min()), float(arr.max())
    if hi > lo:
        arr = (arr - lo) / (hi - lo)
    else:
        arr = np.zeros_like(arr)
    return arr


def load_image_dir(directory, size: int | None = None) -> list[np.ndarray]:
    """Load every image in a directory (sorted by name) as ground truths."""
    directory = Path(directory)
    if not directory.is_dir():
        raise ConfigurationError(f"not a directory: {directory}")
    exts = {".png", ".jpg", ".jpeg", ".tif", ".tiff", ".bmp"}
    paths = sorted(p for p in directory.iterdir() if p.suffix.lower() in exts)
    if not paths:
        raise ConfigurationError(f"no images found in {directory}")
    return [load_image(p, size=size) for p in paths]
