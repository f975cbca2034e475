"""Adaptive weight fields for the weighted-TV penalty.

The fixed rule maps an intermediate image's gradient magnitude to weights in
(0, 1]: 1 in exactly flat regions, decaying toward 0 across strong edges.
The two iterative-reweighting rules used by the IR baselines share the same
module so that every weight in the package comes from one gradient
convention.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._validation import ConfigurationError, check_image, check_in_range, check_positive
from .operators import grad, gradient_magnitude


@dataclass(frozen=True, eq=False)
class WeightField:
    data: np.ndarray
    eta: float
    p_exponent: float

    def __eq__(self, other):
        # generated dataclass equality is ambiguous on the weight array
        if not isinstance(other, WeightField):
            return NotImplemented
        return (self.eta == other.eta
                and self.p_exponent == other.p_exponent
                and np.array_equal(self.data, other.data))

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float64)
        if np.any(data <= 0) or np.any(data > 1.0):
            raise ConfigurationError("weight entries must lie in (0, 1]")
        object.__setattr__(self, "data", data)


def weights_from_magnitude(mag, eta: float, p: float) -> np.ndarray:
    """w_i = (eta / sqrt(eta^2 + mag_i^2))^(1-p), elementwise."""
    eta = check_positive(eta, "eta")
    p = check_in_range(p, "p", 0.0, 1.0, include_hi=False)
    mag = np.asarray(mag, dtype=np.float64)
    if np.any(mag < 0):
        raise ConfigurationError("gradient magnitudes must be non-negative")
    # hypot keeps sqrt(eta^2 + mag^2) from overflowing at extreme magnitudes
    w = (eta / np.hypot(eta, mag)) ** (1.0 - p)
    # guard float underflow so entries stay strictly positive
    return np.maximum(w, np.finfo(np.float64).tiny)


def compute_weights(x_tilde, eta: float, p: float) -> WeightField:
    """Fixed adaptive weights from an intermediate image.

    Computed once before solving and frozen for the whole run.
    """
    x_tilde = check_image(x_tilde, name="intermediate image")
    mag = gradient_magnitude(grad(x_tilde))
    return WeightField(weights_from_magnitude(mag, eta, p), float(eta), float(p))


def ir_update_A(x_k, eta: float, p: float = 0.0) -> WeightField:
    """Reweighting rule A: same law as the fixed rule, evaluated on the
    current iterate (p = 0 gives w_i = eta / sqrt(eta^2 + |Dx|_i^2))."""
    return compute_weights(x_k, eta, p)


def ir_update_B(x_k, eta: float) -> WeightField:
    """Reweighting rule B: w_i = exp(-((D_h x)_i^2 + (D_v x)_i^2) / eta^2)."""
    eta = check_positive(eta, "eta")
    x_k = check_image(x_k, name="iterate")
    f = grad(x_k)
    sq = f[0] ** 2 + f[1] ** 2
    # guard float underflow: exp(-t) > 0 for every finite t
    data = np.maximum(np.exp(-sq / (eta * eta)), np.finfo(np.float64).tiny)
    return WeightField(data, float(eta), 0.0)


def unit_weights(image_shape: tuple[int, int]) -> WeightField:
    """All-ones field: the weighted penalty reduces to plain TV."""
    return WeightField(np.ones(image_shape), 1.0, 0.0)
