"""Estimator-style reconstruction API.

Each reconstructor maps sinogram rows to image rows through ``fit`` /
``transform`` with scikit-learn parameter semantics (``get_params``,
``set_params``, ``clone``). ``fit`` performs the reconstruction and stores
per-sample results in trailing-underscore attributes; ``transform``
re-applies the frozen configuration to new sinograms.

Sinogram batches are (n_samples, m) arrays in the view-major flat layout;
reconstructed batches are (n_samples, n) row-major image rows.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin

from ._validation import ConfigurationError, check_image
from .fbp import FbpFilter, fbp
from .geometry import FanBeamGeometry, unit_square_pixel_size
from .operators import FanBeamOperator, operator_norm
from .solver import (SolverConfig, chambolle_pock, early_stopped_tv,
                     ir_reweighted_solve, solve_global_tv)
from .weights import compute_weights, unit_weights


def _as_batch(Y, n_rays: int) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    if Y.ndim == 1:
        Y = Y[None, :]
    if Y.ndim != 2 or Y.shape[1] != n_rays:
        raise ConfigurationError(
            f"sinogram batch must be (n_samples, {n_rays}), got {Y.shape}")
    if not np.all(np.isfinite(Y)):
        raise ConfigurationError("sinogram batch contains non-finite values")
    return Y


class _ReconstructorBase(BaseEstimator, TransformerMixin):
    """Shared geometry handling and batch plumbing."""

    def __init__(self, geometry=None, side=None, pixel_size=None):
        self.geometry = geometry
        self.side = side
        self.pixel_size = pixel_size

    def _operator(self) -> FanBeamOperator:
        if self.geometry is None:
            raise ConfigurationError("geometry must be set before use")
        if self.side is None:
            raise ConfigurationError("side (image pixels per edge) must be set")
        pixel_size = self.pixel_size
        if pixel_size is None:
            pixel_size = unit_square_pixel_size((self.side, self.side))
        return FanBeamOperator((self.side, self.side), self.geometry,
                               pixel_size=pixel_size)

    def _reconstruct_one(self, op, y2d):  # pragma: no cover - abstract
        raise NotImplementedError

    def fit(self, Y, X_tilde=None):
        """Reconstruct every row of Y and store the results.

        ``X_tilde`` (n_samples, n) supplies externally produced intermediate
        images for reconstructors that accept them; others ignore it.
        """
        op = self._operator()
        Y = _as_batch(Y, op.geometry.num_rays)
        self.operator_ = op
        self.results_ = []
        images = []
        for i in range(Y.shape[0]):
            y2d = Y[i].reshape(op.sino_shape)
            x_t = None
            if X_tilde is not None:
                x_t = np.asarray(X_tilde, dtype=np.float64)[i].reshape(op.image_shape)
            out = self._reconstruct_one(op, y2d, x_t)
            self.results_.append(out)
            images.append(self._image_of(out).ravel())
        self.images_ = np.stack(images, axis=0)
        return self

    @staticmethod
    def _image_of(out):
        return out.image if hasattr(out, "image") else out

    def transform(self, Y):
        """Apply the frozen configuration to new sinogram rows."""
        op = self._operator()
        Y = _as_batch(Y, op.geometry.num_rays)
        rows = []
        for i in range(Y.shape[0]):
            out = self._reconstruct_one(op, Y[i].reshape(op.sino_shape), None)
            rows.append(self._image_of(out).ravel())
        return np.stack(rows, axis=0)

    def fit_transform(self, Y, X_tilde=None):
        return self.fit(Y, X_tilde).images_


class FBPReconstructor(_ReconstructorBase):
    """One-shot analytic reconstruction (ramp-filtered backprojection)."""

    def __init__(self, geometry=None, side=None, pixel_size=None,
                 filter_kind="ram-lak", cutoff=1.0, clip_negative=False):
        super().__init__(geometry=geometry, side=side, pixel_size=pixel_size)
        self.filter_kind = filter_kind
        self.cutoff = cutoff
        self.clip_negative = clip_negative

    def _reconstruct_one(self, op, y2d, x_tilde=None):
        filt = FbpFilter(kind=self.filter_kind, cutoff=self.cutoff)
        return fbp(y2d, op.geometry, op.image_shape, pixel_size=op.pixel_size,
                   filt=filt, clip_negative=self.clip_negative)


class _SolverReconstructorBase(_ReconstructorBase):
    """Shared solver configuration and cached operator-norm estimate."""

    def __init__(self, geometry=None, side=None, pixel_size=None, lam=1.0,
                 max_iters=2000, stop_tol=1e-7, record_every=10, beta=1.0,
                 norm_iters=200, norm_seed=0):
        super().__init__(geometry=geometry, side=side, pixel_size=pixel_size)
        self.lam = lam
        self.max_iters = max_iters
        self.stop_tol = stop_tol
        self.record_every = record_every
        self.beta = beta
        self.norm_iters = norm_iters
        self.norm_seed = norm_seed

    def _config(self) -> SolverConfig:
        return SolverConfig(lam=self.lam, beta=self.beta,
                            max_iters=self.max_iters, stop_tol=self.stop_tol,
                            record_every=self.record_every,
                            norm_iters=self.norm_iters, norm_seed=self.norm_seed)

    def _norm(self, op) -> float:
        cached = getattr(self, "_norm_cache", None)
        if cached is None or cached[0] is not op:
            value = operator_norm(op, iters=self.norm_iters, seed=self.norm_seed)
            self._norm_cache = (op, value)
        return self._norm_cache[1]


class TVReconstructor(_SolverReconstructorBase):
    """Globally regularized TV reconstruction (unit weights)."""

    def _reconstruct_one(self, op, y2d, x_tilde=None):
        return solve_global_tv(op, y2d, self._config(),
                               op_norm_value=self._norm(op))


class AdaptiveTVReconstructor(_SolverReconstructorBase):
    """Weighted-TV reconstruction with weights frozen from an intermediate
    image.

    ``intermediate`` selects how the intermediate is produced per sample:
    "fbp" (analytic reconstruction of the same sinogram), "tv" (global TV
    stopped after ``k_early`` iterations), or "given" (caller passes
    ``X_tilde`` to ``fit``; ``transform`` is unavailable in that mode).
    """

    def __init__(self, geometry=None, side=None, pixel_size=None, lam=1.0,
                 eta=2e-5, p=0.3, intermediate="fbp", k_early=50,
                 intermediate_lam=None, filter_kind="ram-lak", cutoff=1.0,
                 max_iters=2000, stop_tol=1e-7, record_every=10, beta=1.0,
                 norm_iters=200, norm_seed=0):
        super().__init__(geometry=geometry, side=side, pixel_size=pixel_size,
                         lam=lam, max_iters=max_iters, stop_tol=stop_tol,
                         record_every=record_every, beta=beta,
                         norm_iters=norm_iters, norm_seed=norm_seed)
        self.eta = eta
        self.p = p
        self.intermediate = intermediate
        self.k_early = k_early
        self.intermediate_lam = intermediate_lam
        self.filter_kind = filter_kind
        self.cutoff = cutoff

    def _intermediate_image(self, op, y2d, x_tilde):
        if self.intermediate == "given":
            if x_tilde is None:
                raise ConfigurationError(
                    "intermediate='given' requires X_tilde at fit time")
            return check_image(x_tilde)
        if self.intermediate == "fbp":
            filt = FbpFilter(kind=self.filter_kind, cutoff=self.cutoff)
            return fbp(y2d, op.geometry, op.image_shape,
                       pixel_size=op.pixel_size, filt=filt)
        if self.intermediate == "tv":
            lam = self.lam if self.intermediate_lam is None else self.intermediate_lam
            cfg = SolverConfig(lam=lam, norm_iters=self.norm_iters,
                               norm_seed=self.norm_seed)
            return early_stopped_tv(op, y2d, self.k_early, cfg,
                                    op_norm_value=self._norm(op))
        raise ConfigurationError(
            f"unknown intermediate mode {self.intermediate!r}")

    def _reconstruct_one(self, op, y2d, x_tilde=None):
        x_t = self._intermediate_image(op, y2d, x_tilde)
        w = compute_weights(x_t, self.eta, self.p)
        result = chambolle_pock(op, y2d, w, self._config(),
                                op_norm_value=self._norm(op))
        result.x_tilde = x_t
        result.weights = w
        return result


class ReweightedTVReconstructor(_SolverReconstructorBase):
    """Iteratively reweighted TV (rules "A" and "B")."""

    def __init__(self, geometry=None, side=None, pixel_size=None, lam=1.0,
                 rule="A", eta=2e-3, p=0.0, reweight_every=10,
                 max_iters=2000, stop_tol=1e-7, record_every=10, beta=1.0,
                 norm_iters=200, norm_seed=0):
        super().__init__(geometry=geometry, side=side, pixel_size=pixel_size,
                         lam=lam, max_iters=max_iters, stop_tol=stop_tol,
                         record_every=record_every, beta=beta,
                         norm_iters=norm_iters, norm_seed=norm_seed)
        self.rule = rule
        self.eta = eta
        self.p = p
        self.reweight_every = reweight_every

    def _reconstruct_one(self, op, y2d, x_tilde=None):
        return ir_reweighted_solve(op, y2d, self._config(), rule=self.rule,
                                   eta=self.eta, p=self.p,
                                   reweight_every=self.reweight_every,
                                   op_norm_value=self._norm(op))
