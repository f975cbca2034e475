"""Estimator API: scikit-learn parameter semantics and agreement with the
underlying functional interfaces."""

import numpy as np
import pytest
from sklearn.base import clone

from wtvtomo import ConfigurationError
from wtvtomo.estimators import (AdaptiveTVReconstructor, FBPReconstructor,
                                ReweightedTVReconstructor, TVReconstructor)
from wtvtomo.fbp import FbpFilter, fbp
from wtvtomo.operators import operator_norm
from wtvtomo.phantoms import Disk, PhantomSpec, make_phantom
from wtvtomo.solver import SolverConfig, solve_global_tv
from wtvtomo.weights import compute_weights

LAM = 2e-3


@pytest.fixture(scope="module")
def bundle(op16):
    disk = make_phantom(PhantomSpec(size=16, elements=(Disk(0.0, 0.0, 0.6, 1.0),)))
    box = make_phantom(PhantomSpec(size=16, elements=(Disk(0.3, -0.2, 0.35, 0.7),)))
    Y = np.stack([op16.project(disk).ravel(), op16.project(box).ravel()])
    return {"op": op16, "gt": disk, "Y": Y}


def _estimator_kwargs(op):
    return dict(geometry=op.geometry, side=op.image_shape[0],
                pixel_size=op.pixel_size)


def test_get_set_params_round_trip(bundle):
    est = TVReconstructor(**_estimator_kwargs(bundle["op"]), lam=LAM)
    params = est.get_params()
    assert params["lam"] == LAM
    assert params["side"] == 16
    est.set_params(lam=0.5, max_iters=7)
    assert est.lam == 0.5 and est.max_iters == 7
    with pytest.raises(ValueError):
        est.set_params(no_such_param=1)


def test_clone_preserves_params_and_drops_state(bundle):
    est = AdaptiveTVReconstructor(**_estimator_kwargs(bundle["op"]), lam=LAM,
                                  eta=1e-4, p=0.5, max_iters=15)
    est.fit(bundle["Y"])
    assert hasattr(est, "images_")
    fresh = clone(est)
    assert fresh.get_params() == est.get_params()
    assert not hasattr(fresh, "images_")


def test_fbp_estimator_matches_function(bundle):
    op = bundle["op"]
    est = FBPReconstructor(**_estimator_kwargs(op), filter_kind="hann",
                           cutoff=0.8, clip_negative=True)
    images = est.fit_transform(bundle["Y"])
    assert images.shape == (2, 256)
    for i in range(2):
        direct = fbp(bundle["Y"][i].reshape(op.sino_shape), op.geometry,
                     op.image_shape, pixel_size=op.pixel_size,
                     filt=FbpFilter(kind="hann", cutoff=0.8),
                     clip_negative=True)
        assert np.array_equal(images[i].reshape(op.image_shape), direct)


def test_tv_estimator_matches_solver(bundle):
    op = bundle["op"]
    est = TVReconstructor(**_estimator_kwargs(op), lam=LAM, max_iters=40,
                          stop_tol=0.0)
    est.fit(bundle["Y"][:1])
    cfg = SolverConfig(lam=LAM, max_iters=40, stop_tol=0.0)
    direct = solve_global_tv(op, bundle["Y"][0].reshape(op.sino_shape), cfg,
                             op_norm_value=operator_norm(op))
    assert np.array_equal(est.images_[0].reshape(op.image_shape), direct.image)
    assert est.results_[0].iters_run == direct.iters_run


def test_estimators_are_deterministic(bundle):
    op = bundle["op"]
    runs = []
    for _ in range(2):
        est = ReweightedTVReconstructor(**_estimator_kwargs(op), lam=LAM,
                                        rule="B", eta=6e-3, max_iters=25)
        runs.append(est.fit_transform(bundle["Y"]))
    assert np.array_equal(runs[0], runs[1])


def test_adaptive_given_mode_uses_supplied_intermediate(bundle):
    op = bundle["op"]
    est = AdaptiveTVReconstructor(**_estimator_kwargs(op), lam=LAM, eta=1e-4,
                                  p=0.3, intermediate="given", max_iters=20)
    est.fit(bundle["Y"][:1], X_tilde=bundle["gt"].ravel()[None, :])
    result = est.results_[0]
    assert np.array_equal(result.x_tilde, bundle["gt"])
    assert result.weights == compute_weights(bundle["gt"], 1e-4, 0.3)


def test_adaptive_given_mode_requires_x_tilde(bundle):
    est = AdaptiveTVReconstructor(**_estimator_kwargs(bundle["op"]),
                                  intermediate="given", max_iters=5)
    with pytest.raises(ConfigurationError):
        est.fit(bundle["Y"][:1])
    est.fit(bundle["Y"][:1], X_tilde=bundle["gt"].ravel()[None, :])
    with pytest.raises(ConfigurationError):
        est.transform(bundle["Y"][:1])


def test_adaptive_fbp_mode_transform_matches_fit(bundle):
    est = AdaptiveTVReconstructor(**_estimator_kwargs(bundle["op"]), lam=LAM,
                                  eta=1e-4, p=0.3, intermediate="fbp",
                                  max_iters=20)
    fitted = est.fit(bundle["Y"]).images_
    assert np.array_equal(est.transform(bundle["Y"]), fitted)


def test_adaptive_rejects_unknown_intermediate(bundle):
    est = AdaptiveTVReconstructor(**_estimator_kwargs(bundle["op"]),
                                  intermediate="oracle", max_iters=5)
    with pytest.raises(ConfigurationError):
        est.fit(bundle["Y"][:1])


def test_reweighted_estimator_records_final_weights(bundle):
    est = ReweightedTVReconstructor(**_estimator_kwargs(bundle["op"]), lam=LAM,
                                    rule="A", max_iters=25, reweight_every=10)
    est.fit(bundle["Y"][:1])
    result = est.results_[0]
    assert result.final_weights is not None
    assert result.final_weights.shape == (16, 16)
    assert len(result.weight_events) >= 1
    assert np.all(np.isfinite(est.images_))


def test_reweighted_estimator_rejects_unknown_rule(bundle):
    est = ReweightedTVReconstructor(**_estimator_kwargs(bundle["op"]),
                                    rule="C", max_iters=5)
    with pytest.raises(ConfigurationError):
        est.fit(bundle["Y"][:1])


def test_batch_validation(bundle):
    op = bundle["op"]
    est = FBPReconstructor(**_estimator_kwargs(op))
    with pytest.raises(ConfigurationError):
        est.fit(np.zeros((1, 7)))
    bad = bundle["Y"].copy()
    bad[0, 0] = np.nan
    with pytest.raises(ConfigurationError):
        est.fit(bad)
    est.fit(bundle["Y"][0])  # a single flat sinogram is promoted to a batch
    assert est.images_.shape == (1, 256)


def test_missing_geometry_or_side_is_rejected(bundle):
    with pytest.raises(ConfigurationError):
        FBPReconstructor(side=16).fit(bundle["Y"])
    with pytest.raises(ConfigurationError):
        FBPReconstructor(geometry=bundle["op"].geometry).fit(bundle["Y"])
