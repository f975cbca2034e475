"""Shared fixtures: small reusable operators and the tiny solver-oracle
bundle. Session scope amortizes kernel warm-up; tests never mutate these.
"""

from __future__ import annotations

import time
from dataclasses import replace

import numpy as np
import pytest

from wtvtomo.geometry import FanBeamGeometry, unit_square_pixel_size
from wtvtomo.operators import (FanBeamOperator, grad, grad_adjoint,
                               power_iteration)
from wtvtomo.phantoms import Disk, PhantomSpec, make_phantom
from wtvtomo.solver import SolverConfig, solve_global_tv


def small_operator(side: int, views: int, detectors: int | None = None) -> FanBeamOperator:
    h = unit_square_pixel_size((side, side))
    geom = FanBeamGeometry.standard(side, views, pixel_size=h,
                                    num_detectors=detectors)
    return FanBeamOperator((side, side), geom, pixel_size=h)


@pytest.fixture(scope="session")
def op16() -> FanBeamOperator:
    return small_operator(16, 10)


@pytest.fixture(scope="session")
def op32() -> FanBeamOperator:
    return small_operator(32, 20)


@pytest.fixture(scope="session")
def op48() -> FanBeamOperator:
    return small_operator(48, 24)


@pytest.fixture(scope="session")
def op128() -> FanBeamOperator:
    return small_operator(128, 45)


@pytest.fixture(scope="session")
def disk32() -> np.ndarray:
    return make_phantom(PhantomSpec(size=32, elements=(
        Disk(0.0, 0.0, 0.55, 0.8),)))


# frozen parameters of the tiny noiseless global-TV oracle instance
ORACLE_LAM = 1e-3
ORACLE_BUDGET = 3000


def pgd_smoothed_tv(op: FanBeamOperator, y: np.ndarray, lam: float,
                    stages: tuple[tuple[float, int], ...],
                    x0: np.ndarray | None = None) -> np.ndarray:
    """Projected gradient descent on the smoothed objective
    ||Kx - y||^2 + lam * sum_i sqrt(|Dx|_i^2 + s^2), annealing s downward.

    A deliberately slow, simple reference route: explicit gradient, fixed
    step from a Lipschitz bound (||D||^2 <= 8), non-negativity by clipping.
    """
    norm_k = power_iteration(op.project, op.backproject, op.image_shape,
                             iters=200, seed=3, tol=0.0)
    x = np.zeros(op.image_shape) if x0 is None else x0.copy()
    for s, iters in stages:
        step = 1.0 / (2.0 * norm_k ** 2 + lam * 8.0 / s)
        for _ in range(iters):
            residual = op.project(x) - y
            f = grad(x)
            mag = np.sqrt(f[0] ** 2 + f[1] ** 2 + s * s)
            g = 2.0 * op.backproject(residual) + lam * grad_adjoint(f / mag)
            x = np.maximum(x - step * g, 0.0)
    return x


@pytest.fixture(scope="session")
def tv_oracle(op32, disk32):
    """Budget run, 10x-budget reference, and smoothed-TV gradient-descent
    oracle on the noiseless 32x32 disk instance, with wall times."""
    y = op32.project(disk32)
    cfg = SolverConfig(lam=ORACLE_LAM, max_iters=ORACLE_BUDGET, stop_tol=0.0,
                       record_every=ORACLE_BUDGET)
    t0 = time.perf_counter()
    budget = solve_global_tv(op32, y, cfg)
    t1 = time.perf_counter()
    reference = solve_global_tv(
        op32, y, replace(cfg, max_iters=10 * ORACLE_BUDGET,
                         record_every=10 * ORACLE_BUDGET),
        op_norm_value=budget.op_norm)
    t2 = time.perf_counter()
    pgd = pgd_smoothed_tv(op32, y, ORACLE_LAM,
                          stages=((1e-2, 1500), (1e-3, 3000), (1e-4, 8000)))
    t3 = time.perf_counter()
    return {
        "y": y,
        "lam": ORACLE_LAM,
        "budget": budget,
        "reference": reference,
        "pgd": pgd,
        "seconds_budget": t1 - t0,
        "seconds_reference": t2 - t1,
        "seconds_pgd": t3 - t2,
    }
