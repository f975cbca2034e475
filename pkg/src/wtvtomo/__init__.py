"""Few-view fan-beam CT reconstruction with adaptive weighted-TV priors.

The package solves min_x ||Kx - y||^2 + lam * ||w . |Dx|||_1 over x >= 0
with a preconditioned primal-dual scheme, where K is a fan-beam projector,
D the forward-difference gradient, and w an edge-adaptive weight field
derived from an intermediate reconstruction.
"""

from ._validation import ConfigurationError, DependencyError, DivergenceError
from .estimators import (
    AdaptiveTVReconstructor,
    FBPReconstructor,
    ReweightedTVReconstructor,
    TVReconstructor,
)
from .fbp import FbpFilter, fbp
from .geometry import FanBeamGeometry, unit_square_pixel_size
from .metrics import MetricsRecord, metrics_record, psnr, relative_error, ssim
from .noise import NoiseSpec, add_noise, noise_direction
from .operators import (
    FanBeamOperator,
    grad,
    grad_adjoint,
    gradient_magnitude,
    operator_norm,
    power_iteration,
    total_variation,
)
from .phantoms import PhantomSpec, coule_phantom, load_image, make_phantom, synthetic_phantom
from .pipelines import (
    METHOD_KINDS,
    PRESETS,
    PipelineReport,
    ReconMethod,
    extrapolate_to_zero,
    noise_stability_sweep,
    reconstructor_stability_sweep,
    run_method,
    solve_method,
)
from .raster import read_raster, write_raster
from .solver import (
    ReconstructionResult,
    SolverConfig,
    chambolle_pock,
    early_stopped_tv,
    ir_reweighted_solve,
    objective,
    solve_global_tv,
)
from .weights import (
    WeightField,
    compute_weights,
    ir_update_A,
    ir_update_B,
    unit_weights,
    weights_from_magnitude,
)

__version__ = "0.1.0"

__all__ = [
    "AdaptiveTVReconstructor",
    "ConfigurationError",
    "DependencyError",
    "DivergenceError",
    "FBPReconstructor",
    "FanBeamGeometry",
    "FanBeamOperator",
    "FbpFilter",
    "METHOD_KINDS",
    "MetricsRecord",
    "NoiseSpec",
    "PRESETS",
    "PhantomSpec",
    "PipelineReport",
    "ReconMethod",
    "ReconstructionResult",
    "ReweightedTVReconstructor",
    "SolverConfig",
    "TVReconstructor",
    "WeightField",
    "add_noise",
    "chambolle_pock",
    "compute_weights",
    "coule_phantom",
    "early_stopped_tv",
    "extrapolate_to_zero",
    "fbp",
    "grad",
    "grad_adjoint",
    "gradient_magnitude",
    "ir_reweighted_solve",
    "ir_update_A",
    "ir_update_B",
    "load_image",
    "make_phantom",
    "metrics_record",
    "noise_direction",
    "noise_stability_sweep",
    "objective",
    "operator_norm",
    "power_iteration",
    "psnr",
    "read_raster",
    "reconstructor_stability_sweep",
    "relative_error",
    "run_method",
    "solve_global_tv",
    "solve_method",
    "ssim",
    "synthetic_phantom",
    "total_variation",
    "unit_square_pixel_size",
    "unit_weights",
    "weights_from_magnitude",
    "write_raster",
]
