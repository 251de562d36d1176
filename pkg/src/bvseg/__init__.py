"""Phase-field Mumford-Shah segmentation with BV and H1 phase fields.

Alternating proximal-gradient outer loop, primal-dual inner solver for the
phase-field subproblem, a 1-D sharp-interface limit lab, and a grayscale
image pipeline with a batch CLI.
"""

from .energies import (
    AssumptionReport,
    ModelFunctions,
    ModelParams,
    check_assumptions,
    energy,
    energy_at,
    energy_bv,
    limit_energy_1d,
    phi_star,
)
from .fields import clamp, div, grad, inner, norm1, norm2, norm_inf, pointwise_norm
from .gamma1d import Signal1D, SweepRow, gamma_sweep, solve_1d
from .images import (
    ImageFormatError,
    ImageRecord,
    Metrics,
    add_gaussian_noise,
    load_gray,
    metrics,
    save_gray,
    synth_disk,
    synth_step_1d,
)
from .palm import RunReport, RunRow, SolverParams, solve, step_sizes
from .primal_dual import InnerProblem, PdState, gap_bv, gap_h1, solve_inner
from .prox import (
    aux_primal,
    project_linf_ball,
    prox_clamped_quadratic,
    prox_data_u,
    shrink_quadratic_dual,
)

__version__ = "0.1.0"

__all__ = [
    "AssumptionReport",
    "ImageFormatError",
    "ImageRecord",
    "InnerProblem",
    "Metrics",
    "ModelFunctions",
    "ModelParams",
    "PdState",
    "RunReport",
    "RunRow",
    "Signal1D",
    "SolverParams",
    "SweepRow",
    "add_gaussian_noise",
    "aux_primal",
    "check_assumptions",
    "clamp",
    "div",
    "energy",
    "energy_at",
    "energy_bv",
    "gamma_sweep",
    "gap_bv",
    "gap_h1",
    "grad",
    "inner",
    "limit_energy_1d",
    "load_gray",
    "metrics",
    "norm1",
    "norm2",
    "norm_inf",
    "phi_star",
    "pointwise_norm",
    "project_linf_ball",
    "prox_clamped_quadratic",
    "prox_data_u",
    "save_gray",
    "shrink_quadratic_dual",
    "solve",
    "solve_1d",
    "solve_inner",
    "step_sizes",
    "synth_disk",
    "synth_step_1d",
]
