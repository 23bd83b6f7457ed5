from ._core import (
    DgpConfig,
    DimensionError,
    Error,
    InvalidParameter,
    NoInteriorSolution,
    analytic_gaussian_tilt,
    crra_summary,
    estimate_euler,
    gaussian_tilt_root,
    simulate_euler,
    solve_multipliers,
    true_psi_correct,
)

__all__ = [
    "DgpConfig",
    "DimensionError",
    "Error",
    "InvalidParameter",
    "NoInteriorSolution",
    "analytic_gaussian_tilt",
    "crra_summary",
    "estimate_euler",
    "gaussian_tilt_root",
    "simulate_euler",
    "solve_multipliers",
    "true_psi_correct",
]
