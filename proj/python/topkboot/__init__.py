"""Smooth top-k statistics, Gaussian-analog simulation and the multiplier
bootstrap, backed by the C++ core."""

from ._core import (
    CapabilityError,
    DomainError,
    NumericError,
    SmoothTopK,
    __version__,
    capacity,
    conditional_quantile,
    gaussian_analog,
    gaussian_quantile,
    grad_smooth_kth,
    grad_smooth_top_k_sum,
    ks_distance,
    kth_largest,
    list_experiments,
    multiplier_replicates,
    quantile_gap_tolerance,
    rescaled_sum,
    run_config_json,
    sample_data,
    smooth_kth,
    smooth_top_k_sum,
    solve_alpha,
    square_sum_top_d,
    top_k_sum,
    weight_jacobian,
)

__all__ = [
    "CapabilityError",
    "DomainError",
    "NumericError",
    "SmoothTopK",
    "__version__",
    "capacity",
    "conditional_quantile",
    "gaussian_analog",
    "gaussian_quantile",
    "grad_smooth_kth",
    "grad_smooth_top_k_sum",
    "ks_distance",
    "kth_largest",
    "list_experiments",
    "multiplier_replicates",
    "quantile_gap_tolerance",
    "rescaled_sum",
    "run_config_json",
    "sample_data",
    "smooth_kth",
    "smooth_top_k_sum",
    "solve_alpha",
    "square_sum_top_d",
    "top_k_sum",
    "weight_jacobian",
]
