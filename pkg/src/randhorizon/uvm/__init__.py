"""Uncertain-volatility recursion and its digital-option specialization."""

from .core import (
    AdmissibilityReport,
    Exponents,
    Payoff,
    StageFunction,
    UvmModel,
    apply_T,
    evaluate_T,
    beta_functional,
    check_payoff_admissible,
    crossing_margin,
    exponents,
    h_kernel,
    hjb_residual,
    iterate_scheme,
    mixing_density,
    shape_violation,
    solve_boundary,
    stage_exponent,
    uvm_grid,
)

__all__ = [
    "AdmissibilityReport",
    "Exponents",
    "Payoff",
    "StageFunction",
    "UvmModel",
    "apply_T",
    "evaluate_T",
    "beta_functional",
    "check_payoff_admissible",
    "crossing_margin",
    "exponents",
    "h_kernel",
    "hjb_residual",
    "iterate_scheme",
    "mixing_density",
    "shape_violation",
    "solve_boundary",
    "stage_exponent",
    "uvm_grid",
]
