"""Numerical kernels: grid functions, quadrature, roots, normal CDF, extrapolation."""

from .extrapolation import richardson_extrapolate, richardson_weights
from .grid import (
    GridFunction,
    TailAsymptote,
    default_half_width,
    fit_tail,
    log_grid,
    log_grid_between,
)
from .quadrature import (
    ExpFilter,
    cumulative_integral,
    exp_filter,
    exp_filter_at,
    running_integral,
    tail_exp_integral,
)
from .rng import BLOCK_SIZE, block_rng, map_blocks, thread_cap
from .roots import DEFAULT_ROOT_TOL, Bracket, find_root_bracketed
from .special import std_normal_cdf, std_normal_pdf

__all__ = [
    "BLOCK_SIZE",
    "block_rng",
    "map_blocks",
    "thread_cap",
    "Bracket",
    "DEFAULT_ROOT_TOL",
    "ExpFilter",
    "GridFunction",
    "TailAsymptote",
    "cumulative_integral",
    "default_half_width",
    "exp_filter",
    "exp_filter_at",
    "find_root_bracketed",
    "fit_tail",
    "log_grid",
    "log_grid_between",
    "richardson_extrapolate",
    "richardson_weights",
    "running_integral",
    "std_normal_cdf",
    "std_normal_pdf",
    "tail_exp_integral",
]
