"""Sandwich bounds and independent oracles for the randomized schemes."""

from .diagnostics import ConvergenceReport, convergence_diagnostic
from .erlang import ErlangHorizon, erlang_mixture, erlang_pdf
from .fd import bsb_fd_oracle
from .montecarlo import (
    DigitalHittingPolicy,
    HoldToHorizonPolicy,
    Policy,
    PutExercisePolicy,
    mc_lower_bound,
)
from .payoffs import quadratic_payoff_function, symmetric_quadratic_payoff

__all__ = [
    "ConvergenceReport",
    "DigitalHittingPolicy",
    "ErlangHorizon",
    "HoldToHorizonPolicy",
    "Policy",
    "PutExercisePolicy",
    "bsb_fd_oracle",
    "convergence_diagnostic",
    "erlang_mixture",
    "erlang_pdf",
    "mc_lower_bound",
    "quadratic_payoff_function",
    "symmetric_quadratic_payoff",
]
