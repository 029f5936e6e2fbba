"""Empirical convergence order of a sequence of approximations."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from ..errors import InputError

__all__ = ["ConvergenceReport", "convergence_diagnostic"]


@dataclass(frozen=True)
class ConvergenceReport:
    order: float
    monotone: bool
    errors: dict[int, float]
    excluded: list[int] = field(default_factory=list)


def convergence_diagnostic(values: Mapping[int, float], exact: float) -> ConvergenceReport:
    """Least-squares slope of ``-log|error|`` against ``log n``.

    Exact hits are left out of the fit and listed in ``excluded``; the order
    is ``nan`` when fewer than two points remain.
    """
    if len(values) < 3:
        raise InputError("need at least three values of n")
    if not math.isfinite(exact):
        raise InputError("exact value must be finite")
    ns = sorted(int(n) for n in values)
    errors = {n: abs(float(values[n]) - exact) for n in ns}
    excluded = [n for n in ns if errors[n] == 0.0]
    used = [n for n in ns if errors[n] > 0.0]
    monotone = all(errors[a] >= errors[b] for a, b in zip(ns[:-1], ns[1:]))
    if len(used) < 2:
        return ConvergenceReport(math.nan, monotone, errors, excluded)
    slope = np.polyfit(np.log(used), np.log([errors[n] for n in used]), 1)[0]
    return ConvergenceReport(float(-slope), monotone, errors, excluded)
