"""Standard normal distribution helpers."""

from __future__ import annotations

import math

import numpy as np
from scipy.special import ndtr

__all__ = ["std_normal_cdf", "std_normal_pdf"]

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def std_normal_cdf(x):
    """``P[Z <= x]`` for a standard normal ``Z``; full double precision in both tails."""
    out = ndtr(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def std_normal_pdf(x):
    x = np.asarray(x, dtype=float)
    out = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    return float(out) if np.ndim(out) == 0 else out
