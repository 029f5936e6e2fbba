"""Reference payoff for the uncertain-volatility checks."""

from __future__ import annotations

import numpy as np

from ..uvm.core import Payoff

__all__ = ["quadratic_payoff_function", "symmetric_quadratic_payoff"]


def quadratic_payoff_function(x):
    """Piecewise quadratic, 0 below 1/2 and 1 above 2, with ``h(x) = 1 - h(1/x)``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        inv = 1.0 / x
    out = np.where(
        x <= 0.5,
        0.0,
        np.where(x <= 1.0, 2.0 * (x - 0.5) ** 2, np.where(x <= 2.0, 1.0 - 2.0 * (inv - 0.5) ** 2, 1.0)),
    )
    return float(out) if out.ndim == 0 else out


def symmetric_quadratic_payoff(abscissae=None) -> Payoff:
    """The quadratic payoff with ``x0 = 1/2`` and convex/concave switch at ``b0 = 1``."""
    return Payoff.from_function(quadratic_payoff_function, 0.5, 1.0, abscissae)
