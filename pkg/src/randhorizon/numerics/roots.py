"""Bracketed scalar root finding."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

from scipy.optimize import brentq

from ..errors import BracketError, InputError

__all__ = ["Bracket", "find_root_bracketed", "DEFAULT_ROOT_TOL"]

DEFAULT_ROOT_TOL = 1e-10


@dataclass(frozen=True)
class Bracket:
    """Search interval ``[lo, hi]``; optional cached residuals at the ends."""

    lo: float
    hi: float
    g_lo: float | None = None
    g_hi: float | None = None

    def __post_init__(self):
        if not (math.isfinite(self.lo) and math.isfinite(self.hi)) or not self.lo < self.hi:
            raise InputError(f"bracket needs finite lo < hi, got [{self.lo}, {self.hi}]")

    def tightened(self, lo: float, hi: float) -> "Bracket":
        return Bracket(max(lo, self.lo), min(hi, self.hi))


def find_root_bracketed(
    g: Callable[[float], float],
    bracket: Bracket,
    tol: float = DEFAULT_ROOT_TOL,
) -> float:
    """Zero of a continuous ``g`` inside ``bracket``.

    Brent's method (secant / inverse quadratic steps guarded by bisection);
    the returned root is within ``tol * |root|`` of the true zero.

    Raises
    ------
    BracketError
        If ``g`` does not change sign over the bracket.
    """
    g_lo = bracket.g_lo if bracket.g_lo is not None else g(bracket.lo)
    g_hi = bracket.g_hi if bracket.g_hi is not None else g(bracket.hi)
    if g_lo == 0.0:
        return bracket.lo
    if g_hi == 0.0:
        return bracket.hi
    if not (math.isfinite(g_lo) and math.isfinite(g_hi)) or g_lo * g_hi > 0:
        raise BracketError(
            f"no sign change on [{bracket.lo:.6g}, {bracket.hi:.6g}]: g(lo)={g_lo:.3g}, g(hi)={g_hi:.3g}"
        )
    rtol = max(tol, 4.5e-16)
    return brentq(g, bracket.lo, bracket.hi, xtol=1e-300, rtol=rtol, maxiter=500)
