"""Digital option ``1{x >= K}`` with volatility in ``[0, sigma2]``.

With the lower volatility at zero the recursion needs only the upper branch:
below the strike each stage is

    v^{k+1}(x) = (x/K)^gamma2 [1 + H_K^2[v^k](x/K)]

and ``v^k = 1`` from the strike up.  The exact value is the probability that
the ``sigma2`` geometric Brownian motion touches ``K`` before ``T``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from ..errors import InputError
from ..numerics import (
    ExpFilter,
    GridFunction,
    TailAsymptote,
    default_half_width,
    fit_tail,
    log_grid_between,
    std_normal_cdf,
)
from ..numerics.grid import DEFAULT_POINTS
from .core import stage_exponent

__all__ = [
    "DigitalModel",
    "TableCell",
    "TABLE1_PRINTED",
    "TABLE2_PRINTED",
    "exact_digital_value",
    "exact_digital_value_quad",
    "digital_iterate",
    "digital_value",
    "reproduce_tables",
    "x80_report",
]


@dataclass(frozen=True)
class DigitalModel:
    K: float
    x: float
    sigma2: float
    T: float
    n: int

    def __post_init__(self):
        for name in ("K", "x", "sigma2", "T"):
            if not getattr(self, name) > 0.0:
                raise InputError(f"{name} must be positive, got {getattr(self, name)}")
        if int(self.n) != self.n or self.n < 1:
            raise InputError(f"n must be a positive integer, got {self.n}")

    @property
    def lam(self) -> float:
        return self.n / self.T

    @property
    def gamma2(self) -> float:
        return stage_exponent(self.sigma2, self.lam, "upper")


def _check_positive(**kw):
    for name, v in kw.items():
        if not v > 0.0:
            raise InputError(f"{name} must be positive, got {v}")


def exact_digital_value(K: float, x: float, sigma2: float, T: float) -> float:
    """Probability that ``x exp(sigma2 W_t - sigma2^2 t/2)`` reaches ``K`` by ``T``."""
    _check_positive(K=K, x=x, sigma2=sigma2, T=T)
    if x >= K:
        return 1.0
    m = math.log(K / x)
    mu = -0.5 * sigma2 * sigma2
    sd = sigma2 * math.sqrt(T)
    return float(
        std_normal_cdf((mu * T - m) / sd)
        + math.exp(2.0 * mu * m / sigma2**2) * std_normal_cdf((-mu * T - m) / sd)
    )


def exact_digital_value_quad(K: float, x: float, sigma2: float, T: float) -> float:
    """Same value from the reflection integral over the terminal log-return.

    Integrates the Gaussian density of ``ln(X_T/x)`` weighted by the
    crossing probability of the bridge, truncated at 10 standard deviations.
    """
    _check_positive(K=K, x=x, sigma2=sigma2, T=T)
    if x >= K:
        return 1.0
    m = math.log(K / x)
    var = sigma2 * sigma2 * T
    mean = -0.5 * var
    sd = math.sqrt(var)

    def density(r):
        return math.exp(-((r - mean) ** 2) / (2.0 * var)) / (sd * math.sqrt(2.0 * math.pi))

    lo = mean - 10.0 * sd
    below = 0.0
    if m > lo:
        below, _ = integrate.quad(
            lambda r: math.exp(-2.0 * m * (m - r) / var) * density(r),
            lo,
            m,
            epsabs=1e-13,
            epsrel=1e-12,
            limit=200,
        )
    above = float(std_normal_cdf((mean - m) / sd))
    return float(below + above)


def _digital_grid(model: DigitalModel, points: int) -> np.ndarray:
    half = default_half_width(model.sigma2, model.T)
    half = max(half, math.log(model.K / model.x) + 4.0 * model.sigma2 * math.sqrt(model.T))
    return log_grid_between(model.K * math.exp(-half), model.K, points)


def digital_iterate(
    model: DigitalModel, points: int = DEFAULT_POINTS, keep: str = "all"
) -> list[GridFunction]:
    """Stages ``v^1 .. v^n`` on ``[K e^-L, K]``.

    Each returned function is continued by ``a x^gamma2`` below the grid and
    by ``1`` above ``K``.  ``keep='last'`` returns only ``v^n``.
    """
    x = _digital_grid(model, points)
    g2 = model.gamma2
    c2 = g2 * (g2 - 1.0) / (2.0 * g2 - 1.0)
    t = np.log(x)
    decay = np.exp(-g2 * (t[-1] - t))
    one = TailAsymptote(offset=1.0, anchor=float(x[-1]))
    # v^0 = 0 below K (left limit of the indicator)
    v = GridFunction(x, np.zeros_like(x), TailAsymptote(anchor=float(x[0])), one)
    out: list[GridFunction] = []
    for _ in range(model.n):
        # integrals over [K, inf) cancel against the boundary term, so truncate at K
        F = c2 * (ExpFilter(v, g2 - 1.0, "left").nodes + ExpFilter(v, g2, "right", seed=0.0).nodes)
        values = F + decay * (1.0 - F[-1])
        left = fit_tail(x, values, "left", g2, 0.0, model.K)
        v = GridFunction(x, values, left, one, model.K)
        if keep == "all":
            out.append(v)
    if keep != "all":
        out.append(v)
    return out


def digital_value(model: DigitalModel, points: int = DEFAULT_POINTS) -> float:
    """``v_n^n`` at the model spot."""
    if model.x >= model.K:
        return 1.0
    return float(digital_iterate(model, points, keep="last")[-1](model.x))


# printed reference values, K = 100
TABLE1_PRINTED: dict[tuple[float, float], tuple[float, ...]] = {
    (0.2, 0.5): (0.6884, 0.6978, 0.6981, 0.6982, 0.6982),
    (0.4, 0.5): (0.8279, 0.8330, 0.8332, 0.8333, 0.8333),
    (0.6, 0.5): (0.8754, 0.8789, 0.8790, 0.8790, 0.8791),
    (0.2, 1.0): (0.7693, 0.7763, 0.7765, 0.7766, 0.7767),
    (0.4, 1.0): (0.8697, 0.8734, 0.8735, 0.8735, 0.8736),
    (0.6, 1.0): (0.9030, 0.9055, 0.9056, 0.9056, 0.9056),
}
TABLE2_PRINTED: tuple[float, ...] = (5.8058e-2, 5.7949e-2, 5.7951e-2, 5.7952e-2, 5.7954e-2)
TABLE2_X80_PRINTED: tuple[float, ...] = (6.9973e-2, 6.9430e-2, 6.9419e-2, 6.9415e-2, 6.9411e-2)
TABLE_NS: tuple[int, ...] = (10, 200, 500, 1000)


@dataclass(frozen=True)
class TableCell:
    table: int
    x: float
    sigma2: float
    T: float
    n: int | None  # None for the exact column
    value: float
    printed: float
    tolerance: float

    @property
    def abs_err(self) -> float:
        return abs(self.value - self.printed)

    @property
    def ok(self) -> bool:
        return self.abs_err <= self.tolerance


def _row(table, K, x, sigma2, T, printed, tol, points) -> list[TableCell]:
    cells = []
    for n, ref in zip(TABLE_NS, printed):
        value = digital_value(DigitalModel(K, x, sigma2, T, n), points)
        cells.append(TableCell(table, x, sigma2, T, n, value, ref, tol))
    cells.append(TableCell(table, x, sigma2, T, None, exact_digital_value(K, x, sigma2, T), printed[-1], tol))
    return cells


def reproduce_tables(tables=(1, 2), points: int = DEFAULT_POINTS) -> list[TableCell]:
    """Recompute the published digital tables (Table 2 without its x = 80 row)."""
    cells: list[TableCell] = []
    if 1 in tables:
        for (sigma2, T), printed in TABLE1_PRINTED.items():
            cells.extend(_row(1, 100.0, 95.0, sigma2, T, printed, 2e-4, points))
    if 2 in tables:
        cells.extend(_row(2, 100.0, 50.0, 0.4, 1.0, TABLE2_PRINTED, 1e-5, points))
    return cells


def x80_report(points: int = DEFAULT_POINTS) -> dict[str, object]:
    """Exact values for the x = 80 row at ``T = 1`` and ``T = 0.1``, plus the scheme at ``T = 0.1``."""
    return {
        "exact_T1": exact_digital_value(100.0, 80.0, 0.4, 1.0),
        "exact_T0.1": exact_digital_value(100.0, 80.0, 0.4, 0.1),
        "scheme_T0.1": {n: digital_value(DigitalModel(100.0, 80.0, 0.4, 0.1, n), points) for n in TABLE_NS},
        "printed": dict(zip([*TABLE_NS, "exact"], TABLE2_X80_PRINTED)),
    }
