"""Explicit recursion for the uncertain volatility model under Erlang horizons.

With volatility in ``[sigma1, sigma2]`` and ``n`` exponential stages of rate
``lambda = n/T``, each stage solves

    -x^2 sigma2^2/2 [U'']^+ + x^2 sigma1^2/2 [U'']^- + lambda (U_{k+1} - U_k) = 0

in closed form: ``U_{k+1} = T_b[U_k]`` where ``b`` is the point at which the
new stage switches from convex to concave.

Implementation notes
--------------------
In the log variable ``t = ln x`` every integral reduces to exponential
filters of the previous stage (see :mod:`randhorizon.numerics.quadrature`).
Writing ``F_i`` for the free-space resolvent of the ``sigma_i`` diffusion,

    F_2 = c_2 (L_{gamma2-1} + R_{gamma2}),   c_2 = gamma2 (gamma2-1) / (2 gamma2 - 1)
    F_1 = c_1 (L_{-gamma1} + R_{1-gamma1}),  c_1 = gamma1 (gamma1-1) / (1 - 2 gamma1)

the operator is ``F_2(x) + (x/b)^gamma2 (beta - F_2(b))`` below ``b`` and
``F_1(x) + (x/b)^gamma1 (beta - F_1(b))`` above it, and the kernels satisfy
``H^i_b[phi](y) = y^-gamma_i F_i(b y) - F_i(b)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from ..errors import (
    BoundaryError,
    DegenerateBoundaryError,
    InputError,
    NumericalError,
    StageError,
)
from ..numerics import (
    DEFAULT_ROOT_TOL,
    Bracket,
    ExpFilter,
    GridFunction,
    TailAsymptote,
    find_root_bracketed,
    fit_tail,
    log_grid,
)
from ..numerics.grid import DEFAULT_POINTS

__all__ = [
    "UvmModel",
    "Exponents",
    "StageFunction",
    "Payoff",
    "AdmissibilityReport",
    "exponents",
    "stage_exponent",
    "mixing_density",
    "beta_functional",
    "h_kernel",
    "apply_T",
    "evaluate_T",
    "solve_boundary",
    "iterate_scheme",
    "check_payoff_admissible",
    "uvm_grid",
    "crossing_margin",
    "hjb_residual",
    "shape_violation",
]


@dataclass(frozen=True)
class UvmModel:
    sigma1: float
    sigma2: float
    T: float
    n: int

    def __post_init__(self):
        if not (0.0 <= self.sigma1 <= self.sigma2) or self.sigma2 <= 0.0:
            raise InputError(f"need 0 <= sigma1 <= sigma2 and sigma2 > 0, got {self.sigma1}, {self.sigma2}")
        if not self.T > 0.0:
            raise InputError(f"horizon T must be positive, got {self.T}")
        if int(self.n) != self.n or self.n < 1:
            raise InputError(f"number of stages must be a positive integer, got {self.n}")

    @property
    def lam(self) -> float:
        """Stage rate ``n / T``."""
        return self.n / self.T


def stage_exponent(sigma: float, lam: float, branch: str) -> float:
    """Root of ``(sigma^2/2) g (g - 1) = lam``; ``branch`` is ``'upper'`` (> 1) or ``'lower'`` (< 0)."""
    if sigma <= 0.0:
        raise InputError("stage exponent needs a positive volatility")
    disc = math.sqrt(1.0 + 8.0 * lam / (sigma * sigma))
    return 0.5 * (1.0 + disc) if branch == "upper" else 0.5 * (1.0 - disc)


@dataclass(frozen=True)
class Exponents:
    gamma1: float
    gamma2: float

    def __post_init__(self):
        if not (self.gamma1 < 0.0 and self.gamma2 > 1.0):
            raise InputError(f"need gamma1 < 0 < 1 < gamma2, got {self.gamma1}, {self.gamma2}")
        if self.gamma2 > 1.0 - self.gamma1 + 1e-12:
            raise InputError("need gamma2 <= 1 - gamma1 (sigma1 <= sigma2)")

    @property
    def spread(self) -> float:
        return self.gamma2 - self.gamma1

    # resolvent constants
    @property
    def c2(self) -> float:
        g = self.gamma2
        return g * (g - 1.0) / (2.0 * g - 1.0)

    @property
    def c1(self) -> float:
        g = self.gamma1
        return g * (g - 1.0) / (1.0 - 2.0 * g)

    # mixing-density weights
    @property
    def w2(self) -> float:
        return self.gamma2 * (self.gamma2 - 1.0) / self.spread

    @property
    def w1(self) -> float:
        return self.gamma1 * (self.gamma1 - 1.0) / self.spread


def exponents(model: UvmModel) -> Exponents:
    """``gamma1`` (from ``sigma1``) and ``gamma2`` (from ``sigma2``) for ``lambda = n/T``."""
    if model.sigma1 <= 0.0:
        raise InputError("gamma1 is unavailable for sigma1 = 0; use the digital scheme")
    return Exponents(
        gamma1=stage_exponent(model.sigma1, model.lam, "lower"),
        gamma2=stage_exponent(model.sigma2, model.lam, "upper"),
    )


def mixing_density(exp: Exponents, r):
    """Density ``f`` on ``(0, inf)`` with ``beta[phi](b) = int phi(b r) f(r) dr``."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise InputError("mixing density is defined for r > 0")
    with np.errstate(over="ignore", under="ignore"):
        out = np.where(
            r <= 1.0,
            exp.w2 * r ** (exp.gamma2 - 2.0),
            exp.w1 * r ** (exp.gamma1 - 2.0),
        )
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class StageFunction:
    U: GridFunction
    b: float
    k: int


@dataclass(frozen=True, eq=False)
class Payoff:
    """Terminal payoff: zero on ``(0, x0]``, one on ``[1/x0, inf)``, convex then concave at ``b0``."""

    h: GridFunction
    x0: float
    b0: float
    function: Callable[[np.ndarray], np.ndarray] | None = field(default=None, repr=False)

    @classmethod
    def from_function(
        cls,
        f: Callable[[np.ndarray], np.ndarray],
        x0: float,
        b0: float,
        abscissae: np.ndarray | None = None,
    ) -> "Payoff":
        if abscissae is None:
            abscissae = log_grid(1.0, 4.0, DEFAULT_POINTS)
        grid_fn = GridFunction.from_function(f, abscissae, reference=1.0)
        return cls(grid_fn, x0, b0, f)

    def on_grid(self, abscissae: np.ndarray) -> GridFunction:
        """The payoff re-evaluated (or re-interpolated) on new nodes."""
        if self.function is not None:
            values = np.asarray(self.function(abscissae), dtype=float)
        else:
            values = self.h(abscissae)
        left = TailAsymptote(offset=float(self.h.left_tail.offset), anchor=float(abscissae[0]))
        right = TailAsymptote(offset=float(self.h.right_tail.offset), anchor=float(abscissae[-1]))
        return GridFunction(abscissae, values, left, right, 1.0)


# -- operator machinery ---------------------------------------------------------


class _Resolvents:
    """The four exponential filters of ``phi`` shared by beta, H and T_b."""

    def __init__(self, phi: GridFunction, exp: Exponents):
        self.phi = phi
        self.exp = exp
        g1, g2 = exp.gamma1, exp.gamma2
        self.L2 = ExpFilter(phi, g2 - 1.0, "left")
        self.R2 = ExpFilter(phi, g2, "right")
        self.L1 = ExpFilter(phi, -g1, "left")
        self.R1 = ExpFilter(phi, 1.0 - g1, "right")
        self.t = phi.log_abscissae

    def _check(self, b):
        b_arr = np.asarray(b, dtype=float)
        if np.any(b_arr <= 0):
            raise InputError("boundary must be positive")
        if np.any(b_arr < self.phi.x_min * (1 - 1e-12)) or np.any(b_arr > self.phi.x_max * (1 + 1e-12)):
            raise BoundaryError(
                f"boundary outside the grid [{self.phi.x_min:.4g}, {self.phi.x_max:.4g}]"
            )

    def beta(self, b):
        self._check(b)
        t = np.log(np.asarray(b, dtype=float))
        return self.exp.w2 * self.L2.at_log(t) + self.exp.w1 * self.R1.at_log(t)

    def F2_nodes(self):
        return self.exp.c2 * (self.L2.nodes + self.R2.nodes)

    def F1_nodes(self):
        return self.exp.c1 * (self.L1.nodes + self.R1.nodes)

    def F2(self, t):
        return self.exp.c2 * (self.L2.at_log(t) + self.R2.at_log(t))

    def F1(self, t):
        return self.exp.c1 * (self.L1.at_log(t) + self.R1.at_log(t))

    def apply(self, b: float) -> np.ndarray:
        self._check(b)
        tb = math.log(b)
        beta = float(self.beta(b))
        g1, g2 = self.exp.gamma1, self.exp.gamma2
        below = self.t <= tb
        out = np.empty_like(self.t)
        out[below] = self.F2_nodes()[below] + np.exp(-g2 * (tb - self.t[below])) * (beta - self.F2(tb))
        above = ~below
        out[above] = self.F1_nodes()[above] + np.exp(g1 * (self.t[above] - tb)) * (beta - self.F1(tb))
        return out

    def value_at(self, b: float, x) -> np.ndarray:
        """``T_b[phi]`` at arbitrary points inside the grid."""
        self._check(b)
        tb = math.log(b)
        t = np.log(np.atleast_1d(np.asarray(x, dtype=float)))
        beta = float(self.beta(b))
        g1, g2 = self.exp.gamma1, self.exp.gamma2
        out = np.empty_like(t)
        below = t <= tb
        if below.any():
            out[below] = self.F2(t[below]) + np.exp(-g2 * (tb - t[below])) * (beta - self.F2(tb))
        if (~below).any():
            out[~below] = self.F1(t[~below]) + np.exp(g1 * (t[~below] - tb)) * (beta - self.F1(tb))
        return out


def _output_tails(phi: GridFunction, values: np.ndarray, exp: Exponents) -> tuple[TailAsymptote, TailAsymptote]:
    x = phi.abscissae
    left = fit_tail(x, values, "left", exp.gamma2, phi.left_tail.offset, phi.reference)
    right = fit_tail(x, values, "right", exp.gamma1, phi.right_tail.offset, phi.reference)
    return left, right


def beta_functional(phi: GridFunction, b, exp: Exponents):
    """``beta[phi](b) = int_0^inf phi(b r) f(r) dr``."""
    out = _Resolvents(phi, exp).beta(b)
    return float(out) if np.ndim(out) == 0 else out


def h_kernel(phi: GridFunction, b: float, i: int, x, exp: Exponents):
    """Double-integral kernel ``H_b^i[phi](x)``; ``i = 1`` uses ``gamma1``, ``i = 2`` uses ``gamma2``.

    ``b * x`` must lie inside the grid of ``phi``.
    """
    if i not in (1, 2):
        raise InputError("kernel index must be 1 or 2")
    res = _Resolvents(phi, exp)
    res._check(b)
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise InputError("kernel argument must be positive")
    t = math.log(b) + np.log(x)
    gamma = exp.gamma1 if i == 1 else exp.gamma2
    F = res.F1 if i == 1 else res.F2
    with np.errstate(over="ignore"):
        out = np.exp(-gamma * np.log(x)) * F(t) - F(math.log(b))
    return float(out) if np.ndim(out) == 0 else out


def apply_T(phi: GridFunction, b: float, exp: Exponents) -> GridFunction:
    """``T_b[phi]`` on the grid of ``phi``, with fitted power tails."""
    values = _Resolvents(phi, exp).apply(b)
    left, right = _output_tails(phi, values, exp)
    return GridFunction(phi.abscissae, values, left, right, phi.reference)


def evaluate_T(phi: GridFunction, b: float, exp: Exponents, x):
    """``T_b[phi]`` at arbitrary points inside the grid, without resampling."""
    out = _Resolvents(phi, exp).value_at(b, x)
    return float(out[0]) if np.ndim(x) == 0 else out


def _scan_bracket(g: Callable[[float], float], start: float, lo_lim: float, hi_lim: float, max_steps: int = 60):
    """Geometric outward scan (factor 2) from ``start`` until ``g`` changes sign."""
    start = min(max(start, lo_lim), hi_lim)
    g0 = g(start)
    if g0 == 0.0:
        return Bracket(start * (1 - 1e-12), start * (1 + 1e-12)), start
    direction = 2.0 if g0 > 0 else 0.5
    b_prev, g_prev = start, g0
    for _ in range(max_steps):
        b_next = min(max(b_prev * direction, lo_lim), hi_lim)
        if b_next == b_prev:
            break
        g_next = g(b_next)
        if g_next == 0.0 or (g_next > 0) != (g_prev > 0):
            lo, hi = sorted((b_prev, b_next))
            g_lo, g_hi = (g_prev, g_next) if lo == b_prev else (g_next, g_prev)
            return Bracket(lo, hi, g_lo, g_hi), None
        b_prev, g_prev = b_next, g_next
    raise BoundaryError(
        f"no sign change of beta[phi] - phi found scanning from {start:.6g} within [{lo_lim:.4g}, {hi_lim:.4g}]"
    )


def _solve_with(res: _Resolvents, phi: GridFunction, start: float | None, tol: float) -> float:
    values = phi.values
    if np.ptp(values) <= 1e-14 * max(1.0, float(np.max(np.abs(values)))):
        raise DegenerateBoundaryError("phi is constant: every b solves beta[phi](b) = phi(b)")

    def g(b: float) -> float:
        return float(res.beta(b)) - float(phi(b))

    if start is None:
        start = phi.reference
    bracket, exact = _scan_bracket(g, start, phi.x_min, phi.x_max)
    if exact is not None:
        return exact
    return find_root_bracketed(g, bracket, tol)


def solve_boundary(
    phi: GridFunction, exp: Exponents, start: float | None = None, tol: float = DEFAULT_ROOT_TOL
) -> float:
    """Unique ``b > 0`` with ``beta[phi](b) = phi(b)``.

    Raises
    ------
    DegenerateBoundaryError
        ``phi`` is constant.
    BoundaryError
        No sign change inside the grid.
    """
    return _solve_with(_Resolvents(phi, exp), phi, start, tol)


def uvm_grid(payoff: Payoff, model: UvmModel, points: int = DEFAULT_POINTS) -> np.ndarray:
    """Log grid centred at 1 covering ``[x0, 1/x0]`` plus ``max(8 sigma2 sqrt(T), 4)``."""
    half = max(8.0 * model.sigma2 * math.sqrt(model.T), 4.0, 2.0 * abs(math.log(payoff.x0)))
    return log_grid(1.0, half, points)


def iterate_scheme(
    h: Payoff,
    model: UvmModel,
    points: int = DEFAULT_POINTS,
    tol: float = DEFAULT_ROOT_TOL,
    abscissae: np.ndarray | None = None,
) -> list[StageFunction]:
    """Stages ``U^1 .. U^n`` with ``U^{k+1} = T_{b_{k+1}}[U^k]`` and ``U^0 = h``.

    Raises
    ------
    StageError
        A boundary solve failed; ``.stage`` carries the 1-based index.
    """
    exp = exponents(model)
    if abscissae is None:
        abscissae = uvm_grid(h, model, points)
    U = h.on_grid(abscissae)
    start = h.b0
    stages: list[StageFunction] = []
    for k in range(1, model.n + 1):
        try:
            res = _Resolvents(U, exp)
            b = _solve_with(res, U, start, tol)
            values = res.apply(b)
        except NumericalError as err:
            raise StageError(k, str(err)) from err
        left, right = _output_tails(U, values, exp)
        U = GridFunction(abscissae, values, left, right, U.reference)
        stages.append(StageFunction(U, b, k))
        start = b
    return stages


# -- diagnostics ---------------------------------------------------------------


def _second_differences(x: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Second differences in value units at interior nodes (sign of ``v''``)."""
    slopes = np.diff(v) / np.diff(x)
    return np.diff(slopes) * 0.5 * (x[2:] - x[:-2])


def shape_violation(stage: StageFunction, slack: float | None = None, exclude_cells: int = 2) -> float:
    """Largest convexity violation below ``b`` / concavity violation above ``b``.

    Returns the worst offending second difference beyond ``slack``
    (``1e-6 * sup|U|`` by default); ``0.0`` means the split holds.
    """
    x, v = stage.U.abscissae, stage.U.values
    if slack is None:
        slack = 1e-6 * stage.U.sup_norm()
    d2 = _second_differences(x, v)
    xm = x[1:-1]
    h = stage.U.log_step
    far = np.abs(np.log(xm / stage.b)) > exclude_cells * h
    below = (xm < stage.b) & far
    above = (xm > stage.b) & far
    worst = 0.0
    if below.any():
        worst = max(worst, float(np.max(-d2[below] - slack, initial=-np.inf)))
    if above.any():
        worst = max(worst, float(np.max(d2[above] - slack, initial=-np.inf)))
    return max(worst, 0.0)


def crossing_margin(prev: GridFunction, stage: StageFunction) -> float:
    """``min_x (b_k - x)(U^k - U^{k-1})(x)`` over grid nodes (should be >= 0)."""
    x = stage.U.abscissae
    return float(np.min((stage.b - x) * (stage.U.values - prev(x))))


def hjb_residual(
    prev: GridFunction, stage: StageFunction, model: UvmModel, exclude_cells: int = 3, tail_fraction: float = 0.05
) -> np.ndarray:
    """Residual of the stage ODE at interior nodes away from ``b`` and the grid ends."""
    x, v = stage.U.abscissae, stage.U.values
    slopes = np.diff(v) / np.diff(x)
    d2 = 2.0 * np.diff(slopes) / (x[2:] - x[:-2])
    xm = x[1:-1]
    lam = model.lam
    res = (
        -0.5 * xm**2 * model.sigma2**2 * np.maximum(d2, 0.0)
        + 0.5 * xm**2 * model.sigma1**2 * np.maximum(-d2, 0.0)
        + lam * (v[1:-1] - prev(xm))
    )
    h = stage.U.log_step
    m = int(tail_fraction * len(x))
    keep = np.abs(np.log(xm / stage.b)) > exclude_cells * h
    keep[:m] = False
    keep[-m:] = False
    return res[keep]


@dataclass
class AdmissibilityReport:
    passed: bool
    violations: list[str]

    def __str__(self) -> str:
        if self.passed:
            return "payoff admissible"
        return "payoff NOT admissible: " + "; ".join(self.violations)


def check_payoff_admissible(h: Payoff, tol: float = 1e-9) -> AdmissibilityReport:
    """Check continuity, flat zero/one regions, monotonicity and the convex/concave split."""
    x, v = h.h.abscissae, h.h.values
    problems: list[str] = []
    if not 0.0 < h.x0 < 1.0:
        problems.append(f"x0 = {h.x0} not in (0, 1)")
    if not h.x0 < h.b0 < 1.0 / h.x0:
        problems.append(f"b0 = {h.b0} not in (x0, 1/x0)")
    dv = np.diff(v)
    mag = np.abs(dv)
    neighbours = np.maximum(np.concatenate([[0.0], mag[:-1]]), np.concatenate([mag[1:], [0.0]]))
    jumps = (mag > 1e-2) & (mag > 20.0 * neighbours)
    if jumps.any():
        j = int(np.argmax(jumps))
        problems.append(f"continuity: jump of {dv[j]:.3g} between x={x[j]:.6g} and x={x[j + 1]:.6g}")
    if np.min(dv) < -tol:
        j = int(np.argmin(dv))
        problems.append(f"monotonicity: decreases by {-dv[j]:.3g} near x={x[j]:.6g}")
    if np.min(v) < -tol or np.max(v) > 1.0 + tol:
        problems.append("range: values outside [0, 1]")
    if 0.0 < h.x0 < 1.0:
        zero_zone = x <= h.x0 * (1 + 1e-12)
        if zero_zone.any() and np.max(np.abs(v[zero_zone])) > tol:
            problems.append(f"h not identically 0 on (0, {h.x0}]")
        one_zone = x >= (1.0 / h.x0) * (1 - 1e-12)
        if one_zone.any() and np.max(np.abs(v[one_zone] - 1.0)) > tol:
            problems.append(f"h not identically 1 on [{1.0 / h.x0:.6g}, inf)")
    if abs(float(h.h.left_tail(x[0] * 0.5))) > tol:
        problems.append("left tail does not vanish")
    if abs(float(h.h.right_tail(x[-1] * 2.0)) - 1.0) > tol:
        problems.append("right tail does not tend to 1")
    if not jumps.any():
        d2 = _second_differences(x, v)
        slack = 1e-6 * max(float(np.max(np.abs(v))), 1e-300)
        xm = x[1:-1]
        cells = h.h.log_step
        far = np.abs(np.log(xm / h.b0)) > 2 * cells
        if np.any(d2[(xm < h.b0) & far] < -slack):
            problems.append(f"convexity: h not convex on (0, {h.b0}]")
        if np.any(d2[(xm > h.b0) & far] > slack):
            problems.append(f"concavity: h not concave on [{h.b0}, inf)")
    return AdmissibilityReport(not problems, problems)
