"""Functions of a positive variable sampled on a log-uniform grid.

A :class:`GridFunction` stores node values on ``x_j = x_0 * q**j`` and two
parametric tails used outside the grid.  Between nodes the function is a
shape-preserving (PCHIP) interpolant in ``ln x``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.interpolate import PchipInterpolator

from ..errors import InputError

__all__ = [
    "TailAsymptote",
    "GridFunction",
    "log_grid",
    "log_grid_between",
    "default_half_width",
    "fit_tail",
]

DEFAULT_POINTS = 4001


def default_half_width(sigma: float, T: float) -> float:
    """Half-width ``L`` of the log grid: ``max(8 sigma sqrt(T), 4)``."""
    return max(8.0 * sigma * math.sqrt(T), 4.0)


def log_grid(reference: float, half_width: float, points: int = DEFAULT_POINTS) -> np.ndarray:
    """Log-uniform nodes spanning ``[reference e^-L, reference e^L]``."""
    if reference <= 0 or half_width <= 0:
        raise InputError("log grid needs a positive reference and half-width")
    return log_grid_between(reference * math.exp(-half_width), reference * math.exp(half_width), points)


def log_grid_between(lo: float, hi: float, points: int = DEFAULT_POINTS) -> np.ndarray:
    if not 0 < lo < hi:
        raise InputError(f"log grid needs 0 < lo < hi, got lo={lo}, hi={hi}")
    if points < 4:
        raise InputError("log grid needs at least 4 nodes")
    t = np.linspace(math.log(lo), math.log(hi), points)
    return np.exp(t)


@dataclass(frozen=True)
class TailAsymptote:
    """Tail ``offset + scale * (x/anchor)**exponent * (u/u_anchor)**log_power``.

    ``u = ln(x/reference)``.  This is the ``c + a x^gamma (ln x)^delta`` form
    written relative to the junction node ``anchor`` so that ``scale`` is the
    deviation from ``offset`` at the junction and never over/underflows.
    """

    offset: float = 0.0
    scale: float = 0.0
    exponent: float = 0.0
    log_power: float = 0.0
    anchor: float = 1.0
    reference: float = 1.0

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.scale == 0.0:
            return np.full_like(x, self.offset)
        ratio = np.log(x / self.anchor)
        out = self.scale * np.exp(self.exponent * ratio)
        if self.log_power != 0.0:
            u = np.log(x / self.reference)
            u_anchor = math.log(self.anchor / self.reference)
            out = out * np.abs(u / u_anchor) ** self.log_power
        return self.offset + out

    @property
    def is_constant(self) -> bool:
        return self.scale == 0.0

    @property
    def log_coefficient(self) -> float:
        """``ln|a|`` of the equivalent ``a x^gamma |ln(x/ref)|^delta`` form."""
        if self.scale == 0.0:
            return -math.inf
        u_anchor = abs(math.log(self.anchor / self.reference)) if self.log_power else 1.0
        return (
            math.log(abs(self.scale))
            - self.exponent * math.log(self.anchor / self.reference)
            - self.log_power * math.log(u_anchor)
        )

    def moved(self, anchor: float) -> "TailAsymptote":
        """Same curve re-anchored at ``anchor``."""
        if self.scale == 0.0:
            return replace(self, anchor=anchor)
        new_scale = float(self(anchor) - self.offset)
        return replace(self, anchor=anchor, scale=new_scale)


def constant_tail(value: float, anchor: float, reference: float) -> TailAsymptote:
    return TailAsymptote(offset=float(value), anchor=anchor, reference=reference)


def fit_tail(
    x: np.ndarray,
    values: np.ndarray,
    side: str,
    exponent: float,
    offset: float,
    reference: float,
    fraction: float = 0.05,
    max_log_power: float = 60.0,
) -> TailAsymptote:
    """Fit ``offset + a x^exponent |ln(x/ref)|^delta`` to the outer nodes.

    ``delta`` is fitted by least squares over the outer ``fraction`` of the
    nodes; the scale is then pinned so the tail matches the junction node.
    """
    n = len(x)
    m = max(3, int(round(fraction * n)))
    if side == "left":
        xs, vs, anchor, v_anchor = x[:m], values[:m], x[0], values[0]
    elif side == "right":
        xs, vs, anchor, v_anchor = x[-m:], values[-m:], x[-1], values[-1]
    else:
        raise InputError(f"side must be 'left' or 'right', got {side!r}")
    dev = vs - offset
    dev_anchor = float(v_anchor - offset)
    tiny = 1e-290
    if abs(dev_anchor) < tiny:
        return TailAsymptote(offset=offset, anchor=float(anchor), reference=reference, exponent=exponent)
    log_power = 0.0
    u = np.log(xs / reference)
    usable = (np.abs(dev) > tiny) & (np.sign(dev) == np.sign(dev_anchor)) & (np.abs(u) > 1e-8)
    same_side = np.all(np.sign(u[usable]) == np.sign(math.log(anchor / reference))) if usable.any() else False
    if usable.sum() >= 3 and same_side and abs(math.log(anchor / reference)) > 1e-8:
        y = np.log(np.abs(dev[usable])) - exponent * np.log(xs[usable] / anchor)
        design = np.column_stack([np.ones(usable.sum()), np.log(np.abs(u[usable]))])
        coeffs, *_ = np.linalg.lstsq(design, y, rcond=None)
        if np.isfinite(coeffs[1]):
            log_power = float(np.clip(coeffs[1], 0.0, max_log_power))
    return TailAsymptote(
        offset=float(offset),
        scale=dev_anchor,
        exponent=float(exponent),
        log_power=log_power,
        anchor=float(anchor),
        reference=float(reference),
    )


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Bounded function of ``x > 0`` on a log-uniform grid with parametric tails."""

    abscissae: np.ndarray
    values: np.ndarray
    left_tail: TailAsymptote
    right_tail: TailAsymptote
    reference: float = 1.0
    _pchip: PchipInterpolator | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        x = np.asarray(self.abscissae, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or x.shape != v.shape:
            raise InputError("abscissae and values must be 1-d arrays of equal length")
        if len(x) < 4:
            raise InputError("a grid function needs at least 4 nodes")
        if np.any(x <= 0) or np.any(np.diff(x) <= 0):
            raise InputError("abscissae must be positive and strictly increasing")
        ratios = x[1:] / x[:-1]
        if np.max(np.abs(ratios / ratios[0] - 1.0)) > 1e-12:
            raise InputError("abscissae must be log-uniform")
        if not np.all(np.isfinite(v)):
            raise InputError("grid values must be finite")
        object.__setattr__(self, "abscissae", x)
        object.__setattr__(self, "values", v)

    # -- construction -----------------------------------------------------
    @classmethod
    def from_function(
        cls,
        f: Callable[[np.ndarray], np.ndarray],
        abscissae: np.ndarray,
        reference: float = 1.0,
        left_tail: TailAsymptote | None = None,
        right_tail: TailAsymptote | None = None,
    ) -> "GridFunction":
        x = np.asarray(abscissae, dtype=float)
        v = np.asarray(f(x), dtype=float)
        if left_tail is None:
            left_tail = constant_tail(v[0], x[0], reference)
        if right_tail is None:
            right_tail = constant_tail(v[-1], x[-1], reference)
        return cls(x, v, left_tail, right_tail, reference)

    @classmethod
    def from_samples(
        cls, xs: np.ndarray, ys: np.ndarray, abscissae: np.ndarray, reference: float = 1.0
    ) -> "GridFunction":
        """Resample scattered ``(x, y)`` data (strictly increasing ``x``) onto a log grid.

        Values are held flat beyond the sample range.
        """
        xs = np.asarray(xs, dtype=float)
        ys = np.asarray(ys, dtype=float)
        if xs.ndim != 1 or xs.shape != ys.shape or len(xs) < 2:
            raise InputError("samples need matching 1-d x and y arrays with at least two rows")
        if np.any(xs <= 0) or np.any(np.diff(xs) <= 0):
            raise InputError("sample abscissae must be positive and strictly increasing")
        interp = PchipInterpolator(np.log(xs), ys, extrapolate=False)

        def f(x):
            t = np.clip(np.log(x), math.log(xs[0]), math.log(xs[-1]))
            return interp(t)

        return cls.from_function(f, abscissae, reference)

    def with_values(
        self,
        values: np.ndarray,
        left_tail: TailAsymptote | None = None,
        right_tail: TailAsymptote | None = None,
    ) -> "GridFunction":
        values = np.asarray(values, dtype=float)
        if left_tail is None:
            left_tail = constant_tail(values[0], self.abscissae[0], self.reference)
        if right_tail is None:
            right_tail = constant_tail(values[-1], self.abscissae[-1], self.reference)
        return GridFunction(self.abscissae, values, left_tail, right_tail, self.reference)

    # -- geometry -----------------------------------------------------------
    @property
    def log_abscissae(self) -> np.ndarray:
        return np.log(self.abscissae)

    @property
    def log_step(self) -> float:
        t = self.log_abscissae
        return float((t[-1] - t[0]) / (len(t) - 1))

    @property
    def x_min(self) -> float:
        return float(self.abscissae[0])

    @property
    def x_max(self) -> float:
        return float(self.abscissae[-1])

    def __len__(self) -> int:
        return len(self.abscissae)

    # -- evaluation -----------------------------------------------------------
    def _interp(self) -> PchipInterpolator:
        if self._pchip is None:
            object.__setattr__(self, "_pchip", PchipInterpolator(self.log_abscissae, self.values))
        return self._pchip

    def __call__(self, x):
        x_arr = np.asarray(x, dtype=float)
        scalar = x_arr.ndim == 0
        x_arr = np.atleast_1d(x_arr)
        if np.any(x_arr <= 0):
            raise InputError("grid functions are defined for x > 0 only")
        out = np.empty_like(x_arr)
        lo = x_arr < self.abscissae[0]
        hi = x_arr > self.abscissae[-1]
        mid = ~(lo | hi)
        if mid.any():
            out[mid] = self._interp()(np.log(x_arr[mid]))
        if lo.any():
            out[lo] = self.left_tail(x_arr[lo])
        if hi.any():
            out[hi] = self.right_tail(x_arr[hi])
        return float(out[0]) if scalar else out

    def derivative(self, x):
        """First derivative in ``x`` of the interior interpolant."""
        x = np.asarray(x, dtype=float)
        return self._interp().derivative()(np.log(x)) / x

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    def junction_mismatch(self) -> float:
        """Largest relative gap between a tail and its junction node."""
        gaps = []
        for tail, node, val in (
            (self.left_tail, self.abscissae[0], self.values[0]),
            (self.right_tail, self.abscissae[-1], self.values[-1]),
        ):
            t_val = float(tail(node))
            gaps.append(abs(t_val - val) / max(abs(val), 1e-300) if val != 0 else abs(t_val))
        return max(gaps)
