"""Quadrature on log-uniform grids.

Every integral in the package has the shape ``int e^{w u} phi(u) du`` in the
log variable ``u = ln x``.  Node values are joined by local cubic Lagrange
interpolants (4-point stencil, 3-point at the two end cells); the exponential
weight is integrated exactly against each basis polynomial, so the rule stays
fourth-order even when the exponential varies faster than the grid.

Two families are exposed:

* running exponential filters (``left``: ``int_{-inf}^t e^{-a(t-u)} phi du``,
  ``right``: ``int_t^inf e^{-a(u-t)} phi du``) evaluated at all nodes by a
  first-order recursion and at arbitrary points by a partial-cell correction;
* plain integrals ``int f(x) dx`` (:func:`cumulative_integral`).

Outside the grid the integrand follows the tails of the grid function and
is integrated in closed form.
"""

from __future__ import annotations

import math

import numpy as np
from scipy import integrate
from scipy.signal import lfilter
from scipy.special import gammaincc, gammaln

from ..errors import DomainError, InputError
from .grid import GridFunction, TailAsymptote

__all__ = [
    "cumulative_integral",
    "running_integral",
    "exp_filter",
    "exp_filter_at",
    "tail_exp_integral",
    "ExpFilter",
]

_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
_GL_X = 0.5 * (_GL_X + 1.0)
_GL_W = 0.5 * _GL_W

# stencil offsets relative to the left node of a cell
_FIRST = (0, 1, 2)
_INTERIOR = (-1, 0, 1, 2)
_LAST = (-1, 0, 1)


def _lagrange(stencil, s: np.ndarray) -> np.ndarray:
    """Lagrange basis on integer ``stencil`` evaluated at ``s``; shape (len(stencil),) + s.shape."""
    out = []
    for i, si in enumerate(stencil):
        v = np.ones_like(s)
        for j, sj in enumerate(stencil):
            if j != i:
                v = v * (s - sj) / (si - sj)
        out.append(v)
    return np.array(out)


def _moments(w: float, lo, hi, stencil, ref: str) -> np.ndarray:
    """``int_lo^hi e^{w (s - s_ref)} l_p(s) ds`` with ``s_ref`` = ``lo`` or ``hi``.

    ``lo``/``hi`` are arrays of cell coordinates in ``[0, 1]``; the result has
    shape ``(len(stencil), len(lo))``.
    """
    lo = np.atleast_1d(np.asarray(lo, dtype=float))
    hi = np.atleast_1d(np.asarray(hi, dtype=float))
    width = hi - lo
    panels = max(1, int(math.ceil(abs(w) * float(np.max(width, initial=0.0)) / 4.0)))
    total = np.zeros((len(stencil), len(lo)))
    anchor = hi if ref == "hi" else lo
    for k in range(panels):
        a = lo + width * (k / panels)
        s = a[None, :] + (width / panels)[None, :] * _GL_X[:, None]  # (g, M)
        kern = np.exp(w * (s - anchor[None, :])) * _GL_W[:, None] * (width / panels)[None, :]
        basis = _lagrange(stencil, s)  # (p, g, M)
        total += np.einsum("pgm,gm->pm", basis, kern)
    return total


def _cell_sums(values: np.ndarray, weights_first, weights_mid, weights_last) -> np.ndarray:
    """Per-cell weighted sums over the appropriate stencil, length N-1."""
    v = values
    n = len(v)
    s = np.empty(n - 1)
    s[0] = weights_first @ v[0:3]
    s[-1] = weights_last @ v[n - 3 : n]
    if n > 3:
        s[1:-1] = (
            weights_mid[0] * v[0 : n - 3]
            + weights_mid[1] * v[1 : n - 2]
            + weights_mid[2] * v[2 : n - 1]
            + weights_mid[3] * v[3:n]
        )
    return s


def _decay_integral(mu: float, c: float, delta: float) -> float:
    """``int_0^inf e^{-mu s} (1 + s/c)^delta ds`` for ``mu > 0``."""
    if delta == 0.0:
        return 1.0 / mu
    x = mu * c
    if x <= 600.0:
        q = gammaincc(delta + 1.0, x)
        if q > 0.0:
            log_val = -delta * math.log(c) + x + gammaln(delta + 1.0) + math.log(q) - (delta + 1.0) * math.log(mu)
            return math.exp(log_val)
    # asymptotic series in 1/(mu c)
    total, term = 1.0, 1.0
    for k in range(1, 40):
        term *= (delta - k + 1.0) / x
        total += term
        if abs(term) < 1e-17 * abs(total):
            break
    return total / mu


def tail_exp_integral(tail: TailAsymptote, rate: float, side: str) -> float:
    """Integral of ``tail`` against ``e^{-rate |u - u_anchor|}`` over its half-line.

    ``side='left'`` integrates over ``(-inf, ln anchor]``; ``'right'`` over
    ``[ln anchor, inf)``.  Raises :class:`DomainError` if the integral diverges.
    """
    total = 0.0
    if tail.offset != 0.0:
        if rate <= 0.0:
            raise DomainError(f"constant tail not integrable against rate {rate}")
        total += tail.offset / rate
    if tail.scale != 0.0:
        mu = rate + tail.exponent if side == "left" else rate - tail.exponent
        if mu <= 0.0:
            raise DomainError(
                f"{side} tail with exponent {tail.exponent} not integrable against rate {rate}"
            )
        c = abs(math.log(tail.anchor / tail.reference)) if tail.log_power else 1.0
        total += tail.scale * _decay_integral(mu, c, tail.log_power)
    return total


class ExpFilter:
    """Running exponential filter of a grid function.

    ``side='left'``:  ``F(t) = int_{-inf}^t e^{-rate (t-u)} phi(u) du``
    ``side='right'``: ``F(t) = int_t^{inf} e^{-rate (u-t)} phi(u) du``

    ``phi`` is the cubic-stencil interpolant of the node values, continued by
    the grid function's tails.  Set ``seed`` to override the tail integral
    at the starting end (e.g. ``0.0`` to truncate the integral at the grid).
    """

    def __init__(self, phi: GridFunction, rate: float, side: str, seed: float | None = None):
        if rate <= 0.0:
            raise InputError("filter rate must be positive")
        if side not in ("left", "right"):
            raise InputError(f"side must be 'left' or 'right', got {side!r}")
        self.phi = phi
        self.rate = float(rate)
        self.side = side
        self.h = phi.log_step
        self.t0 = float(phi.log_abscissae[0])
        if seed is None:
            tail = phi.left_tail if side == "left" else phi.right_tail
            anchor = phi.abscissae[0] if side == "left" else phi.abscissae[-1]
            if tail.anchor != anchor:
                tail = tail.moved(anchor)
            seed = tail_exp_integral(tail, rate, side)
        self.seed = float(seed)
        self.nodes = exp_filter(phi.values, self.rate, self.h, side, self.seed)

    def __call__(self, x):
        t = np.log(np.asarray(x, dtype=float))
        return exp_filter_at(self.phi.values, self.nodes, self.rate, self.h, self.t0, t, self.side)

    def at_log(self, t):
        return exp_filter_at(self.phi.values, self.nodes, self.rate, self.h, self.t0, t, self.side)


def exp_filter(values: np.ndarray, rate: float, h: float, side: str, seed: float) -> np.ndarray:
    """Node values of the running exponential filter (see :class:`ExpFilter`)."""
    values = np.asarray(values, dtype=float)
    if side == "right":
        return exp_filter(values[::-1], rate, h, "left", seed)[::-1].copy()
    z = rate * h
    decay = math.exp(-z)
    w_first = h * _moments(z, 0.0, 1.0, _FIRST, "hi")[:, 0]
    w_mid = h * _moments(z, 0.0, 1.0, _INTERIOR, "hi")[:, 0]
    w_last = h * _moments(z, 0.0, 1.0, _LAST, "hi")[:, 0]
    s = _cell_sums(values, w_first, w_mid, w_last)
    out = np.empty_like(values)
    out[0] = seed
    y, _ = lfilter([1.0], [1.0, -decay], s, zi=[decay * seed])
    out[1:] = y
    return out


def _locate(t, t0: float, h: float, n: int):
    u = (np.asarray(t, dtype=float) - t0) / h
    if np.any(u < -1e-9) or np.any(u > n - 1 + 1e-9):
        raise DomainError("filter evaluated outside the grid")
    j = np.clip(np.floor(u).astype(int), 0, n - 2)
    delta = np.clip(u - j, 0.0, 1.0)
    return j, delta


def _stencil_sums(values, j, moments_by_kind, n):
    """Sum weights times node values choosing the stencil by cell index."""
    out = np.zeros(len(j))
    kinds = ((j == 0), (j == n - 2) & (j != 0), (j > 0) & (j < n - 2))
    for mask, stencil, mom in zip(kinds, (_FIRST, _LAST, _INTERIOR), moments_by_kind):
        if not mask.any():
            continue
        idx = j[mask]
        acc = np.zeros(mask.sum())
        for p, off in enumerate(stencil):
            acc += mom[p][mask] * values[idx + off]
        out[mask] = acc
    return out


def exp_filter_at(values, nodes, rate, h, t0, t, side):
    """Filter value at arbitrary log-abscissae ``t`` inside the grid."""
    values = np.asarray(values, dtype=float)
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    n = len(values)
    j, delta = _locate(t_arr, t0, h, n)
    z = rate * h
    if side == "left":
        moms = [_moments(z, np.zeros_like(delta), delta, st, "hi") for st in (_FIRST, _LAST, _INTERIOR)]
        out = np.exp(-z * delta) * nodes[j] + h * _stencil_sums(values, j, moms, n)
    else:
        moms = [_moments(-z, delta, np.ones_like(delta), st, "lo") for st in (_FIRST, _LAST, _INTERIOR)]
        out = np.exp(-z * (1.0 - delta)) * nodes[j + 1] + h * _stencil_sums(values, j, moms, n)
    return float(out[0]) if np.ndim(t) == 0 else out


# -- plain integrals ----------------------------------------------------------


def running_integral(f: GridFunction) -> np.ndarray:
    """``int_{x_0}^{x_j} f(x) dx`` at every node ``x_j``."""
    h = f.log_step
    t = f.log_abscissae
    w_first = h * _moments(h, 0.0, 1.0, _FIRST, "lo")[:, 0]
    w_mid = h * _moments(h, 0.0, 1.0, _INTERIOR, "lo")[:, 0]
    w_last = h * _moments(h, 0.0, 1.0, _LAST, "lo")[:, 0]
    # cell j weight carries e^{t_j}; apply it after the stencil sum
    s = _cell_sums(f.values, w_first, w_mid, w_last) * np.exp(t[:-1])
    return np.concatenate([[0.0], np.cumsum(s)])


def _interior_integral(f: GridFunction, running: np.ndarray, x) -> float:
    """``int_{x_0}^{x} f`` for ``x`` inside the grid."""
    h = f.log_step
    t = f.log_abscissae
    j, delta = _locate(np.atleast_1d(math.log(x)), t[0], h, len(t))
    moms = [_moments(h, np.zeros_like(delta), delta, st, "lo") for st in (_FIRST, _LAST, _INTERIOR)]
    partial = h * math.exp(t[j[0]]) * _stencil_sums(f.values, j, moms, len(t))[0]
    return float(running[j[0]] + partial)


def _power_piece(tail: TailAsymptote, a: float, b: float, side: str) -> float:
    """``int_a^b`` of the non-constant part of ``tail`` (``a < b``, one side of the grid)."""
    if tail.scale == 0.0 or a == b:
        return 0.0

    def semi_infinite(at: float) -> float:
        moved = tail.moved(at)
        c_at = abs(math.log(at / tail.reference)) if tail.log_power else 1.0
        if side == "left":
            mu = 1.0 + tail.exponent
            if mu <= 0.0:
                raise DomainError("left tail not integrable at 0")
            return at * moved.scale * _decay_integral(mu, c_at, tail.log_power)
        mu = -(1.0 + tail.exponent)
        if mu <= 0.0:
            raise DomainError("right tail not integrable at infinity")
        return at * moved.scale * _decay_integral(mu, c_at, tail.log_power)

    if side == "left":
        # int_a^b = int_0^b - int_0^a ; a may be 0
        upper = semi_infinite(b)
        lower = semi_infinite(a) if a > 0 else 0.0
        return upper - lower
    if math.isinf(b):
        return semi_infinite(a)
    try:
        return semi_infinite(a) - semi_infinite(b)
    except DomainError:
        val, _ = integrate.quad(lambda x: float(tail(x)) - tail.offset, a, b, limit=200)
        return val


def cumulative_integral(f: GridFunction, lo: float, hi: float) -> float:
    """``int_lo^hi f(x) dx`` using the grid interior plus closed-form tails.

    ``lo`` may be 0 and ``hi`` may be ``inf`` when the tails are integrable.
    """
    if not lo <= hi:
        raise InputError(f"cumulative_integral needs lo <= hi, got {lo} > {hi}")
    if lo < 0:
        raise InputError("integration domain is x >= 0")
    if lo == hi:
        return 0.0
    x0, xn = f.x_min, f.x_max
    running = running_integral(f)
    total = 0.0
    # left tail piece
    if lo < x0:
        b = min(hi, x0)
        tail = f.left_tail
        total += tail.offset * (b - lo) + _power_piece(tail, lo, b, "left")
    # interior piece
    a_in, b_in = max(lo, x0), min(hi, xn)
    if a_in < b_in:
        total += _interior_integral(f, running, b_in) - _interior_integral(f, running, a_in)
    # right tail piece
    if hi > xn:
        a = max(lo, xn)
        tail = f.right_tail
        if math.isinf(hi) and tail.offset != 0.0:
            raise DomainError("right tail with nonzero limit is not integrable to infinity")
        const = 0.0 if tail.offset == 0.0 else tail.offset * (hi - a)
        total += const + _power_piece(tail, a, hi, "right")
    return float(total)
