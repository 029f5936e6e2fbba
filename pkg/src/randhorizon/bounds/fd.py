"""Explicit finite differences for the uncertain-volatility PDE.

In ``u = ln x`` and time-to-go ``s`` the value solves
``v_s = (nu^2 / 2)(v_uu - v_u)`` with ``nu = sigma2`` where ``v_uu - v_u > 0``
(``v`` convex in ``x``) and ``nu = sigma1`` otherwise.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

from ..errors import ConfigurationError, InputError
from ..uvm.core import UvmModel

__all__ = ["bsb_fd_oracle"]


def _cell_average(payoff, u: np.ndarray, du: float, order: int = 16) -> np.ndarray:
    gx, gw = np.polynomial.legendre.leggauss(order)
    pts = u[:, None] + 0.5 * du * gx[None, :]
    vals = np.asarray(payoff(np.exp(pts)), dtype=float)
    return 0.5 * (vals * gw[None, :]).sum(axis=1)


def bsb_fd_oracle(
    payoff: Callable[[np.ndarray], np.ndarray],
    model: UvmModel,
    x: float,
    points: int = 2000,
    cfl: float = 0.4,
    half_width: float | None = None,
    center: float | None = None,
    dt: float | None = None,
) -> float:
    """Uncertain-volatility value at ``(T, x)`` for the terminal ``payoff``.

    The grid spans ``center * e^{+-half_width}``; boundary values stay at the
    payoff.  ``dt`` defaults to ``cfl * du^2 / sigma2^2``.

    Raises
    ------
    ConfigurationError
        ``sigma2^2 dt / du^2 > 1`` (explicit scheme unstable).
    """
    if not x > 0:
        raise InputError("spot must be positive")
    if points < 10:
        raise InputError("need at least 10 space nodes")
    s1, s2, T = model.sigma1, model.sigma2, model.T
    if half_width is None:
        half_width = max(8.0 * s2 * math.sqrt(T), 4.0)
    if center is None:
        center = x
    u = np.linspace(math.log(center) - half_width, math.log(center) + half_width, points)
    du = u[1] - u[0]
    if dt is None:
        dt = cfl * du * du / (s2 * s2)
    if s2 * s2 * dt / (du * du) > 1.0:
        raise ConfigurationError(f"explicit step unstable: sigma2^2 dt / du^2 = {s2 * s2 * dt / du**2:.3g} > 1")
    steps = max(1, int(math.ceil(T / dt)))
    dt = T / steps
    v = _cell_average(payoff, u, du)
    lo, hi = v[0], v[-1]
    hi_var, lo_var = 0.5 * s2 * s2 * dt, 0.5 * s1 * s1 * dt
    for _ in range(steps):
        vuu = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / (du * du)
        vu = (v[2:] - v[:-2]) / (2.0 * du)
        op = vuu - vu
        v[1:-1] = v[1:-1] + np.where(op > 0.0, hi_var, lo_var) * op
        v[0], v[-1] = lo, hi
    return float(np.interp(math.log(x), u, v))
