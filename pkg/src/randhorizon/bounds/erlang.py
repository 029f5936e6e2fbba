"""Erlang (Gamma with integer shape) randomized horizon."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, stats

from ..errors import InputError

__all__ = ["ErlangHorizon", "erlang_pdf", "erlang_mixture"]


@dataclass(frozen=True)
class ErlangHorizon:
    """Sum of ``n`` independent exponentials of rate ``lam``; mean ``n / lam``."""

    n: int
    lam: float

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InputError(f"shape must be a positive integer, got {self.n}")
        if not self.lam > 0:
            raise InputError(f"rate must be positive, got {self.lam}")

    @classmethod
    def for_horizon(cls, n: int, T: float) -> "ErlangHorizon":
        if not T > 0:
            raise InputError("horizon must be positive")
        return cls(n, n / T)

    @property
    def mean(self) -> float:
        return self.n / self.lam

    @property
    def variance(self) -> float:
        return self.n / self.lam**2

    def clocks(self, rng: np.random.Generator, count: int) -> np.ndarray:
        """Exponential increments, shape ``(count, n)``, drawn by inverting the CDF."""
        u = rng.random((count, self.n))
        return -np.log1p(-u) / self.lam

    def sample(self, rng: np.random.Generator, count: int) -> np.ndarray:
        return self.clocks(rng, count).sum(axis=1)


def erlang_pdf(h: ErlangHorizon, z):
    """Gamma(n, lam) density."""
    z = np.asarray(z, dtype=float)
    if np.any(z < 0):
        raise InputError("Erlang density is defined for z >= 0")
    out = stats.gamma.pdf(z, h.n, scale=1.0 / h.lam)
    return float(out) if out.ndim == 0 else out


def erlang_mixture(value_of_horizon: Callable[[float], float], h: ErlangHorizon, rel_tol: float = 1e-6) -> float:
    """``int value(z) density(z) dz`` over ``[0, T + 12 T / sqrt(n)]`` with ``T`` the mean."""
    T = h.mean
    upper = T + 12.0 * T / math.sqrt(h.n)
    sd = math.sqrt(h.variance)
    # split where the density has its mass so adaptive quadrature sees the peak
    lo = max(0.0, T - 8.0 * sd)
    hi = min(upper, T + 8.0 * sd)
    edges = sorted({0.0, lo, T, hi, upper})
    total = 0.0
    for a, b in zip(edges[:-1], edges[1:]):
        if b <= a:
            continue
        piece, _ = integrate.quad(
            lambda z: value_of_horizon(z) * erlang_pdf(h, z), a, b, epsabs=1e-13, epsrel=rel_tol, limit=400
        )
        total += piece
    return float(total)
