"""Richardson extrapolation of sequences indexed by a positive integer ``n``."""

from __future__ import annotations

from typing import Iterable

from ..errors import InputError

__all__ = ["richardson_extrapolate", "richardson_weights"]


def richardson_weights(ns: Iterable[int]) -> list[float]:
    """Lagrange weights of the polynomial in ``1/n`` evaluated at ``1/n = 0``.

    ``ns = (1, 2, 3)`` gives ``(1/2, -4, 9/2)``.
    """
    hs = [1.0 / n for n in ns]
    weights = []
    for i, hi in enumerate(hs):
        w = 1.0
        for j, hj in enumerate(hs):
            if j != i:
                w *= (0.0 - hj) / (hi - hj)
        weights.append(w)
    return weights


def richardson_extrapolate(samples) -> float:
    """Limit ``n -> inf`` of the polynomial in ``1/n`` through ``(n, value)`` samples.

    With ``m`` samples the result is exact for ``a + b/n + ... + c/n^(m-1)``.
    """
    samples = list(samples)
    if len(samples) < 2:
        raise InputError("Richardson extrapolation needs at least two samples")
    ns = [int(n) for n, _ in samples]
    if any(n < 1 for n in ns):
        raise InputError("sample indices must be positive integers")
    if len(set(ns)) != len(ns):
        raise InputError(f"duplicate sample index in {ns}")
    # Neville's scheme in h = 1/n, evaluated at h = 0
    hs = [1.0 / n for n in ns]
    p = [float(v) for _, v in samples]
    m = len(p)
    for k in range(1, m):
        for i in range(m - k):
            p[i] = (hs[i + k] * p[i] - hs[i] * p[i + 1]) / (hs[i + k] - hs[i])
    return p[0]
