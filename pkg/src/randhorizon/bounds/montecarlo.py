"""Monte Carlo lower bounds: any fixed policy run to an Erlang horizon.

Every policy exposes ``simulate(rng, horizon, count) -> payoffs``; the
estimate is the sample mean with its standard error.  Blocks of paths use
independent counter-based streams (see :mod:`randhorizon.numerics.rng`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Protocol, Sequence

import numpy as np

from ..errors import InputError
from ..numerics import map_blocks
from .erlang import ErlangHorizon

__all__ = [
    "Policy",
    "HoldToHorizonPolicy",
    "DigitalHittingPolicy",
    "PutExercisePolicy",
    "mc_lower_bound",
]


class Policy(Protocol):
    def simulate(self, rng: np.random.Generator, horizon: ErlangHorizon, count: int) -> np.ndarray: ...


@dataclass(frozen=True)
class HoldToHorizonPolicy:
    """Constant volatility, no early action; pays ``e^{-r Z} payoff(X_Z)`` at the horizon ``Z``."""

    payoff: Callable[[np.ndarray], np.ndarray]
    x: float
    sigma: float
    r: float = 0.0

    def simulate(self, rng, horizon, count):
        z = horizon.sample(rng, count)
        w = rng.standard_normal(count)
        end = self.x * np.exp((self.r - 0.5 * self.sigma**2) * z + self.sigma * np.sqrt(z) * w)
        return np.exp(-self.r * z) * np.asarray(self.payoff(end), dtype=float)


@dataclass(frozen=True)
class DigitalHittingPolicy:
    """Run at ``sigma2`` until the spot touches ``K``, then freeze it there.

    The hit indicator is replaced by its conditional probability given the
    terminal log-return (Brownian-bridge crossing), so no time stepping bias.
    """

    K: float
    x: float
    sigma2: float

    def simulate(self, rng, horizon, count):
        if self.x >= self.K:
            horizon.sample(rng, count)
            return np.ones(count)
        z = horizon.sample(rng, count)
        w = rng.standard_normal(count)
        s2 = self.sigma2**2
        end = -0.5 * s2 * z + self.sigma2 * np.sqrt(z) * w
        m = math.log(self.K / self.x)
        return np.where(end >= m, 1.0, np.exp(-2.0 * m * (m - end) / (s2 * z)))


@dataclass(frozen=True)
class PutExercisePolicy:
    """Exercise the put once the spot is at or below ``b_{n-j}`` after ``j`` clocks.

    ``boundaries[k-1]`` is the stage-``k`` boundary.  Monitoring is discrete
    (``substeps`` points per clock interval), which keeps the estimate a
    valid lower bound.
    """

    K: float
    x: float
    r: float
    sigma: float
    boundaries: Sequence[float]
    substeps: int = 20

    def simulate(self, rng, horizon, count):
        n = horizon.n
        if len(self.boundaries) != n:
            raise InputError(f"need {n} stage boundaries, got {len(self.boundaries)}")
        clocks = horizon.clocks(rng, count)
        drift = self.r - 0.5 * self.sigma**2
        log_s = np.full(count, math.log(self.x))
        elapsed = np.zeros(count)
        alive = np.ones(count, dtype=bool)
        payoff = np.zeros(count)

        def stop(mask):
            payoff[mask] = np.exp(-self.r * elapsed[mask]) * np.maximum(self.K - np.exp(log_s[mask]), 0.0)
            alive[mask] = False

        for j in range(n):
            b = self.boundaries[n - j - 1]
            stop(alive & (log_s <= math.log(b)))
            dt = clocks[:, j] / self.substeps
            for _ in range(self.substeps):
                w = rng.standard_normal(count)
                log_s = np.where(alive, log_s + drift * dt + self.sigma * np.sqrt(dt) * w, log_s)
                elapsed = np.where(alive, elapsed + dt, elapsed)
                stop(alive & (log_s <= math.log(b)))
        stop(alive)
        return payoff


def mc_lower_bound(
    policy: Policy, horizon: ErlangHorizon, paths: int = 100_000, seed: int = 0, threads: int | None = None
) -> tuple[float, float]:
    """``(mean, standard error)`` of the policy's payoff over ``paths`` simulations."""
    if paths < 1000:
        raise InputError("use at least 1000 paths")

    def block(rng, count):
        p = np.asarray(policy.simulate(rng, horizon, count), dtype=float)
        return p.sum(), (p * p).sum()

    parts = map_blocks(block, paths, seed, threads)
    s1 = math.fsum(p[0] for p in parts)
    s2 = math.fsum(p[1] for p in parts)
    mean = s1 / paths
    var = max(s2 / paths - mean * mean, 0.0) * paths / (paths - 1)
    return float(mean), float(math.sqrt(var / paths))
