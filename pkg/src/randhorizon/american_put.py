"""American put priced by randomizing the maturity into ``n`` exponential stages.

Each stage is a perpetual stopping problem with discount ``r_n = r + n/T`` and
running reward ``lambda u_prev`` (``lambda = n/T``).  In the log variable the
continuation value is the Green's-function particular solution

    F = C (L_{-theta_minus}[u] + R_{theta_plus}[u]),   C = 2 lambda / (sigma^2 (theta_plus - theta_minus))

plus a decaying homogeneous mode fixed by value matching at the exercise
boundary ``b``.  Smooth fit at ``b`` reduces to a scalar equation

    theta_minus (K - b) + b + (2 lambda / sigma^2) R_{theta_plus}[u](ln b) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .errors import BracketError, InputError, NumericalError, StageError
from .numerics import (
    Bracket,
    ExpFilter,
    GridFunction,
    TailAsymptote,
    default_half_width,
    find_root_bracketed,
    log_grid,
    map_blocks,
    richardson_extrapolate,
    std_normal_cdf,
)
from .numerics.grid import DEFAULT_POINTS
from .numerics.roots import DEFAULT_ROOT_TOL

__all__ = [
    "PutModel",
    "PutStage",
    "put_exponents",
    "put_grid",
    "put_payoff",
    "solve_stage",
    "carr_price",
    "richardson_price",
    "binomial_oracle",
    "binomial_horizon_curve",
    "european_put",
    "perpetual_put",
    "lcp_stage_oracle",
    "stage_residual",
    "stage_mc_check",
]

_EDGE = 1e-6


@dataclass(frozen=True)
class PutModel:
    K: float
    r: float
    sigma: float
    T: float
    n: int = 1

    def __post_init__(self):
        if not self.K > 0:
            raise InputError(f"strike must be positive, got {self.K}")
        if not self.r >= 0:
            raise InputError(f"rate must be nonnegative, got {self.r}")
        if not self.sigma > 0:
            raise InputError(f"volatility must be positive, got {self.sigma}")
        if not self.T > 0:
            raise InputError(f"horizon must be positive, got {self.T}")
        if int(self.n) != self.n or self.n < 1:
            raise InputError(f"n must be a positive integer, got {self.n}")

    @property
    def lam(self) -> float:
        return self.n / self.T

    @property
    def r_n(self) -> float:
        return self.r + self.lam

    def with_n(self, n: int) -> "PutModel":
        return PutModel(self.K, self.r, self.sigma, self.T, n)


def put_exponents(r: float, sigma: float, discount: float) -> tuple[float, float]:
    """Roots ``theta_minus < 0 < 1 < theta_plus`` of ``(s^2/2) t (t-1) + r t - discount = 0``."""
    a = 0.5 * sigma * sigma
    b = r - a
    disc = math.sqrt(b * b + 4.0 * a * discount)
    return (-b - disc) / (2.0 * a), (-b + disc) / (2.0 * a)


@dataclass(frozen=True)
class PutStage:
    value: GridFunction
    boundary: float
    theta_minus: float
    theta_plus: float
    k: int = 1


def put_grid(model: PutModel, points: int = DEFAULT_POINTS) -> np.ndarray:
    """Log grid centred on the strike (the strike is the middle node for odd ``points``)."""
    return log_grid(model.K, default_half_width(model.sigma, model.T), points)


def _with_put_tails(x: np.ndarray, values: np.ndarray, K: float, theta_minus: float) -> GridFunction:
    left = TailAsymptote(offset=K, scale=-float(x[0]), exponent=1.0, anchor=float(x[0]), reference=K)
    right = TailAsymptote(scale=float(values[-1]), exponent=theta_minus, anchor=float(x[-1]), reference=K)
    return GridFunction(x, values, left, right, K)


def put_payoff(model: PutModel, abscissae: np.ndarray | None = None) -> GridFunction:
    """``(K - x)^+`` on the put grid."""
    x = put_grid(model) if abscissae is None else abscissae
    theta_minus, _ = put_exponents(model.r, model.sigma, model.r_n)
    return _with_put_tails(x, np.maximum(model.K - x, 0.0), model.K, theta_minus)


def solve_stage(
    u_prev: GridFunction,
    model: PutModel,
    lam: float | None = None,
    tol: float = DEFAULT_ROOT_TOL,
    k: int = 1,
) -> PutStage:
    """One randomized stage: value with early exercise given the next-stage value ``u_prev``.

    ``lam`` overrides the running-reward rate (the discount stays ``r_n``);
    ``lam = 0`` gives the perpetual put discounted at ``r_n``.

    Raises
    ------
    StageError
        The smooth-fit residual has no sign change in ``(0, K)``.
    """
    K, sigma = model.K, model.sigma
    lam = model.lam if lam is None else float(lam)
    theta_minus, theta_plus = put_exponents(model.r, sigma, model.r_n)
    x = u_prev.abscissae
    t = u_prev.log_abscissae
    # re-tail u_prev with this stage's decay exponent
    u = _with_put_tails(x, u_prev.values, K, theta_minus)
    coef = 2.0 * lam / (sigma * sigma * (theta_plus - theta_minus))
    left = ExpFilter(u, -theta_minus, "left")
    right = ExpFilter(u, theta_plus, "right")

    def smooth_fit(b: float) -> float:
        return theta_minus * (K - b) + b + (2.0 * lam / sigma**2) * float(right(b))

    lo, hi = max(_EDGE * K, u.x_min), K * (1.0 - _EDGE)
    try:
        b = find_root_bracketed(smooth_fit, Bracket(lo, hi), tol)
    except BracketError as err:
        raise StageError(k, f"no exercise boundary in (0, K): {err}") from err
    tb = math.log(b)
    F_nodes = coef * (left.nodes + right.nodes)
    F_b = coef * float(left.at_log(tb) + right.at_log(tb))
    amp = K - b - F_b
    values = np.where(t <= tb, K - x, F_nodes + amp * np.exp(theta_minus * (t - tb)))
    return PutStage(_with_put_tails(x, values, K, theta_minus), b, theta_minus, theta_plus, k)


def carr_price(
    model: PutModel, x: float, points: int = DEFAULT_POINTS, tol: float = DEFAULT_ROOT_TOL
) -> tuple[float, list[PutStage]]:
    """``v_n^n(x)`` and all stages, starting from the payoff."""
    if not x > 0:
        raise InputError("spot must be positive")
    u = put_payoff(model, put_grid(model, points))
    stages = []
    for k in range(1, model.n + 1):
        stage = solve_stage(u, model, tol=tol, k=k)
        stages.append(stage)
        u = stage.value
    return float(u(x)), stages


def richardson_price(model: PutModel, x: float, ns=(1, 2, 3), points: int = DEFAULT_POINTS) -> float:
    """Extrapolate ``v_n^n(x)`` in ``1/n`` to ``n = inf``."""
    samples = [(n, carr_price(model.with_n(n), x, points)[0]) for n in ns]
    return richardson_extrapolate(samples)


# -- oracles -------------------------------------------------------------------


def european_put(K: float, x: float, r: float, sigma: float, T: float) -> float:
    if T <= 0:
        return max(K - x, 0.0)
    sd = sigma * math.sqrt(T)
    d1 = (math.log(x / K) + (r + 0.5 * sigma * sigma) * T) / sd
    d2 = d1 - sd
    return float(K * math.exp(-r * T) * std_normal_cdf(-d2) - x * std_normal_cdf(-d1))


def perpetual_put(
    K: float, x: float, r: float, sigma: float, discount: float | None = None
) -> tuple[float, float]:
    """Perpetual American put ``(value, boundary)``; drift ``r``, discount ``r`` unless given."""
    theta_minus, _ = put_exponents(r, sigma, r if discount is None else discount)
    b = K * theta_minus / (theta_minus - 1.0)
    value = K - x if x <= b else (K - b) * (x / b) ** theta_minus
    return float(value), float(b)


def binomial_oracle(K: float, x: float, r: float, sigma: float, T: float, steps: int = 20000) -> float:
    """Cox-Ross-Rubinstein American put."""
    if steps < 1:
        raise InputError("binomial tree needs at least one step")
    if T <= 0:
        return max(K - x, 0.0)
    dt = T / steps
    up = math.exp(sigma * math.sqrt(dt))
    p = (math.exp(r * dt) - 1.0 / up) / (up - 1.0 / up)
    disc = math.exp(-r * dt)
    j = np.arange(steps + 1)
    spot = x * up ** (2.0 * j - steps)
    v = np.maximum(K - spot, 0.0)
    for i in range(steps - 1, -1, -1):
        spot = spot[1 : i + 2] / up
        v = np.maximum(disc * (p * v[1:] + (1.0 - p) * v[:-1]), K - spot)
    return float(v[0])


def binomial_horizon_curve(
    K: float, x: float, r: float, sigma: float, max_T: float, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    """American put at spot ``x`` for every horizon ``2 m dt <= max_T`` from one tree.

    The lattice is time-homogeneous, so the node at spot ``x`` with ``2m``
    steps to go carries the price for horizon ``2 m dt``.
    """
    steps = 2 * int(math.ceil(max_T / (2.0 * dt)))
    up = math.exp(sigma * math.sqrt(dt))
    p = (math.exp(r * dt) - 1.0 / up) / (up - 1.0 / up)
    disc = math.exp(-r * dt)
    j = np.arange(steps + 1)
    spot = x * up ** (2.0 * j - steps)
    v = np.maximum(K - spot, 0.0)
    horizons = [0.0]
    prices = [max(K - x, 0.0)]
    for i in range(steps - 1, -1, -1):
        spot = spot[1 : i + 2] / up
        v = np.maximum(disc * (p * v[1:] + (1.0 - p) * v[:-1]), K - spot)
        remaining = steps - i
        if remaining % 2 == 0:
            # spot x sits at index i/2 of the current layer
            horizons.append(remaining * dt)
            prices.append(float(v[i // 2]))
    return np.array(horizons), np.array(prices)


def lcp_stage_oracle(
    u_prev,
    model: PutModel,
    x: float,
    points: int = 2001,
    half_width: float = 3.0,
    omega: float = 1.9,
    tol: float = 1e-11,
    max_iter: int = 200000,
) -> float:
    """Stage value at ``x`` from finite differences plus projected SOR.

    Solves ``min{r_n v - r v_t' - (s^2/2) v_tt' - lambda u, v - g} = 0`` in the
    log variable with payoff boundary values at both ends.  ``u_prev`` is any
    callable of the spot.
    """
    K, sigma, r = model.K, model.sigma, model.r
    lam, r_n = model.lam, model.r_n
    t = np.linspace(math.log(K) - half_width, math.log(K) + half_width, points)
    h = t[1] - t[0]
    s = np.exp(t)
    g = np.maximum(K - s, 0.0)
    a = 0.5 * sigma * sigma
    drift = r - a
    diag = r_n + 2.0 * a / h**2
    lower = -(a / h**2 - drift / (2.0 * h))
    upper = -(a / h**2 + drift / (2.0 * h))
    rhs = lam * np.asarray(u_prev(s), dtype=float)
    # start from the unconstrained solution clipped to the obstacle
    v = g.copy()
    inner = slice(1, points - 1)
    mat = sparse.diags(
        [np.full(points - 3, lower), np.full(points - 2, diag), np.full(points - 3, upper)], [-1, 0, 1], format="csc"
    )
    b_vec = rhs[inner].copy()
    b_vec[0] -= lower * g[0]
    b_vec[-1] -= upper * g[-1]
    v[inner] = np.maximum(spsolve(mat, b_vec), g[inner])
    idx = np.arange(1, points - 1)
    red, black = idx[idx % 2 == 1], idx[idx % 2 == 0]
    for _ in range(max_iter):
        change = 0.0
        for sel in (red, black):
            gs = (rhs[sel] - lower * v[sel - 1] - upper * v[sel + 1]) / diag
            new = np.maximum(v[sel] + omega * (gs - v[sel]), g[sel])
            change = max(change, float(np.max(np.abs(new - v[sel]))))
            v[sel] = new
        if change < tol:
            break
    else:
        raise NumericalError("projected SOR did not converge")
    return float(np.interp(math.log(x), t, v))


# -- diagnostics ---------------------------------------------------------------


def stage_residual(stage: PutStage, u_prev: GridFunction, model: PutModel, exclude_cells: int = 3) -> np.ndarray:
    """``r_n v - r x v' - (s^2/2) x^2 v'' - lambda u_prev`` at continuation nodes.

    Nodes next to the boundary and to the strike (where the payoff kink
    spoils central differences) are skipped, as are the outer 5% of the grid.
    """
    t = stage.value.log_abscissae
    v = stage.value.values
    h = stage.value.log_step
    vt = (v[2:] - v[:-2]) / (2.0 * h)
    vtt = (v[2:] - 2.0 * v[1:-1] + v[:-2]) / h**2
    a = 0.5 * model.sigma**2
    res = model.r_n * v[1:-1] - (model.r - a) * vt - a * vtt - model.lam * u_prev.values[1:-1]
    tb = math.log(stage.boundary)
    m = len(t) // 20
    keep = t[1:-1] > tb + exclude_cells * h
    keep &= np.abs(t[1:-1] - math.log(model.K)) > exclude_cells * h
    keep[:m] = False
    keep[-m:] = False
    return res[keep]


def stage_mc_check(
    stage: PutStage, u_prev, model: PutModel, x: float, paths: int = 100_000, seed: int = 0
) -> tuple[float, float]:
    """Simulated stage value at ``x`` under the stage's exercise rule.

    Kills the path at rate ``r_n``; before the kill time the holder exercises
    on touching the boundary (bridge crossing probability, no time stepping),
    otherwise collects ``(lambda / r_n) u_prev`` at the kill time.
    Returns ``(mean, standard error)``.
    """
    K, b = model.K, stage.boundary
    if x <= b:
        return K - x, 0.0
    sigma, r_n, lam = model.sigma, model.r_n, model.lam
    drift = model.r - 0.5 * sigma * sigma
    gap = math.log(x / b)

    def block(rng, count):
        kill = rng.exponential(1.0 / r_n, count)
        end = drift * kill + sigma * np.sqrt(kill) * rng.standard_normal(count)
        p_cross = np.where(end <= -gap, 1.0, np.exp(-2.0 * gap * (gap + end) / (sigma * sigma * kill)))
        payoff = p_cross * (K - b) + (1.0 - p_cross) * (lam / r_n) * np.asarray(u_prev(x * np.exp(end)))
        return payoff.sum(), (payoff**2).sum()

    parts = map_blocks(block, paths, seed)
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s1 / paths
    var = max(s2 / paths - mean * mean, 0.0)
    return float(mean), float(math.sqrt(var / paths))
