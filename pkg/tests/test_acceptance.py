"""Headline acceptance criteria, one test each.

Every test prints a single ``PASS``/``FAIL`` line naming its criterion; the
lines are also repeated in the terminal summary.
"""

import math
import time

import numpy as np
import pytest
from scipy import integrate

from randhorizon.american_put import (
    PutModel,
    binomial_oracle,
    carr_price,
    perpetual_put,
    put_payoff,
    richardson_price,
    solve_stage,
)
from randhorizon.bounds import (
    ErlangHorizon,
    bsb_fd_oracle,
    convergence_diagnostic,
    erlang_mixture,
    quadratic_payoff_function,
)
from randhorizon.cli import put_sandwich
from randhorizon.numerics import ExpFilter, GridFunction, TailAsymptote, log_grid, std_normal_cdf
from randhorizon.uvm import UvmModel, apply_T, crossing_margin, evaluate_T, exponents, iterate_scheme, mixing_density
from randhorizon.uvm.digital import (
    DigitalModel,
    digital_iterate,
    digital_value,
    exact_digital_value,
    reproduce_tables,
    x80_report,
)

RESULTS: list[str] = []


def verdict(name: str, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'}  {name}: {detail}"
    print(line)
    RESULTS.append(line)
    assert ok, line


def one_sided_slopes(v, b, rel=1e-5):
    # second-order stencils; truncation is about 1e-8 at this step
    d = rel * b
    left = (3 * v(b) - 4 * v(b - d) + v(b - 2 * d)) / (2 * d)
    right = (-3 * v(b) + 4 * v(b + d) - v(b + 2 * d)) / (2 * d)
    return left, right


def bs_expectation(h, x, sigma, T):
    """``E h(x exp(sigma W_T - sigma^2 T / 2))`` by quadrature in the normal variable."""
    sd = sigma * math.sqrt(T)
    f = lambda z: float(h(x * math.exp(sd * z - 0.5 * sd * sd))) * math.exp(-0.5 * z * z) / math.sqrt(2 * math.pi)
    kinks = sorted((math.log(k / x) + 0.5 * sd * sd) / sd for k in (0.5, 1.0, 2.0))
    edges = [-12.0, *kinks, 12.0]
    return sum(integrate.quad(f, a, c, epsabs=1e-13, limit=200)[0] for a, c in zip(edges[:-1], edges[1:]))


def test_table1_reproduction():
    t0 = time.perf_counter()
    cells = reproduce_tables(tables=(1,))
    elapsed = time.perf_counter() - t0
    worst = max(c.abs_err for c in cells)
    ok = len(cells) == 30 and all(c.ok for c in cells) and elapsed <= 600
    verdict("Table 1", ok, f"{len(cells)} cells, max |err| {worst:.2e} (tol 2e-4), {elapsed:.1f} s")


def test_table2_x50_row():
    cells = reproduce_tables(tables=(2,))
    worst = max(c.abs_err for c in cells)
    rep = x80_report()
    print(f"x=80 exact value at T=1: {rep['exact_T1']:.6f}; at T=0.1: {rep['exact_T0.1']:.6e}")
    ok = len(cells) == 5 and all(c.ok for c in cells)
    verdict("Table 2 x=50", ok, f"max |err| {worst:.2e} (tol 1e-5)")


def test_erlang_mixture_identity():
    worst = 0.0
    for n in (5, 10, 50):
        horizon = ErlangHorizon.for_horizon(n, 1.0)
        (stage,) = digital_iterate(DigitalModel(100.0, 50.0, 0.4, 1.0, n), keep="last")
        for x in (50.0, 80.0, 95.0, 99.0):
            mix = erlang_mixture(lambda z: exact_digital_value(100.0, x, 0.4, z), horizon)
            worst = max(worst, abs(stage(x) - mix))
    verdict("Erlang mixture identity", worst <= 1e-4, f"max |err| {worst:.2e} (tol 1e-4)")


def test_operator_identities(uvm_run_50, put_run_10):
    model, start, stages = uvm_run_50
    e = exponents(model)
    grid = log_grid(1.0, 4.0, 4001)
    const_err = 0.0
    for c in (0.0, 0.37, 1.0):
        phi = GridFunction(grid, np.full(grid.size, c), TailAsymptote(c, anchor=grid[0]), TailAsymptote(c, anchor=grid[-1]))
        for b in (0.1, 1.0, 10.0):
            const_err = max(const_err, float(np.max(np.abs(apply_T(phi, b, e).values - c))))

    mass = sum(
        integrate.quad(lambda r: mixing_density(e, r), a, c, epsabs=1e-14, epsrel=1e-13, limit=200)[0]
        for a, c in ((0.0, 1.0), (1.0, np.inf))
    )

    # smooth fit at every solved boundary, both schemes
    fit_err = 0.0
    prev = start
    for s in stages:
        left, right = one_sided_slopes(lambda y: evaluate_T(prev, s.b, e, y), s.b)
        fit_err = max(fit_err, abs(left - right) / max(1.0, abs(left)))
        prev = s.U
    pmodel, _, pstages = put_run_10
    u = put_payoff(pmodel)
    for s in pstages:
        coef = 2.0 * pmodel.lam / (pmodel.sigma**2 * (s.theta_plus - s.theta_minus))
        L, R = ExpFilter(u, -s.theta_minus, "left"), ExpFilter(u, s.theta_plus, "right")
        F = lambda y: coef * float(L(y) + R(y))
        amp = pmodel.K - s.boundary - F(s.boundary)
        _, right = one_sided_slopes(lambda y: F(y) + amp * (y / s.boundary) ** s.theta_minus, s.boundary)
        fit_err = max(fit_err, abs(right + 1.0))
        u = s.value

    margin = math.inf
    prev = start
    for s in stages:
        margin = min(margin, crossing_margin(prev, s))
        prev = s.U

    ok = const_err <= 1e-8 and abs(mass - 1) <= 1e-10 and fit_err <= 1e-6 and margin >= -1e-8
    verdict(
        "Operator identities",
        ok,
        f"constants {const_err:.1e}, |mass-1| {abs(mass - 1):.1e}, smooth fit {fit_err:.1e}, crossing margin {margin:.1e}",
    )


def test_uvm_against_finite_differences(uvm_run_200, quad_payoff):
    model, stages = uvm_run_200
    uvm = float(stages[-1].U(1.0))
    fd = bsb_fd_oracle(quadratic_payoff_function, model, 1.0)
    gap = abs(uvm - fd)

    collapse = 0.0
    for s in (0.1, 0.3):
        same = UvmModel(s, s, 1.0, 200)
        bs = bs_expectation(quadratic_payoff_function, 1.0, s, 1.0)
        collapse = max(
            collapse,
            abs(iterate_scheme(quad_payoff, same)[-1].U(1.0) - bs),
            abs(bsb_fd_oracle(quadratic_payoff_function, same, 1.0) - bs),
        )
    digital = bsb_fd_oracle(lambda s: (s >= 100.0).astype(float), UvmModel(0.3, 0.3, 1.0, 1), 95.0)
    d2 = (math.log(95.0 / 100.0) - 0.045) / 0.3
    collapse = max(collapse, abs(digital - float(std_normal_cdf(d2))))

    ok = gap <= 2e-3 and collapse <= 1e-3
    verdict("UVM vs finite differences", ok, f"|uvm-fd| {gap:.1e} (tol 2e-3), collapse {collapse:.1e} (tol 1e-3)")


def test_american_put():
    base = PutModel(100.0, 0.05, 0.2, 0.5, 1)
    rich = 0.0
    for x in (90.0, 100.0, 110.0):
        rich = max(rich, abs(richardson_price(base, x) - binomial_oracle(100.0, x, 0.05, 0.2, 0.5, 20_000)))

    u0 = put_payoff(base)
    stage = solve_stage(u0.with_values(np.zeros(len(u0))), base, lam=0.0)
    perp = 0.0
    for x in (95.0, 110.0, 150.0):
        ref, _ = perpetual_put(100.0, x, 0.05, 0.2, base.r_n)
        perp = max(perp, abs(stage.value(x) / ref - 1))

    oracle = binomial_oracle(100.0, 100.0, 0.05, 0.2, 0.5, 20_000)
    errs = [abs(carr_price(base.with_n(n), 100.0)[0] - oracle) for n in (5, 10, 25, 50)]
    monotone = all(b <= a for a, b in zip(errs[:-1], errs[1:]))

    ok = rich <= 0.05 and perp <= 1e-6 and monotone
    verdict(
        "American put",
        ok,
        f"Richardson max |err| {rich:.4f} (tol 0.05), perpetual rel {perp:.1e}, errors "
        + ", ".join(f"{v:.4f}" for v in errs),
    )


def test_sandwich():
    lower, se, value, upper = put_sandwich(100.0, 100.0, 0.05, 0.2, 0.5, 10, 100_000, 11)
    ok = lower - 3 * se <= value <= upper + 1e-3
    verdict("Sandwich", ok, f"{lower:.5f} - 3*{se:.5f} <= {value:.5f} <= {upper:.5f} + 1e-3")


def test_convergence_order():
    ns = (10, 50, 200, 1000)
    values = {n: digital_value(DigitalModel(100.0, 95.0, 0.2, 0.5, n)) for n in ns}
    report = convergence_diagnostic(values, exact_digital_value(100.0, 95.0, 0.2, 0.5))
    verdict("Convergence order", report.order >= 0.8, f"fitted order {report.order:.3f} (min 0.8)")
