import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from randhorizon.american_put import (
    PutModel,
    binomial_horizon_curve,
    binomial_oracle,
    carr_price,
    european_put,
    lcp_stage_oracle,
    perpetual_put,
    put_exponents,
    put_payoff,
    solve_stage,
    stage_mc_check,
    stage_residual,
)
from randhorizon.errors import InputError, StageError
from randhorizon.numerics import ExpFilter

BASE = PutModel(100.0, 0.05, 0.2, 0.5, 1)


def test_exponent_roots():
    lo, hi = put_exponents(0.05, 0.2, 2.05)
    for th in (lo, hi):
        assert 0.02 * th * (th - 1) + 0.05 * th - 2.05 == pytest.approx(0.0, abs=1e-12)
    assert lo < 0 < 1 < hi


def test_model_validation():
    with pytest.raises(InputError):
        PutModel(100, -0.01, 0.2, 0.5, 1)
    with pytest.raises(InputError):
        PutModel(100, 0.05, 0.0, 0.5, 1)
    assert PutModel(100, 0.05, 0.2, 0.5, 4).r_n == pytest.approx(8.05)


# -- one stage -------------------------------------------------------------------


def test_perpetual_limit():
    u0 = put_payoff(BASE)
    stage = solve_stage(u0.with_values(np.zeros(len(u0))), BASE, lam=0.0)
    for x in (95.0, 110.0, 150.0):
        ref, b = perpetual_put(100.0, x, 0.05, 0.2, BASE.r_n)
        assert stage.boundary == pytest.approx(b, rel=1e-6)
        assert stage.value(x) == pytest.approx(ref, rel=1e-6)


def test_perpetual_closed_form_boundary():
    _, b = perpetual_put(100.0, 120.0, 0.05, 0.3)
    th, _ = put_exponents(0.05, 0.3, 0.05)
    assert b == pytest.approx(100 * th / (th - 1))
    # smooth pasting of the closed form itself
    d = 1e-6 * b
    v = lambda x: perpetual_put(100.0, x, 0.05, 0.3)[0]
    assert (v(b + d) - v(b)) / d == pytest.approx(-1.0, abs=1e-5)


def test_constant_continuation_far_from_boundary():
    c = 3.0
    u0 = put_payoff(BASE)
    stage = solve_stage(u0.with_values(np.full(len(u0), c)), BASE)
    # the homogeneous mode has died out far above the boundary
    assert stage.value(400.0) == pytest.approx(BASE.lam * c / BASE.r_n, rel=1e-6)


@pytest.fixture(scope="module")
def first_stage():
    u0 = put_payoff(BASE)
    return u0, solve_stage(u0, BASE)


def test_first_stage_matches_lcp(first_stage):
    u0, stage = first_stage
    ref = lcp_stage_oracle(lambda s: np.maximum(100.0 - s, 0.0), BASE, 100.0)
    assert abs(stage.value(100.0) - ref) <= 1e-3 * 100.0


def _continuation(stage, u_prev, model):
    """Continuation branch rebuilt from the filters, smooth across the boundary."""
    th_m, th_p = stage.theta_minus, stage.theta_plus
    coef = 2.0 * model.lam / (model.sigma**2 * (th_p - th_m))
    left = ExpFilter(u_prev, -th_m, "left")
    right = ExpFilter(u_prev, th_p, "right")
    b = stage.boundary
    F = lambda y: coef * float(left(y) + right(y))
    amp = model.K - b - F(b)
    return lambda y: F(y) + amp * (y / b) ** th_m


def test_first_stage_smooth_fit(first_stage):
    u0, stage = first_stage
    b = stage.boundary
    cont = _continuation(stage, u0, BASE)
    assert cont(b) == pytest.approx(BASE.K - b, abs=1e-9)
    d = 1e-4 * b
    slope = (cont(b + d) - cont(b - d)) / (2 * d)
    assert abs(slope + 1.0) <= 1e-6
    # grid interpolation straddles the curvature jump at b
    assert stage.value(b * 1.001) == pytest.approx(cont(b * 1.001), abs=1e-4)


def test_smooth_fit_every_stage(put_run_10):
    model, _, stages = put_run_10
    u = put_payoff(model)
    for s in stages:
        cont = _continuation(s, u, model)
        d = 1e-4 * s.boundary
        assert abs((cont(s.boundary + d) - cont(s.boundary - d)) / (2 * d) + 1.0) <= 1e-6
        u = s.value


def test_first_stage_monte_carlo(first_stage):
    u0, stage = first_stage
    mean, se = stage_mc_check(stage, u0, BASE, 100.0, paths=100_000, seed=3)
    assert abs(mean - stage.value(100.0)) <= 3 * se


def test_no_boundary_raises_stage_error():
    # zero rate and a huge reward: continuing always beats exercising
    m = PutModel(100.0, 0.0, 0.2, 0.5, 1)
    u0 = put_payoff(m)
    with pytest.raises(StageError) as info:
        solve_stage(u0.with_values(np.full(len(u0), 100.0)), m, k=4)
    assert info.value.stage == 4


# -- staircase -------------------------------------------------------------------


def test_stage_invariants(put_run_10):
    model, value, stages = put_run_10
    u = put_payoff(model)
    prev_b = math.inf
    for s in stages:
        x, v = s.value.abscissae, s.value.values
        g = np.maximum(model.K - x, 0.0)
        assert np.min(v - g) >= -1e-8
        assert v.max() <= model.K
        assert np.all(v[x <= s.boundary] == model.K - x[x <= s.boundary])
        assert s.boundary <= prev_b + 1e-8
        assert s.theta_minus < 0 < 1 < s.theta_plus
        assert np.max(np.abs(stage_residual(s, u, model))) <= 1e-4 * model.r_n * model.K
        prev_b = s.boundary
        u = s.value


def test_price_bounds_and_stage_monotone(put_run_10):
    model, value, stages = put_run_10
    assert max(model.K - 100.0, 0.0) <= value <= model.K
    vals = [s.value(100.0) for s in stages]
    assert all(b >= a - 1e-10 for a, b in zip(vals[:-1], vals[1:]))


# -- oracles ---------------------------------------------------------------------


def test_binomial_zero_horizon():
    assert binomial_oracle(100, 90, 0.05, 0.2, 0.0) == 10.0


def test_binomial_above_european():
    assert binomial_oracle(100, 100, 0.05, 0.2, 0.5, 2000) >= european_put(100, 100, 0.05, 0.2, 0.5)


@given(st.floats(80, 120), st.floats(0.1, 0.4))
@settings(max_examples=10, deadline=None)
def test_binomial_increasing_in_vol(x, s):
    assert binomial_oracle(100, x, 0.05, s + 0.1, 0.5, 400) >= binomial_oracle(100, x, 0.05, s, 0.5, 400) - 1e-12


def test_horizon_curve_matches_single_trees():
    zs, ps = binomial_horizon_curve(100, 100, 0.05, 0.2, 0.5, 0.5 / 200)
    assert zs[-1] == pytest.approx(0.5)
    assert ps[-1] == pytest.approx(binomial_oracle(100, 100, 0.05, 0.2, 0.5, 200), abs=1e-12)
    assert ps[100 // 2] == pytest.approx(binomial_oracle(100, 100, 0.05, 0.2, zs[50], 100), abs=1e-12)
