import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from barrierkit.errors import DomainError
from barrierkit.modelspace import (ModelCurvature, cn, riccati_closed_form, riccati_domain_end,
                                   riccati_partials, riccati_state, sn)


def test_model_function_values():
    assert sn(0, 3) == 3.0
    assert sn(1, 1) == pytest.approx(1.1752011936438014, abs=1e-15)
    assert sn(-1, math.pi / 2) == pytest.approx(1.0, abs=1e-15)
    for c in (-3.0, 0.0, 0.5, 7.0):
        assert cn(c, 0) == 1.0
        assert sn(c, 0) == 0.0


def test_vectorized_matches_scalar():
    t = np.linspace(0, 3, 7)
    np.testing.assert_array_equal(sn(2.0, t), [sn(2.0, x) for x in t])
    assert ModelCurvature(2.0).cn(0.3) == cn(2.0, 0.3)


def test_nonfinite_curvature_rejected():
    with pytest.raises(DomainError):
        ModelCurvature(float("nan"))


def test_series_branch_continuous_in_c():
    for t in (0.1, 1.0, 3.0):
        for c in (1e-8, -1e-8):
            assert abs(sn(c, t) - sn(0, t)) < 1e-6
            assert abs(cn(c, t) - cn(0, t)) < 1e-6


def test_series_threshold_seam():
    # both branches agree where the switch happens
    c = 1.0
    t = math.sqrt(1e-8)
    a, b = sn(c, t * (1 - 1e-9)), sn(c, t * (1 + 1e-9))
    assert abs(a - b) < 1e-12


def test_riccati_examples():
    assert riccati_closed_form(-1, 0, 0.5) == pytest.approx(-2.0, abs=1e-14)
    for tau, c in ((0.3, 1.0), (-2.0, -1.0), (5.0, 0.0)):
        assert riccati_closed_form(tau, c, 0.0) == tau


def test_riccati_against_solve_ivp():
    sol = solve_ivp(lambda t, y: [-1.0 - y[0] ** 2], (0, 0.5), [-1.0], method="DOP853",
                    rtol=1e-12, atol=1e-12, dense_output=True)
    # theta' = c - theta^2 with c = -1
    for t in (0.1, 0.3, 0.5):
        assert riccati_closed_form(-1.0, -1.0, t) == pytest.approx(sol.sol(t)[0], abs=1e-10)


def test_partials_examples():
    ft, fdt = riccati_partials(-1, 0, 0.5)
    assert ft == pytest.approx(4.0, abs=1e-12)
    h = 1e-6
    fd = (riccati_closed_form(-1 + h, 0, 0.5) - riccati_closed_form(-1 - h, 0, 0.5)) / (2 * h)
    assert ft == pytest.approx(fd, abs=1e-6)
    assert riccati_partials(0, 0, 0.7)[1] == 0.0
    assert riccati_partials(-1, 1, 0)[1] == 0.0


def test_blowup_raises_and_domain_end():
    assert riccati_domain_end(-1.0, 0.0, 2.0) == pytest.approx(1.0, abs=1e-11)
    assert riccati_domain_end(0.5, 1.0, 3.0) == 3.0
    # tau = -2 with c = 1: cosh t = 2 sinh t at t = artanh(1/2)
    assert riccati_domain_end(-2.0, 1.0, 5.0) == pytest.approx(math.atanh(0.5), abs=1e-11)
    with pytest.raises(DomainError):
        riccati_closed_form(-1.0, 0.0, 1.0)
    with pytest.raises(DomainError):
        riccati_domain_end(1.0, 0.0, 0.0)
    st_ = riccati_state(-1.0, 0.0, 3.0)
    assert st_.domain_end == pytest.approx(1.0) and st_(0.5) == pytest.approx(-2.0)


def test_spherical_domain_end():
    # c = -1, tau = 0: cos t vanishes at pi/2
    assert riccati_domain_end(0.0, -1.0, 10.0) == pytest.approx(math.pi / 2, abs=1e-11)


@settings(max_examples=200, deadline=None)
@given(st.floats(-4, 4), st.floats(0, 5))
def test_wronskian_relative(c, t):
    s, k = sn(c, t), cn(c, t)
    scale = k * k + abs(c) * s * s
    assert abs(k * k - c * s * s - 1.0) <= 1e-13 * scale


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.01, 2))
def test_riccati_ode_residual(tau, c, t):
    end = riccati_domain_end(tau, c, 3.0)
    if t > 0.9 * end:
        return
    f = riccati_closed_form(tau, c, t)
    ft = riccati_partials(tau, c, t)[1]
    assert abs(ft + f * f - c) < 1e-8 * max(1.0, f * f)
    h = 1e-5
    fd = (riccati_closed_form(tau, c, t + h) - riccati_closed_form(tau, c, t - h)) / (2 * h)
    assert abs(fd - ft) < 1e-4 * max(1.0, abs(ft))


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.floats(0.0, 2))
def test_increasing_in_tau(tau, c, t):
    if t >= 0.9 * riccati_domain_end(tau, c, 3.0):
        return
    assert riccati_partials(tau, c, t)[0] > 0


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_nonincreasing_when_tau_squared_exceeds_c(tau, c):
    if tau * tau <= c:
        return
    end = riccati_domain_end(tau, c, 2.0)
    ts = np.linspace(0, 0.9 * end, 50)
    f = riccati_closed_form(tau, c, ts)
    assert np.all(np.diff(f) <= 1e-12)
