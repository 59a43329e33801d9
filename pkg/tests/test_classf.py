"""Weights of class F, their numerical verification and the Osgood functional."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_ivp

from machlab.errors import PreconditionError, RangeError
from machlab.funcspaces.classf import (
    from_selector,
    one_plus_log,
    one_plus_log_alpha,
    one_plus_loglog_log,
    osgood_bound,
    osgood_M,
    osgood_solve,
    power,
    verify_class_f,
)

LOG = one_plus_log().verified()


class TestWeights:
    @pytest.mark.parametrize("F", [one_plus_log(), one_plus_log_alpha(0.5), one_plus_loglog_log(), power(0.5)],
                             ids=lambda F: F.name)
    def test_basic_shape(self, F):
        x = np.geomspace(1.0, 1e8, 200)
        v = F(x)
        assert np.all(v >= 1.0)
        assert np.all(np.diff(v) >= 0)
        assert F(1e8) > F(1e4) > F(10.0)

    def test_exp_form_agrees(self):
        for F in (one_plus_log_alpha(0.3), one_plus_loglog_log(), power(0.7)):
            u = np.linspace(0.0, 20.0, 41)
            assert np.allclose(F.func_of_exp(u), F(np.exp(u)), rtol=1e-12)

    def test_selectors(self):
        assert from_selector("one_plus_log").name == "one_plus_log"
        assert from_selector("one_plus_log_alpha:0.5").params == (("alpha", 0.5),)
        assert from_selector("power:2").params == (("beta", 2.0),)
        assert from_selector("one_plus_loglog_log").name == "one_plus_loglog_log"
        with pytest.raises(ValueError, match="unknown weight"):
            from_selector("exp")

    def test_bad_parameters(self):
        with pytest.raises(ValueError, match="alpha must be positive"):
            one_plus_log_alpha(0.0)
        with pytest.raises(ValueError, match="beta must be positive"):
            power(-1.0)

    def test_unverified_weight_refused(self):
        with pytest.raises(PreconditionError, match="not verified"):
            osgood_solve(one_plus_log(), 1.0, 1.0)


class TestVerification:
    @pytest.mark.parametrize("alpha", [0.25, 0.5, 1.0])
    def test_log_alpha_is_class_f_prime(self, alpha):
        rep = verify_class_f(one_plus_log_alpha(alpha))
        assert rep.is_class_F and rep.is_class_F_prime

    def test_loglog_is_class_f_prime(self):
        rep = verify_class_f(one_plus_loglog_log())
        assert rep.is_class_F and rep.is_class_F_prime

    @pytest.mark.parametrize("beta", [0.1, 0.5, 1.0])
    def test_power_is_class_f_only(self, beta):
        rep = verify_class_f(power(beta))
        assert rep.is_class_F
        assert not rep.is_class_F_prime

    def test_submultiplicative_on_lattice(self):
        rep = verify_class_f(one_plus_log())
        assert rep.submult_constant <= 1.0 + 1e-12
        xs = np.geomspace(1.0, 1e12, 13)
        F = one_plus_log()
        for x in xs:
            assert np.all(F(x * xs) <= rep.submult_constant * F(x) * F(xs) * (1 + 1e-12))

    def test_bounded_weight_rejected(self):
        flat = one_plus_log_alpha(1.0)
        from dataclasses import replace

        flat = replace(flat, name="flat", func=lambda x: np.ones_like(x), func_of_exp=lambda u: np.ones_like(u))
        assert not verify_class_f(flat).is_class_F


class TestOsgood:
    @pytest.mark.parametrize("C", [0.5, 1.0, 3.0])
    def test_m_closed_form(self, C):
        for x in (1e-3, 0.5, 2.0, 50.0):
            assert osgood_solve(LOG, C, x, "M") == pytest.approx(math.log1p(C * x) / C, rel=1e-8)

    @pytest.mark.parametrize("C", [0.5, 1.0, 3.0])
    def test_inverse_closed_form(self, C):
        for t in (0.1, 1.0, 4.0):
            assert osgood_solve(LOG, C, t, "M_inverse") == pytest.approx(math.expm1(C * t) / C, rel=1e-8)

    def test_inverse_derivative_growth_shape(self):
        C0 = 2.0
        base = osgood_solve(LOG, 1.0, C0, "M_inverse_derivative")
        for t in (0.25, 0.5, 1.0):
            val = osgood_solve(LOG, 1.0, C0 * (1 + t), "M_inverse_derivative")
            assert val / base == pytest.approx(math.exp(C0 * t), rel=1e-8)

    @settings(max_examples=20, deadline=None)
    @given(a=st.floats(0.0, 20.0), b=st.floats(0.0, 20.0))
    def test_m_increasing(self, a, b):
        lo, hi = sorted((a, b))
        assert osgood_M(LOG, 1.0, lo) <= osgood_M(LOG, 1.0, hi)

    def test_m_at_zero(self):
        assert osgood_M(LOG, 1.0, 0.0) == 0.0

    def test_inverse_beyond_range(self):
        # F = x^beta is not Osgood, M saturates at 1/(beta C)
        P = power(1.0).verified()
        with pytest.raises(RangeError, match="exceeds the computed range"):
            osgood_solve(P, 1.0, 2.0, "M_inverse")

    def test_negative_arguments(self):
        with pytest.raises(RangeError, match="x >= 0"):
            osgood_M(LOG, 1.0, -1.0)
        with pytest.raises(RangeError, match="t >= 0"):
            osgood_solve(LOG, 1.0, -1.0, "M_inverse")
        with pytest.raises(ValueError, match="unknown direction"):
            osgood_solve(LOG, 1.0, 1.0, "M_prime")


class TestOsgoodBound:
    times = np.linspace(0.0, 2.0, 201)

    def test_gronwall(self):
        gam = 1.0 + np.sin(self.times) ** 2
        for t in (0.5, 1.0, 2.0):
            integral = 1.5 * t - math.sin(2 * t) / 4  # int 1 + sin^2
            bound = osgood_bound(3.0, (self.times, gam), lambda x: x, t)
            # trapezoid error on the gamma series dominates
            assert bound == pytest.approx(3.0 * math.exp(integral), rel=1e-4)

    def test_gronwall_exact_series(self):
        bound = osgood_bound(2.0, (self.times, np.full_like(self.times, 0.7)), lambda x: x, 1.3)
        assert bound == pytest.approx(2.0 * math.exp(0.7 * 1.3), rel=1e-8)

    def test_zero_gamma(self):
        assert osgood_bound(5.0, (self.times, np.zeros_like(self.times)), lambda x: x * math.log(x), 1.0) == 5.0

    def test_double_exponential(self):
        # rho' = gamma rho ln rho with gamma = 1, rho(0) = C
        C = 3.0
        sol = solve_ivp(lambda t, y: y * np.log(y), (0.0, 1.0), [C], rtol=1e-12, atol=1e-12, dense_output=True)
        for t in (0.25, 0.5, 1.0):
            bound = osgood_bound(C, (self.times, np.ones_like(self.times)), lambda x: x * math.log(x), t)
            assert bound == pytest.approx(sol.sol(t)[0], rel=1e-7)
            assert bound == pytest.approx(C ** math.exp(t), rel=1e-8)

    def test_time_outside_series(self):
        with pytest.raises(RangeError, match="beyond"):
            osgood_bound(1.0, (self.times, np.ones_like(self.times)), lambda x: x, 3.0)

    def test_negative_gamma(self):
        with pytest.raises(PreconditionError, match="nonnegative"):
            osgood_bound(1.0, (self.times, -np.ones_like(self.times)), lambda x: x, 1.0)
