import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate
from scipy.special import gamma

from fracthresh.kernel import fractional_laplacian_constant, symbol_constant
from fracthresh.limits import (ExtrapolationError, LawKind, RadialProfile, ball_curvature,
                               ball_level, fractional_curvature, half_space_level, limit_constant,
                               radius_law, richardson_tail_limit, sphere_area, unit_ball_curvature)
from fracthresh.limits.constants import slice_mass, slice_second_moment


# Independent oracles on the Fourier side: integrating the kernel over the
# hyperplane x_1 = 0 integrates its transform over the xi_1 axis.

def oracle_slice_mass(alpha, scale=1.0):
    return scale ** (-1 / alpha) * gamma(1 + 1 / alpha) / math.pi


def oracle_second_moment(alpha):
    # -d^2/dxi_2^2 exp(-|xi|^a) at xi_2 = 0 is a |xi_1|^(a-2) exp(-|xi_1|^a)
    return gamma(1 - 1 / alpha) / math.pi


def oracle_curvature(alpha, dim=2):
    # 2^(-a)/a times the angular integral of |theta_1|^(-a) over the sphere
    a = mp.mpf(alpha)
    with mp.workdps(30):
        if dim == 2:
            # 4 int_0^1 u^(-a) (1-u^2)^(-1/2) du with u = v^(1/(1-a))
            ang = 4 * mp.quad(lambda v: (1 - v ** (2 / (1 - a))) ** -0.5 / (1 - a), [0, 1])
        else:
            ang = 4 * mp.pi / (1 - a)
        return float(2 ** -a / a * ang)


class TestProfile:
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
    def test_normalization(self, alpha):
        prof = RadialProfile(2, alpha)
        v, _ = integrate.quad(lambda r: 2 * math.pi * r * prof.value(r), 0, 40, limit=200)
        tail = 2 * math.pi * prof.tail_integral(40, 1)[0]
        assert v + tail == pytest.approx(1.0, abs=1e-8)

    def test_cauchy_closed_form(self):
        prof = RadialProfile(2, 1.0)
        r = np.array([0.0, 0.3, 1.0, 2.5, 7.0])
        assert np.allclose(prof.values(r), 1 / (2 * math.pi) / (1 + r * r) ** 1.5, rtol=1e-11)
        prof3 = RadialProfile(3, 1.0, scale=2.0)
        assert prof3.value(1.5) == pytest.approx(2.0 / math.pi ** 2 / (4 + 2.25) ** 2, rel=1e-10)

    def test_gaussian_limit_shape(self):
        # alpha close to 2 approaches the heat kernel exp(-r^2/4)/(4 pi)
        prof = RadialProfile(2, 1.999)
        assert prof.value(0.5) == pytest.approx(math.exp(-0.0625) / (4 * math.pi), rel=5e-3)

    def test_series_matches_quadrature(self):
        prof = RadialProfile(2, 0.5)
        r = np.array([2.5, 4.0, 9.0])
        quad = np.array([prof.value(x) for x in r])
        assert np.allclose(prof.values(r), quad, rtol=1e-9)

    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5])
    def test_tail_limit(self, alpha):
        lim, err = richardson_tail_limit(RadialProfile(2, alpha))
        assert lim == pytest.approx(fractional_laplacian_constant(2, alpha), rel=1e-6)
        assert err < 1e-6 * lim

    def test_tail_limit_refuses_unconverged(self):
        with pytest.raises(ExtrapolationError):
            richardson_tail_limit(RadialProfile(2, 0.5), radii=(1, 2), tol=1e-15)
        with pytest.raises(ValueError):
            richardson_tail_limit(RadialProfile(2, 0.5), radii=(1, 2, 5))

    def test_refuses_unaffordable_quadrature(self):
        with pytest.raises(ValueError, match="quadrature panels"):
            RadialProfile(2, 0.15).value(0.25)
        # the series still covers large radii
        assert RadialProfile(2, 0.15).value(50.0) > 0

    def test_rejects(self):
        with pytest.raises(ValueError):
            RadialProfile(2, 2.0)
        with pytest.raises(ValueError):
            RadialProfile(2, 1.0).value(-1.0)


class TestConstants:
    @pytest.mark.parametrize("alpha", [0.5, 1.0, 1.5, 1.8])
    def test_slice_mass(self, alpha):
        v, e = slice_mass(RadialProfile(2, alpha))
        assert v == pytest.approx(oracle_slice_mass(alpha), rel=1e-9)

    @pytest.mark.parametrize("dim", [2, 3])
    @pytest.mark.parametrize("alpha", [1.2, 1.5, 1.8])
    def test_mcf_constant(self, alpha, dim):
        c = limit_constant(alpha, dim)
        expected = oracle_second_moment(alpha) / (2 * oracle_slice_mass(alpha))
        assert c.value == pytest.approx(expected, rel=1e-8)
        assert c.regime == "mcf" and c.error_estimate < 1e-6 * c.value

    def test_published_values(self):
        assert limit_constant(1.5).value == pytest.approx(1.48377, abs=5e-6)
        assert limit_constant(0.5).value == pytest.approx(0.0653781, abs=5e-7)
        assert limit_constant(1.0).value == pytest.approx(0.5, abs=1e-8)

    @pytest.mark.parametrize("dim", [2, 3])
    def test_critical_constant(self, dim):
        c = limit_constant(1.0, dim)
        oracle = (sphere_area(dim - 1) * fractional_laplacian_constant(dim, 1.0)
                  / ((dim - 1) * 2 * oracle_slice_mass(1.0)))
        assert c.value == pytest.approx(oracle, rel=1e-8)
        assert c.value == pytest.approx(0.5, rel=1e-8)
        assert c.factors["twice_slice_mass"] == pytest.approx(2 / math.pi, abs=1e-10)

    @pytest.mark.parametrize("alpha", [0.5, 0.8, pytest.param(0.3, marks=pytest.mark.slow)])
    def test_fractional_constant(self, alpha):
        std = limit_constant(alpha, 2, "standard").value
        assert std == pytest.approx(fractional_laplacian_constant(2, alpha)
                                    / (2 * oracle_slice_mass(alpha)), rel=2e-6)
        un = limit_constant(alpha, 2, "unnormalized").value
        assert un == pytest.approx(1 / (2 * oracle_slice_mass(alpha, symbol_constant(2, alpha))),
                                   rel=1e-8)

    def test_resolution_independence(self):
        for a in (0.5, 1.0, 1.5):
            fine = limit_constant(a, nodes=20).value
            coarse = limit_constant(a, nodes=10).value
            assert abs(coarse - fine) < 1e-4 * fine

    def test_regime_refusal(self):
        with pytest.raises(ValueError, match="does not apply"):
            limit_constant(1.0, regime="mcf")
        with pytest.raises(ValueError):
            limit_constant(0.5, regime="critical")
        assert limit_constant(1.5, regime="mcf").regime == "mcf"
        with pytest.raises(ValueError):
            limit_constant(1.5, dim=1)

    def test_second_moment_factor(self):
        v, _ = slice_second_moment(RadialProfile(2, 1.5))
        assert v == pytest.approx(oracle_second_moment(1.5), rel=1e-9)


class TestCurvature:
    def test_closed_form_matches_independent_quadrature(self):
        for a in (0.2, 0.5, 0.9):
            assert ball_curvature(a) == pytest.approx(oracle_curvature(a), rel=1e-12)
        assert ball_curvature(0.5, dim=3) == pytest.approx(oracle_curvature(0.5, 3), rel=1e-12)
        assert ball_curvature(0.5) == pytest.approx(14.832597418410975, rel=1e-14)

    @pytest.mark.parametrize("method", ["polar", "cartesian"])
    @pytest.mark.parametrize("alpha", [0.2, 0.5, 0.9])
    def test_unit_ball(self, alpha, method):
        res = fractional_curvature(ball_level(1.0), [1.0, 0.0], alpha, method=method)
        assert res.value == pytest.approx(ball_curvature(alpha), rel=1e-7)

    def test_scaling(self):
        vals = [fractional_curvature(ball_level(R), [0.0, R], 0.5).value * R ** 0.5
                for R in (0.5, 1.0, 2.0, 4.0)]
        assert (max(vals) - min(vals)) / np.mean(vals) < 1e-5

    def test_translation_and_boundary_point(self):
        c = [0.3, -1.2]
        x = [0.3 + 1.5 * math.cos(1.0), -1.2 + 1.5 * math.sin(1.0)]
        v = fractional_curvature(ball_level(1.5, c), x, 0.5).value
        assert v == pytest.approx(ball_curvature(0.5, radius=1.5), rel=1e-7)

    def test_half_space_is_flat(self):
        assert abs(fractional_curvature(half_space_level([1.0, 0.0]), [0.0, 0.0], 0.5).value) < 1e-8
        v = fractional_curvature(half_space_level([0.6, 0.8], 0.3), [0.18, 0.24], 0.3).value
        assert abs(v) < 1e-8

    def test_complement_flips_sign(self):
        outside = lambda y: -ball_level(1.0)(y)
        v = fractional_curvature(outside, [1.0, 0.0], 0.5).value
        assert v == pytest.approx(-ball_curvature(0.5), rel=1e-7)

    def test_monotone_under_inclusion(self):
        # small ball inside the unit ball, tangent at (1, 0)
        inner = fractional_curvature(ball_level(0.5, [0.5, 0.0]), [1.0, 0.0], 0.5).value
        outer = fractional_curvature(ball_level(1.0), [1.0, 0.0], 0.5).value
        assert inner > outer
        # a square-ish superellipse containing the unit disk, tangent at (1, 0)
        box = lambda y: 1.0 - (np.atleast_2d(y)[:, 0] ** 4 + np.atleast_2d(y)[:, 1] ** 4) ** 0.25
        assert fractional_curvature(box, [1.0, 0.0], 0.5).value < outer

    def test_rejects(self):
        phi = ball_level(1.0)
        with pytest.raises(ValueError):
            fractional_curvature(phi, [1.0, 0.0], 1.2)
        with pytest.raises(ValueError):
            fractional_curvature(phi, [0.5, 0.0], 0.5)
        with pytest.raises(ValueError):
            fractional_curvature(phi, [1.0, 0.0], 0.5, method="spherical")
        with pytest.raises(ValueError):
            fractional_curvature(phi, [1.0, 0.0], 0.5, delta=0.0)

    @pytest.mark.slow
    def test_three_dimensional_ball(self):
        v = fractional_curvature(ball_level(1.0), [1.0, 0.0, 0.0], 0.5).value
        assert v == pytest.approx(ball_curvature(0.5, dim=3), rel=1e-6)


class TestRadiusLaw:
    def test_mcf_ode(self):
        law = radius_law("mcf", 1.5)
        t, dt = 0.3, 1e-6
        dr = (law(t + dt) - law(t - dt)) / (2 * dt)
        assert dr == pytest.approx(-law.velocity(law(t)), abs=1e-8)
        assert law.extinction_time == pytest.approx(1 / (2 * limit_constant(1.5).value))

    def test_fractional_ode(self):
        law = radius_law(LawKind.FRACTIONAL, 0.5)
        assert law.constant == pytest.approx(0.96973, abs=5e-6)
        t, dt = 0.4, 1e-6
        dr = (law(t + dt) - law(t - dt)) / (2 * dt)
        assert dr == pytest.approx(-law.constant * law(t) ** -0.5, abs=1e-8)

    @settings(max_examples=50, deadline=None)
    @given(R0=st.floats(0.1, 10), frac=st.floats(0.01, 0.99), C=st.floats(0.1, 3))
    def test_laws_are_exact_solutions(self, R0, frac, C):
        for kind, a in ((LawKind.MCF, 1.5), (LawKind.FRACTIONAL, 0.4)):
            law = radius_law(kind, a, R0=R0, constant=C, curvature=1.0)
            t = frac * law.extinction_time
            r = law(t)
            assert r ** law.exponent == pytest.approx(R0 ** law.exponent - law.rate * t, rel=1e-9)
            assert 0 < r < R0

    def test_after_extinction_and_vector_input(self):
        law = radius_law("mcf", 1.0, constant=0.5)
        assert law(2.0) == 0.0 and law(law.extinction_time) == 0.0
        assert law(np.array([0.0, 0.5])).shape == (2,)
        with pytest.raises(ValueError):
            law(-0.1)

    def test_regime_checks(self):
        with pytest.raises(ValueError):
            radius_law("mcf", 0.5)
        with pytest.raises(ValueError):
            radius_law("fractional", 1.0)
        with pytest.raises(ValueError):
            radius_law("mcf", 1.5, R0=0.0)

    def test_three_dimensional_law_uses_closed_curvature(self):
        law = radius_law("fractional", 0.5, dim=3)
        assert law.constant == pytest.approx(limit_constant(0.5, 3).value * ball_curvature(0.5, 3))

    def test_curvature_methods_agree(self):
        assert unit_ball_curvature(0.5, method="polar") == pytest.approx(
            unit_ball_curvature(0.5, method="cartesian"), abs=1e-6)
        assert unit_ball_curvature(0.5, method="closed") == ball_curvature(0.5)
