"""Closed-form constants: frozen oracle values and structural invariants."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fdelab.errors import DomainError
from fdelab.problem import (
    ProblemSpec,
    bubble_profile,
    critical_marcinkiewicz_exponent,
    derive_coefficients,
    singular_barenblatt,
    sphere_area,
    stationary_constant,
)


class TestCoefficients:
    def test_critical_exponent_n4(self):
        a, b = derive_coefficients(4, 3.0)
        assert a == pytest.approx(0.0, abs=1e-15)
        assert b == pytest.approx(-1.0, abs=1e-15)

    def test_supercritical_n4_p5(self):
        a, b = derive_coefficients(4, 5.0)
        assert a == pytest.approx(1.0, abs=1e-15)
        assert b == pytest.approx(-0.75, abs=1e-15)

    def test_drift_vanishes_exactly_at_critical_p(self):
        for n in (3, 4, 5, 6, 10):
            a, _ = derive_coefficients(n, (n + 2) / (n - 2))
            assert a == pytest.approx(0.0, abs=1e-14)

    def test_zeroth_order_at_critical_p_is_minus_quarter_square(self):
        # b = -(n-2)^2/4 at the critical exponent
        for n in (4, 5, 6):
            _, b = derive_coefficients(n, (n + 2) / (n - 2))
            assert b == pytest.approx(-((n - 2) ** 2) / 4.0, rel=1e-13)

    @given(n=st.integers(3, 12), p=st.floats(1.01, 50.0))
    def test_signs(self, n, p):
        a, b = derive_coefficients(n, p)
        crit = (n + 2) / (n - 2)
        assert (a > 0) == (p > crit) or abs(p - crit) < 1e-9
        # b is negative exactly when p exceeds n/(n-2)
        if p > n / (n - 2) + 1e-9:
            assert b < 0

    def test_rejects_low_dimension(self):
        with pytest.raises(DomainError):
            derive_coefficients(2, 3.0)


class TestStationaryConstant:
    def test_unit_value_at_t_star_three_halves(self):
        assert stationary_constant(4, 3.0, 1.5) == pytest.approx(1.0, abs=1e-15)

    def test_n4_p3_unit_time(self):
        assert stationary_constant(4, 3.0, 1.0) == pytest.approx(math.sqrt(2.0 / 3.0), rel=1e-15)

    def test_n4_p5_unit_time(self):
        assert stationary_constant(4, 5.0, 1.0) == pytest.approx((3.0 / 5.0) ** 0.25, rel=1e-15)

    @given(t=st.floats(0.01, 100.0))
    def test_scaling_in_extinction_time(self, t):
        # value scales like t^{1/(p-1)}
        base = stationary_constant(4, 3.0, 1.0)
        assert stationary_constant(4, 3.0, t) == pytest.approx(base * t ** 0.5, rel=1e-12)

    def test_rejects_subcritical_mass_range(self):
        with pytest.raises(DomainError):
            stationary_constant(4, 1.5, 1.0)  # (n-2)p <= n


class TestMarcinkiewiczExponent:
    def test_oracles(self):
        assert critical_marcinkiewicz_exponent(4, 1.0 / 3.0) == pytest.approx(4.0 / 3.0)
        assert critical_marcinkiewicz_exponent(3, 1.0 / 3.0) == pytest.approx(1.0)

    def test_range_check(self):
        with pytest.raises(DomainError):
            critical_marcinkiewicz_exponent(4, 0.9)


class TestSingularBarenblatt:
    def test_oracle_value(self):
        val = singular_barenblatt(4, 1.0 / 3.0, 1.0, 0.0, 1.0)
        assert val == pytest.approx((2.0 / 3.0) ** 1.5, rel=1e-14)

    def test_vanishes_at_extinction(self):
        assert singular_barenblatt(4, 1.0 / 3.0, 1.0, 1.0 - 1e-12, 2.0) < 1e-15

    @given(r=st.floats(0.01, 100.0), t=st.floats(0.0, 0.99))
    def test_radial_decay_and_positivity(self, r, t):
        u = singular_barenblatt(4, 1.0 / 3.0, 1.0, t, r)
        assert u > 0
        # decays like r^{-2/(1-m)} = r^{-3}
        assert singular_barenblatt(4, 1.0 / 3.0, 1.0, t, 2 * r) == pytest.approx(u / 8.0, rel=1e-10)

    def test_rejects_after_extinction(self):
        with pytest.raises(DomainError):
            singular_barenblatt(4, 1.0 / 3.0, 1.0, 1.5, 1.0)


class TestBubble:
    def test_oracle_antipode(self):
        val = bubble_profile(4, math.cos(math.pi), 2.0)
        expected = (3.0 / 5.0) ** 0.25 * (math.sqrt(3.0) / 3.0) ** 0.5
        assert val == pytest.approx(expected, rel=1e-14)

    def test_flat_limit_is_the_constant(self):
        gap = abs(bubble_profile(4, 0.3, 1e12) - stationary_constant(4, 5.0, 1.0))
        assert gap < 1e-10

    @given(lam=st.floats(1.001, 100.0))
    def test_max_at_center(self, lam):
        cos_d = np.linspace(-1.0, 1.0, 101)
        vals = bubble_profile(4, cos_d, lam)
        assert np.argmax(vals) == len(cos_d) - 1  # cos=1 is the center

    def test_rejects_lambda_at_most_one(self):
        with pytest.raises(DomainError):
            bubble_profile(4, 0.0, 1.0)


class TestSphereArea:
    def test_volumes(self):
        assert sphere_area(4) == pytest.approx(2 * math.pi**2, rel=1e-15)  # S^3
        assert sphere_area(3) == pytest.approx(4 * math.pi, rel=1e-15)  # S^2
        assert sphere_area(2) == pytest.approx(2 * math.pi, rel=1e-15)  # S^1


class TestProblemSpec:
    def test_m_p_consistency(self):
        spec = ProblemSpec(n=4, geometry="sphere", p=3.0)
        assert spec.m == pytest.approx(1.0 / 3.0, rel=1e-15)
        with pytest.raises(DomainError):
            ProblemSpec(n=4, geometry="sphere", p=3.0, m=0.5)

    def test_requires_exponent(self):
        with pytest.raises(DomainError):
            ProblemSpec(n=4, geometry="sphere")

    def test_cylinder_requires_ell(self):
        with pytest.raises(DomainError):
            ProblemSpec(n=4, geometry="cylinder_rho", p=3.0)

    def test_derived_coefficients_attached(self):
        spec = ProblemSpec(n=4, geometry="cylinder_rho", p=3.0, ell=6.0)
        assert (spec.a, spec.b) == (0.0, -1.0)
        assert spec.critical_p == pytest.approx(3.0)

    def test_with_t_star(self):
        spec = ProblemSpec(n=4, geometry="sphere", p=3.0)
        assert spec.with_t_star(2.0).t_star == 2.0

    def test_json_round_trip_keys(self):
        spec = ProblemSpec(n=4, geometry="sphere", p=3.0, t_star=1.5)
        js = spec.to_json()
        assert js["n"] == 4 and js["p"] == 3.0 and js["b"] == -1.0
