"""Phase plane of the critical stationary equation: orbits, periods, energies."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fdelab import fowler
from fdelab.errors import DomainError, UnboundedOrbit
from fdelab.geometry import periodic_line
from fdelab.problem import stationary_constant


N, P = 4, 3.0
E_C = -1.0 / 6.0


class TestCenter:
    def test_center_energy_oracle(self):
        assert fowler.center_energy(N, P) == pytest.approx(E_C, rel=1e-14)

    def test_center_state_oracle(self):
        assert fowler.center_state(N, P) == pytest.approx(math.sqrt(2.0 / 3.0), rel=1e-14)
        assert fowler.center_state(N, P) == pytest.approx(stationary_constant(N, P, 1.0))

    def test_harmonic_period(self):
        assert fowler.harmonic_period(4) == pytest.approx(2 * math.pi / math.sqrt(2.0), rel=1e-14)

    def test_requires_critical_exponent(self):
        with pytest.raises(DomainError):
            fowler.potential(1.0, 4, 5.0)


class TestFirstIntegral:
    @given(v=st.floats(0.05, 3.0), dv=st.floats(-1.0, 1.0))
    def test_energy_definition(self, v, dv):
        e = fowler.first_integral(v, dv, N, P)
        assert e == pytest.approx(0.5 * dv**2 + fowler.potential(v, N, P), rel=1e-13)

    def test_conserved_along_orbit(self):
        e0 = -0.05
        _, v_max = fowler.turning_points(e0, N, P)
        rho, v, dv = fowler.integrate_orbit((v_max, 0.0), 10.0, N, P, steps=20_000)
        e = fowler.first_integral(v, dv, N, P)
        assert np.abs(e - e0).max() < 1e-9

    def test_unbounded_orbit_rejected(self):
        with pytest.raises(UnboundedOrbit):
            fowler.integrate_orbit((3.0, 0.0), 10.0, N, P)  # E > 0


class TestTurningPoints:
    @given(frac=st.floats(1e-3, 0.999))
    @settings(max_examples=30)
    def test_bracket_center(self, frac):
        e = E_C * (1 - frac)
        v_min, v_max = fowler.turning_points(e, N, P)
        v_bar = fowler.center_state(N, P)
        assert 0 < v_min < v_bar < v_max
        assert fowler.potential(v_min, N, P) == pytest.approx(e, abs=1e-10)
        assert fowler.potential(v_max, N, P) == pytest.approx(e, abs=1e-10)

    def test_rejects_energy_outside_window(self):
        with pytest.raises(DomainError):
            fowler.turning_points(0.1, N, P)
        with pytest.raises(DomainError):
            fowler.turning_points(E_C - 0.01, N, P)


class TestPeriods:
    def test_harmonic_limit(self):
        period = fowler.minimal_period(E_C + 1e-4, N, P)
        assert period == pytest.approx(fowler.harmonic_period(4), rel=5e-3)

    def test_always_above_threshold(self):
        for frac in np.linspace(1e-4, 0.999, 25):
            e = E_C * (1 - frac)
            assert fowler.minimal_period(e, N, P) > fowler.harmonic_period(4)

    def test_period_increases_with_energy(self):
        es = E_C * (1 - np.linspace(0.01, 0.99, 12))
        periods = [fowler.minimal_period(e, N, P) for e in es]
        assert all(b > a for a, b in zip(periods, periods[1:]))

    def test_quadrature_matches_orbit_integration(self):
        for e in (-0.15, -0.08, -0.02):
            quad_period = fowler.minimal_period(e, N, P)
            orbit_period = fowler.period_from_orbit(e, N, P)
            assert orbit_period == pytest.approx(quad_period, rel=1e-6)

    def test_energy_for_period_round_trip(self):
        e = fowler.energy_for_period(6.0, N, P)
        assert fowler.minimal_period(e, N, P) == pytest.approx(6.0, abs=1e-10)

    def test_no_orbit_below_threshold(self):
        with pytest.raises(DomainError):
            fowler.energy_for_period(4.0, N, P)  # < 2 pi / sqrt(2)

    def test_n5_threshold(self):
        n, p = 5, 7.0 / 3.0
        e_c = fowler.center_energy(n, p)
        period = fowler.minimal_period(e_c * 0.5, n, p)
        assert period > fowler.harmonic_period(5)


class TestSampling:
    def test_sample_orbit_peak_at_phase(self):
        e = fowler.energy_for_period(6.0, N, P)
        rho = np.linspace(0, 6.0, 600, endpoint=False)
        vals = fowler.sample_orbit(e, N, P, rho, phase=1.25)
        _, v_max = fowler.turning_points(e, N, P)
        peak_rho = rho[np.argmax(vals)]
        assert peak_rho == pytest.approx(1.25, abs=0.02)
        assert vals.max() == pytest.approx(v_max, rel=1e-6)

    def test_fowler_on_grid_round_trip(self):
        grid = periodic_line(4, 6.0, 128)
        field = fowler.fowler_on_grid(6.0, 1, 0.0, N, P, grid)
        e = fowler.energy_for_period(6.0, N, P)
        direct = fowler.sample_orbit(e, N, P, grid.rho)
        assert np.allclose(field, direct, atol=1e-12)

    def test_fowler_on_grid_constant_sentinel(self):
        grid = periodic_line(4, 6.0, 32)
        field = fowler.fowler_on_grid(6.0, 0, 0.0, N, P, grid)
        assert np.allclose(field, fowler.center_state(N, P))

    def test_describe_orbit_fields(self):
        orb = fowler.describe_orbit(-0.05, N, P)
        assert orb.v_min < fowler.center_state(N, P) < orb.v_max
        assert orb.period > fowler.harmonic_period(4)
