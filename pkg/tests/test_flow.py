"""Implicit integration: exact constant dynamics, adaptivity, extinction search."""

import math
import types

import numpy as np
import pytest

from fdelab import diagnostics, flow
from fdelab.errors import DomainError, TimeStepUnderflow
from fdelab.flow import Field, FlowConfig, StopRule
from fdelab.geometry import assemble_operator, build_grid
from fdelab.initial import make_initial
from fdelab.problem import ProblemSpec, stationary_constant


SPEC = ProblemSpec(n=4, geometry="sphere", p=3.0)


def small_grid(n_theta=32):
    return build_grid(SPEC, n_theta)


class TestStepImplicit:
    def test_constant_step_matches_exact_ode(self):
        # d(w^3)/dt = -w has backward-Euler update solvable by hand
        grid = small_grid()
        op = assemble_operator(grid, SPEC.a, SPEC.b)
        w0 = np.ones(grid.size)
        dt = 1e-3
        w1, report = flow.step_implicit(w0, dt, op, 3.0, 0.0)
        # exact solution w(t) = sqrt(1 - 2t/3): one small step should agree to O(dt^2)
        exact = math.sqrt(1.0 - 2.0 * dt / 3.0)
        assert np.allclose(w1, exact, atol=5e-7)
        assert report.newton_iterations >= 1

    def test_preserves_spatial_constancy(self):
        grid = small_grid()
        op = assemble_operator(grid, SPEC.a, SPEC.b)
        w1, _ = flow.step_implicit(np.full(grid.size, 0.8), 1e-2, op, 3.0, 0.0)
        assert w1.std() < 1e-12


class TestRawRun:
    def test_constant_mass_decay_is_linear(self):
        grid = small_grid()
        initial = make_initial(grid, SPEC, "constant", {"value": 1.0})
        cfg = FlowConfig(mode="raw", stop=StopRule("extinction", 0.05),
                         dt_initial=1e-3, dt_min=1e-9, dt_max=1e-3)
        rec = flow.run(initial, SPEC, cfg)
        z = rec.column("zeta")
        t = rec.times
        # zeta(t) = zeta(0) (1 - 2t/3) exactly in the continuum
        expect = z[0] * (1.0 - 2.0 * t / 3.0)
        assert np.abs(z - expect).max() < 5e-3 * z[0]
        assert rec.stop_reason == "extinction"

    def test_zeta_strictly_decreasing_and_h_monotone(self):
        grid = small_grid()
        initial = make_initial(grid, SPEC, "cosine", {"base": 1.0, "amplitude": 0.3})
        cfg = FlowConfig(mode="raw", stop=StopRule("extinction", 0.1),
                         dt_initial=2e-3, dt_min=1e-9, dt_max=2e-3)
        rec = flow.run(initial, SPEC, cfg)
        assert np.all(np.diff(rec.column("zeta")) < 0)
        assert np.diff(rec.column("H")).max() <= 1e-10

    def test_sign_error_in_zeroth_order_is_caught(self):
        # a flipped sign in b makes the mass grow; the monotone guard must
        # refuse every step until the step size underflows
        grid = small_grid()
        initial = make_initial(grid, SPEC, "constant", {"value": 1.0})
        broken = types.SimpleNamespace(a=0.0, b=1.0, p=3.0)
        cfg = FlowConfig(mode="raw", stop=StopRule("extinction", 0.5),
                         dt_initial=1e-3, dt_min=1e-7, dt_max=1e-3)
        with pytest.raises(TimeStepUnderflow):
            flow.run(initial, broken, cfg)

    def test_underflow_dump_contents(self):
        grid = small_grid()
        initial = make_initial(grid, SPEC, "constant", {"value": 1.0})
        broken = types.SimpleNamespace(a=0.0, b=1.0, p=3.0)
        cfg = FlowConfig(mode="raw", stop=StopRule("extinction", 0.5),
                         dt_initial=1e-3, dt_min=1e-7, dt_max=1e-3)
        try:
            flow.run(initial, broken, cfg)
        except TimeStepUnderflow as exc:
            assert {"t", "zeta", "zeta0", "J", "sup", "inf"} <= set(exc.dump)
        else:
            pytest.fail("expected a step-size underflow")


class TestExtinctionTime:
    def test_constant_data_oracle(self):
        grid = small_grid(64)
        initial = make_initial(grid, SPEC, "constant", {"value": 1.0})
        t_star, uncertainty = flow.estimate_extinction_time(initial, SPEC)
        assert t_star == pytest.approx(1.5, abs=1e-3)
        assert uncertainty < 5e-3

    def test_respects_lower_bracket(self):
        grid = small_grid()
        initial = make_initial(grid, SPEC, "cosine", {"base": 1.0, "amplitude": 0.2})
        op = assemble_operator(grid, SPEC.a, SPEC.b)
        zeta0 = diagnostics.zeta(initial.values, grid, 3.0)
        h0 = diagnostics.rayleigh_quotient(initial.values, op, 3.0)
        t_star, _ = flow.estimate_extinction_time(initial, SPEC)
        assert t_star >= 3.0 * zeta0 / (4.0 * h0)

    def test_refinement_lands_on_the_separatrix(self):
        grid = small_grid()
        initial = make_initial(grid, SPEC, "constant", {"value": 1.0})
        t_est, unc = flow.estimate_extinction_time(initial, SPEC)
        t_ref = flow.refine_extinction_time(initial, SPEC, t_est, unc)
        # for exactly constant data the discrete flow is the exact ODE
        assert t_ref == pytest.approx(1.5, rel=2e-3)
        verdict_low = flow._rescaled_verdict(initial, SPEC, t_ref * 0.97, 0.25, 400.0)
        verdict_high = flow._rescaled_verdict(initial, SPEC, t_ref * 1.03, 0.25, 400.0)
        assert (verdict_low, verdict_high) == ("low", "high")


class TestRescaledRun:
    def test_relaxes_to_stationary_constant(self):
        grid = small_grid()
        initial = make_initial(grid, SPEC, "cosine", {"base": 1.0, "amplitude": 0.2})
        t_est, unc = flow.estimate_extinction_time(initial, SPEC)
        t_ref = flow.refine_extinction_time(initial, SPEC, t_est, unc)
        cfg = FlowConfig(mode="rescaled", stop=StopRule("steady_state", 1e-8),
                         t_star=t_ref, dt_initial=1e-2, dt_min=1e-14,
                         dt_max=0.25, t_max=400.0)
        rec = flow.run(initial, SPEC, cfg)
        vbar = stationary_constant(4, 3.0, t_ref)
        assert rec.stop_reason in ("steady_state", "drift_minimum")
        assert np.abs(rec.final - vbar).max() / vbar < 1e-3

    def test_monotone_quantities_recorded(self):
        grid = small_grid()
        initial = make_initial(grid, SPEC, "cosine", {"base": 1.0, "amplitude": 0.2})
        cfg = FlowConfig(mode="rescaled", stop=StopRule("time_reached", 2.0),
                         t_star=1.5, dt_initial=1e-2, dt_min=1e-12, dt_max=0.05)
        rec = flow.run(initial, SPEC, cfg)
        assert np.diff(rec.column("H")).max() <= 1e-8
        assert np.diff(rec.column("J")).max() <= 1e-8
        assert rec.column("J").min() >= -1e-8
        assert np.all(rec.column("harnack_ratio") >= 1.0)

    def test_requires_t_star(self):
        with pytest.raises(DomainError):
            FlowConfig(mode="rescaled", stop=StopRule("time_reached", 1.0))

    def test_band_stop_classifies_runaway(self):
        grid = small_grid()
        initial = make_initial(grid, SPEC, "constant", {"value": 1.0})
        cfg = FlowConfig(mode="rescaled", stop=StopRule("band", 2.0),
                         t_star=3.0, dt_initial=1e-2, dt_min=1e-14,
                         dt_max=0.25, t_max=400.0)
        rec = flow.run(initial, SPEC, cfg)  # T* far too large: mass collapses
        assert rec.stop_reason == "collapse"

    def test_time_cap(self):
        grid = small_grid()
        initial = make_initial(grid, SPEC, "cosine", {"base": 1.0, "amplitude": 0.1})
        cfg = FlowConfig(mode="rescaled", stop=StopRule("time_reached", 50.0),
                         t_star=1.5, dt_initial=1e-2, dt_min=1e-12,
                         dt_max=0.05, t_max=0.5)
        rec = flow.run(initial, SPEC, cfg)
        assert rec.stop_reason == "time_cap"
        assert rec.times[-1] <= 0.5 + 0.05


class TestFieldValidation:
    def test_size_mismatch(self):
        grid = small_grid()
        with pytest.raises(DomainError):
            Field(np.ones(grid.size + 1), grid)

    def test_nonfinite_rejected(self):
        grid = small_grid()
        bad = np.ones(grid.size)
        bad[0] = math.nan
        with pytest.raises(DomainError):
            Field(bad, grid)
