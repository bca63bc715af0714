"""Grids and discrete operators: quadrature exactness, symmetry, convergence order."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fdelab.errors import DomainError
from fdelab.geometry import (
    assemble_operator,
    build_grid,
    periodic_line,
    polar_arc,
    tensor_grid,
)
from fdelab.problem import ProblemSpec, sphere_area


class TestGridConstruction:
    def test_minimum_resolution_enforced(self):
        with pytest.raises(DomainError):
            polar_arc(4, 8)

    def test_polar_total_volume_exact(self):
        grid = polar_arc(4, 64)
        assert grid.total_volume == pytest.approx(2 * math.pi**2, rel=1e-13)

    def test_periodic_total_volume_exact(self):
        grid = periodic_line(4, 6.0, 64)
        assert grid.total_volume == pytest.approx(6.0 * sphere_area(4), rel=1e-13)

    def test_tensor_total_volume_exact(self):
        grid = tensor_grid(4, 5.0, 32, 24)
        assert grid.total_volume == pytest.approx(5.0 * 2 * math.pi**2, rel=1e-12)

    def test_build_grid_dispatch(self):
        assert build_grid(ProblemSpec(n=4, geometry="sphere", p=3.0), 32).kind == "polar_arc"
        assert build_grid(ProblemSpec(n=4, geometry="cylinder_rho", p=3.0, ell=4.0), 32).kind == "periodic_line"
        g = build_grid(ProblemSpec(n=4, geometry="cylinder_full", p=3.0, ell=4.0), (32, 24))
        assert g.kind == "tensor" and g.shape == (32, 24)

    def test_weights_positive(self):
        for grid in (polar_arc(4, 32), periodic_line(4, 4.0, 32), tensor_grid(5, 3.0, 16, 16)):
            assert np.all(grid.weights > 0)

    @given(q=st.floats(1.0, 6.0), mu=st.floats(0.1, 10.0))
    @settings(max_examples=25)
    def test_norm_homogeneity(self, q, mu):
        grid = polar_arc(4, 32)
        v = 1.0 + 0.5 * np.cos(grid.theta)
        assert grid.norm_lq(mu * v, q) == pytest.approx(mu * grid.norm_lq(v, q), rel=1e-12)


class TestQuadrature:
    def test_polar_integrates_cos_exactly_in_the_limit(self):
        # integral of cos(theta) sin^2(theta) over S^3 is 0 by symmetry
        grid = polar_arc(4, 64)
        assert abs(grid.integrate(np.cos(grid.theta))) < 1e-13

    def test_polar_integrates_cos_squared(self):
        # integral over S^3 of cos^2(dist): (2 pi^2) / 4
        grid = polar_arc(4, 256)
        val = grid.integrate(np.cos(grid.theta) ** 2)
        assert val == pytest.approx(2 * math.pi**2 / 4, rel=1e-4)

    def test_periodic_integrates_fourier_mode_to_zero(self):
        grid = periodic_line(4, 6.0, 64)
        assert abs(grid.integrate(np.sin(2 * math.pi * grid.rho / 6.0))) < 1e-12


class TestOperator:
    def test_constant_in_kernel_of_laplacian(self):
        for grid in (polar_arc(4, 48), periodic_line(4, 5.0, 48), tensor_grid(4, 5.0, 24, 24)):
            op = assemble_operator(grid, 0.0, -1.0)
            ones = np.ones(grid.size)
            # Delta 1 = 0, so (Delta + b) 1 = b
            assert np.allclose(op.apply(ones), -1.0, atol=1e-11)

    def test_self_adjoint_in_weighted_inner_product(self):
        rng = np.random.default_rng(7)
        for grid in (polar_arc(4, 48), periodic_line(4, 5.0, 48)):
            op = assemble_operator(grid, 0.0, -1.0)
            u = rng.uniform(0.5, 1.5, grid.size)
            v = rng.uniform(0.5, 1.5, grid.size)
            lhs = grid.integrate(u * (op.laplacian_only @ v))
            rhs = grid.integrate(v * (op.laplacian_only @ u))
            assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-11)

    def test_laplacian_nonpositive_quadratic_form(self):
        rng = np.random.default_rng(11)
        grid = polar_arc(4, 64)
        op = assemble_operator(grid, 0.0, -1.0)
        for _ in range(5):
            v = rng.uniform(0.1, 2.0, grid.size)
            assert grid.integrate(v * (op.laplacian_only @ v)) <= 1e-12

    def test_polar_laplacian_second_order(self):
        # eigenfunction check: Delta cos(dist) = -(n-1) cos(dist) on S^{n-1}
        errs = []
        for n_theta in (64, 128, 256):
            grid = polar_arc(4, n_theta)
            op = assemble_operator(grid, 0.0, 0.0)
            v = np.cos(grid.theta)
            errs.append(np.abs(op.apply(v) + 3.0 * v).max())
        rate1 = math.log2(errs[0] / errs[1])
        rate2 = math.log2(errs[1] / errs[2])
        assert 1.8 < rate1 < 2.2 and 1.8 < rate2 < 2.2

    def test_periodic_laplacian_second_order(self):
        errs = []
        for n_rho in (64, 128, 256):
            grid = periodic_line(4, 2 * math.pi, n_rho)
            op = assemble_operator(grid, 0.0, 0.0)
            v = np.cos(grid.rho)
            errs.append(np.abs(op.apply(v) + v).max())
        rate = math.log2(errs[0] / errs[2]) / 2
        assert 1.8 < rate < 2.2

    def test_drift_antisymmetric_on_periodic_grid(self):
        grid = periodic_line(4, 5.0, 48)
        op_with = assemble_operator(grid, 1.0, 0.0)
        op_without = assemble_operator(grid, 0.0, 0.0)
        drift = op_with.matrix - op_without.matrix
        asym = (drift + drift.T).toarray()
        assert np.abs(asym).max() < 1e-13

    def test_sphere_grid_ignores_drift_coefficient(self):
        grid = polar_arc(4, 32)
        op = assemble_operator(grid, 1.0, -0.75)
        assert op.a == 0.0  # no rho axis: the drift term cannot act

    def test_tensor_flattening_order(self):
        grid = tensor_grid(4, 5.0, 20, 16)
        rho_field = np.repeat(grid.rho, grid.theta.size)
        assert rho_field.shape == (grid.size,)
        assert rho_field.reshape(grid.shape)[3, :].std() == 0.0
