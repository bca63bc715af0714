"""Initial-data families: smooth positive f0 sampled pointwise as w0 = f0^{1/p}."""

from __future__ import annotations

import math

import numpy as np

from . import fowler
from .errors import DomainError
from .flow import Field
from .problem import bubble_profile


def _f0_on_grid(grid, func_rho_theta) -> np.ndarray:
    if grid.kind == "periodic_line":
        return func_rho_theta(grid.rho, None)
    if grid.kind == "polar_arc":
        return func_rho_theta(None, grid.theta)
    rho = np.repeat(grid.rho, grid.theta.size)
    theta = np.tile(grid.theta, grid.rho.size)
    return func_rho_theta(rho, theta)


def constant_data(grid, spec, value: float = 1.0) -> Field:
    if value <= 0:
        raise DomainError("constant initial value must be positive")
    return Field(np.full(grid.size, value ** (1.0 / spec.p)), grid)


def cosine_data(grid, spec, base: float = 1.0, amplitude: float = 0.3,
                mode: int = 1) -> Field:
    """f0 = base + amplitude*cos(mode*theta) on the sphere, or
    base + amplitude*cos(2 pi mode rho / ell) along the cylinder axis."""
    if not abs(amplitude) < base:
        raise DomainError("need |amplitude| < base for positivity")

    def f0(rho, theta):
        if rho is None:
            return base + amplitude * np.cos(mode * theta)
        return base + amplitude * np.cos(2 * math.pi * mode * rho / spec.ell)

    return Field(_f0_on_grid(grid, f0) ** (1.0 / spec.p), grid)


def bubble_seed(grid, spec, lam: float) -> Field:
    if grid.theta is None:
        raise DomainError("bubble seeds require a sphere factor")

    def f0(rho, theta):
        return bubble_profile(spec.n, np.cos(theta), lam) ** spec.p

    return Field(_f0_on_grid(grid, f0) ** (1.0 / spec.p), grid)


def fowler_seed(grid, spec, k: int, phase: float = 0.0) -> Field:
    values = fowler.fowler_on_grid(spec.ell, k, phase, spec.n, spec.p, grid)
    return Field(values, grid)


def table_data(grid, spec, path) -> Field:
    values = np.loadtxt(path, delimiter=",", comments="#", ndmin=2)[:, -1]
    return Field(values, grid)


def make_initial(grid, spec, kind: str, params: dict) -> Field:
    makers = {
        "constant": lambda: constant_data(grid, spec, params.get("value", 1.0)),
        "cosine": lambda: cosine_data(grid, spec, params.get("base", 1.0),
                                      params.get("amplitude", 0.3),
                                      int(params.get("mode", 1))),
        "bubble_seed": lambda: bubble_seed(grid, spec, params["lambda"]),
        "fowler_seed": lambda: fowler_seed(grid, spec, int(params.get("k", 1)),
                                           params.get("phase", 0.0)),
        "table": lambda: table_data(grid, spec, params["path"]),
    }
    if kind not in makers:
        raise DomainError(f"unknown initial-data kind {kind!r}")
    return makers[kind]()
