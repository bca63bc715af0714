"""Phase plane of the critical stationary ODE v'' + b v + (p/(p-1)) v^p = 0.

Valid only at the critical exponent p = (n+2)/(n-2), where stationary states
of the cylinder flow are rho-dependent.  Bounded nonconstant orbits live at
first-integral values between the center energy and 0 and are periodic with
period above 2*pi/sqrt(n-2).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import IntegrationWarning, quad
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .errors import DomainError, UnboundedOrbit
from .problem import derive_coefficients, stationary_constant

ENERGY_TOL = 1e-12
TURNING_TOL = 1e-12
CRITICAL_P_TOL = 1e-9


def _require_critical(n: int, p: float) -> float:
    p_crit = (n + 2) / (n - 2)
    if abs(p - p_crit) > CRITICAL_P_TOL * p_crit:
        raise DomainError(f"phase-plane toolkit requires p=(n+2)/(n-2)={p_crit}, got {p}")
    _, b = derive_coefficients(n, p)
    return b


def potential(v, n: int, p: float):
    """Potential part of the first integral: b v^2/2 + (p/((p-1)(p+1))) v^{p+1}."""
    b = _require_critical(n, p)
    v = np.asarray(v, dtype=float)
    out = 0.5 * b * v**2 + p / ((p - 1) * (p + 1)) * v ** (p + 1)
    return float(out) if out.ndim == 0 else out


def first_integral(v, dv, n: int, p: float):
    """Conserved energy E = dv^2/2 + potential(v)."""
    out = 0.5 * np.asarray(dv, dtype=float) ** 2 + potential(v, n, p)
    return float(out) if np.ndim(out) == 0 else out


def center_state(n: int, p: float) -> float:
    _require_critical(n, p)
    return stationary_constant(n, p, 1.0)

def center_energy(n: int, p: float) -> float:
    return potential(center_state(n, p), n, p)


def harmonic_period(n: int) -> float:
    """Linearization period at the center: 2 pi / sqrt(n-2)."""
    return 2.0 * math.pi / math.sqrt(n - 2)


def integrate_orbit(start, length: float, n: int, p: float, steps: int = 10_000):
    """Fixed-step RK4 integration of the orbit; returns (rho, v, dv) arrays."""
    b = _require_critical(n, p)
    e_c = center_energy(n, p)
    v, dv = float(start[0]), float(start[1])
    e0 = first_integral(v, dv, n, p)
    if v <= 0 or e0 >= 0:
        raise UnboundedOrbit(f"start (v={v}, E={e0}) is not a bounded orbit")
    if e0 < e_c - 1e-12:
        raise DomainError(f"energy {e0} below center energy {e_c}")
    h = length / steps
    coef = p / (p - 1)
    rho = np.linspace(0.0, length, steps + 1)
    vs = np.empty(steps + 1)
    dvs = np.empty(steps + 1)
    vs[0], dvs[0] = v, dv
    def accel(vv):
        if vv <= 0:
            raise UnboundedOrbit("orbit reached v <= 0 inside a stage")
        return -b * vv - coef * vv**p

    for i in range(steps):
        a1 = accel(v)
        v2 = v + 0.5 * h * dv
        dv2 = dv + 0.5 * h * a1
        a2 = accel(v2)
        v3 = v + 0.5 * h * dv2
        dv3 = dv + 0.5 * h * a2
        a3 = accel(v3)
        v4 = v + h * dv3
        dv4 = dv + h * a3
        a4 = accel(v4)
        v = v + h / 6.0 * (dv + 2 * dv2 + 2 * dv3 + dv4)
        dv = dv + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        if v <= 0:
            raise UnboundedOrbit(f"orbit reached v <= 0 at rho={rho[i + 1]}")
        vs[i + 1], dvs[i + 1] = v, dv
    return rho, vs, dvs


def turning_points(energy: float, n: int, p: float) -> tuple[float, float]:
    """Solve potential(v) = E on either side of the center by bisection."""
    e_c = center_energy(n, p)
    if not e_c < energy < 0:
        raise DomainError(f"energy {energy} outside ({e_c}, 0)")
    v_bar = center_state(n, p)

    def res(v):
        return potential(v, n, p) - energy

    v_min = brentq(res, 1e-14, v_bar, xtol=TURNING_TOL)
    hi = 2.0 * v_bar
    while res(hi) < 0:
        hi *= 2.0
    v_max = brentq(res, v_bar, hi, xtol=TURNING_TOL)
    return v_min, v_max


def minimal_period(energy: float, n: int, p: float) -> float:
    """Orbit period by quadrature between turning points.

    The substitution v = v_turn -/+ s^2 removes the inverse-square-root
    endpoint singularity on each half.
    """
    b = _require_critical(n, p)
    v_min, v_max = turning_points(energy, n, p)
    v_bar = center_state(n, p)
    coef = p / ((p - 1) * (p + 1))

    def gap(v):
        # energy - potential(v), clipped against roundoff at the turning points
        return max(energy - (0.5 * b * v * v + coef * v ** (p + 1)), 0.0)

    def left(s):
        v = v_min + s * s
        return 2.0 * s / math.sqrt(max(2.0 * gap(v), 1e-300))

    def right(s):
        v = v_max - s * s
        return 2.0 * s / math.sqrt(max(2.0 * gap(v), 1e-300))

    # near the center energy the adaptive rule flags slow convergence even
    # though the substitution keeps the integrand bounded; the result is
    # accurate, so the advisory warning is suppressed
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", IntegrationWarning)
        half1, _ = quad(left, 0.0, math.sqrt(v_bar - v_min), limit=200)
        half2, _ = quad(right, 0.0, math.sqrt(v_max - v_bar), limit=200)
    return 2.0 * (half1 + half2)


def period_from_orbit(energy: float, n: int, p: float, steps: int = 60_000) -> float:
    """Independent period estimate: integrate from (v_max, 0) until dv returns to 0."""
    _, v_max = turning_points(energy, n, p)
    bound = 3.0 * harmonic_period(n) + 8.0  # generous cover of one period
    rho, _, dv = integrate_orbit((v_max, 0.0), bound, n, p, steps=steps)
    # dv starts at 0 and goes negative; the period ends at the second sign
    # change (negative -> positive at v_min, positive -> negative at v_max).
    idx = np.where(dv[1:-1] * dv[2:] < 0)[0] + 1
    if idx.size < 2:
        raise UnboundedOrbit("orbit did not close within the integration window")
    i = idx[1]
    frac = dv[i] / (dv[i] - dv[i + 1])
    return float(rho[i] + frac * (rho[i + 1] - rho[i]))


def energy_for_period(target: float, n: int, p: float) -> float:
    """Invert minimal_period by bisection; periods increase with energy."""
    if target <= harmonic_period(n):
        raise DomainError(
            f"period {target} at or below the threshold {harmonic_period(n)}; "
            "only the constant state exists"
        )
    e_c = center_energy(n, p)
    lo, hi = e_c * (1 - 1e-10), -1e-14 * abs(e_c)
    while minimal_period(hi, n, p) < target:
        hi *= 0.5
        if abs(hi) < 1e-15 * abs(e_c):
            raise DomainError(f"no orbit with period {target} found")
    return brentq(lambda e: minimal_period(e, n, p) - target, lo, hi, xtol=ENERGY_TOL * abs(e_c))


@dataclass(frozen=True)
class OrbitDescriptor:
    energy: float
    v_min: float
    v_max: float
    period: float


def describe_orbit(energy: float, n: int, p: float) -> OrbitDescriptor:
    v_min, v_max = turning_points(energy, n, p)
    return OrbitDescriptor(energy, v_min, v_max, minimal_period(energy, n, p))


def orbit_interpolant(energy: float, n: int, p: float,
                      steps: int = 20_000) -> tuple[CubicSpline, float]:
    """Periodic spline of one orbit period, maximum at rho = 0."""
    period = minimal_period(energy, n, p)
    _, v_max = turning_points(energy, n, p)
    rho, v, _ = integrate_orbit((v_max, 0.0), period, n, p, steps=steps)
    v = v.copy()
    v[-1] = v[0]  # close the loop against integrator round-off
    return CubicSpline(rho, v, bc_type="periodic"), period


def sample_orbit(energy: float, n: int, p: float, rho_values: np.ndarray,
                 phase: float = 0.0, steps: int = 20_000) -> np.ndarray:
    """Orbit values at the given rho coordinates, maximum placed at rho = phase."""
    spline, period = orbit_interpolant(energy, n, p, steps=steps)
    shifted = np.mod(np.asarray(rho_values, dtype=float) - phase, period)
    return spline(shifted)


def fowler_on_grid(ell: float, k: int, phase: float, n: int, p: float, grid) -> np.ndarray:
    """Fowler stationary field with k full periods across the rho extent.

    k = 0 is the constant-state sentinel.  Grids must carry a rho axis.
    """
    if grid.rho is None:
        raise DomainError("fowler fields require a grid with a rho axis")
    if k == 0:
        return np.full(grid.size, center_state(n, p))
    energy = energy_for_period(ell / k, n, p)
    line = sample_orbit(energy, n, p, grid.rho, phase=phase)
    if grid.kind == "tensor":
        return np.repeat(line, grid.theta.size)
    return line
