"""Monitored quantities of the flow and terminal-profile classification.

The Rayleigh quotient H, the mass proxy zeta and the free energy J are the
three monotone quantities the solver asserts along trajectories.  The
classifier matches a converged rescaled field against the closed-form limit
set: the constant state, the sphere bubble family and Fowler orbits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.optimize import minimize_scalar

from . import fowler
from .errors import DomainError, InsufficientData, NoCandidateFits, UnboundedOrbit
from .problem import bubble_profile, stationary_constant


def zeta(values: np.ndarray, grid, p: float) -> float:
    """Mass proxy (integral of field^{p+1})^{(p-1)/(p+1)}."""
    mass = grid.integrate(np.asarray(values) ** (p + 1))
    return mass ** ((p - 1) / (p + 1))


def rayleigh_quotient(values: np.ndarray, op, p: float) -> float:
    """H = integral(w L w) / (integral w^{p+1})^{2/(p+1)} with L = -(Delta_g + b)."""
    values = np.asarray(values, dtype=float).ravel()
    grid = op.grid
    lw = -(op.laplacian_only @ values + op.b * values)
    num = grid.integrate(values * lw)
    den = grid.integrate(values ** (p + 1)) ** (2.0 / (p + 1))
    return num / den


def dirichlet_form(values: np.ndarray, op) -> float:
    """integral |grad v|^2 dvol via the self-adjoint flux-form Laplacian."""
    values = np.asarray(values, dtype=float).ravel()
    return -op.grid.integrate(values * (op.laplacian_only @ values))


def energy_J(values: np.ndarray, op, p: float, t_star: float) -> float:
    """Free energy of the rescaled flow; requires the extinction time."""
    if t_star is None or t_star <= 0:
        raise DomainError("energy_J requires a positive t_star")
    values = np.asarray(values, dtype=float).ravel()
    grid = op.grid
    grad2 = dirichlet_form(values, op)
    quad = grid.integrate(values**2)
    pot = grid.integrate(values ** (p + 1))
    return 0.5 * grad2 - 0.5 * op.b * quad - p / ((p**2 - 1) * t_star) * pot


@dataclass(frozen=True)
class EnergyReport:
    H: float
    J: float
    zeta: float
    lp1_norm: float
    sup: float
    inf: float

    @property
    def harnack_ratio(self) -> float:
        return self.sup / self.inf


def energy_report(values: np.ndarray, op, p: float, t_star: Optional[float]) -> EnergyReport:
    values = np.asarray(values, dtype=float).ravel()
    grid = op.grid
    j_val = energy_J(values, op, p, t_star) if t_star else math.nan
    return EnergyReport(
        H=rayleigh_quotient(values, op, p),
        J=j_val,
        zeta=zeta(values, grid, p),
        lp1_norm=grid.norm_lq(values, p + 1),
        sup=float(values.max()),
        inf=float(values.min()),
    )


@dataclass(frozen=True)
class ProfileFit:
    kind: str  # "constant" | "bubble" | "fowler"
    params: dict = field(default_factory=dict)
    residual_sup: float = math.nan
    residual_l2: float = math.nan

    def to_json(self) -> dict:
        return {
            "kind": self.kind,
            "params": self.params,
            "residual_sup": self.residual_sup,
            "residual_l2": self.residual_l2,
        }


def _residuals(values, model, grid):
    diff = np.asarray(values).ravel() - np.asarray(model).ravel()
    sup = float(np.abs(diff).max())
    l2 = math.sqrt(grid.integrate(diff**2) / grid.total_volume)
    return sup, l2


def _fit_constant(values, spec, grid, t_star):
    const = stationary_constant(spec.n, spec.p, t_star)
    sup, l2 = _residuals(values, const, grid)
    return ProfileFit("constant", {"value": const}, sup, l2)


def _fit_bubble(values, spec, grid, t_star):
    """Least squares over lambda with the center on the symmetry axis."""
    scale = t_star ** (1.0 / (spec.p - 1))
    best = None
    for pole, cos_dist in (("north", np.cos(grid.theta)), ("south", -np.cos(grid.theta))):
        def l2_of(log_lam, cd=cos_dist):
            model = scale * bubble_profile(spec.n, cd, 1.0 + math.exp(log_lam))
            diff = np.asarray(values).ravel() - model
            return grid.integrate(diff**2)

        res = minimize_scalar(l2_of, bounds=(math.log(1e-6), math.log(1e3)),
                              method="bounded", options={"xatol": 1e-12})
        lam = 1.0 + math.exp(res.x)
        model = scale * bubble_profile(spec.n, cos_dist, lam)
        sup, l2 = _residuals(values, model, grid)
        fit = ProfileFit("bubble", {"lambda": lam, "pole": pole}, sup, l2)
        if best is None or fit.residual_l2 < best.residual_l2:
            best = fit
    return best


def _fit_fowler(values, spec, grid, t_star):
    """Match turning points to an orbit energy, then phase by scanning."""
    scale = t_star ** (1.0 / (spec.p - 1))
    line = np.asarray(values, dtype=float).ravel()
    if grid.kind == "tensor":
        line = line.reshape(grid.shape).mean(axis=1)
    line = line / scale  # back to the unit-t_star normalization
    v_lo, v_hi = float(line.min()), float(line.max())
    # the grid max undershoots the orbit max by O(h^2); recover it from a
    # parabola through the argmax and its periodic neighbours
    i = int(np.argmax(line))
    y0, y1, y2 = line[i - 1], line[i], line[(i + 1) % line.size]
    curv = y0 - 2.0 * y1 + y2
    if curv < 0:
        v_hi = float(y1 - (y2 - y0) ** 2 / (8.0 * curv))
    e_c = fowler.center_energy(spec.n, spec.p)
    energy = fowler.potential(v_hi, spec.n, spec.p)
    if not e_c < energy < 0:
        raise DomainError(f"field maximum {v_hi} maps to energy {energy} outside ({e_c}, 0)")
    spline, period = fowler.orbit_interpolant(energy, spec.n, spec.p)
    # a stationary orbit on the rho circle must close up: its period has to
    # divide the circumference, otherwise the candidate is inadmissible
    k = max(1, round(grid.ell / period))
    if abs(grid.ell - k * period) > 0.05 * grid.ell:
        raise DomainError(
            f"orbit period {period} incommensurate with circumference {grid.ell}"
        )
    # coarse phase scan at sub-grid spacing, then bounded refinement
    def sup_of(phase):
        model = spline(np.mod(grid.rho - phase, period))
        return float(np.abs(line - model).max())

    coarse = min((sup_of(ph), ph) for ph in np.linspace(0, period, 64, endpoint=False))
    half = period / 64.0
    res = minimize_scalar(sup_of, bounds=(coarse[1] - half, coarse[1] + half),
                          method="bounded", options={"xatol": 1e-10})
    phase = float(res.x)
    model = scale * spline(np.mod(grid.rho - phase, period))
    if grid.kind == "tensor":
        model = np.repeat(model, grid.theta.size)
    sup, l2 = _residuals(values, model, grid)
    return ProfileFit("fowler", {"energy": energy, "phase": phase, "period": period,
                                 "v_min": v_lo, "v_max": v_hi}, sup, l2)


def first_integral_profile(values: np.ndarray, spec, grid, t_star: float) -> np.ndarray:
    """Node-wise first integral of the stationary-orbit equation on the rho circle.

    The terminal field of a converged run is a steady state of the three-point
    stencil, which conserves the stencil's shadow energy rather than the
    continuum one; the O(h^2) shadow correction of the leapfrog map is
    subtracted so the returned profile is node-constant to the next order.
    The rho derivative is taken spectrally on the uniform periodic grid.
    """
    if grid.rho is None:
        raise DomainError("first-integral profiles require a grid with a rho axis")
    line = np.asarray(values, dtype=float).ravel()
    if grid.kind == "tensor":
        line = line.reshape(grid.shape).mean(axis=1)
    v = line / t_star ** (1.0 / (spec.p - 1))
    p, b = spec.p, spec.b
    size = v.size
    h = grid.ell / size
    freq = 2.0 * np.pi * np.fft.rfftfreq(size, d=h)
    dv = np.fft.irfft(1j * freq * np.fft.rfft(v), n=size)
    pot = 0.5 * b * v**2 + p / ((p - 1) * (p + 1)) * v ** (p + 1)
    pot_d1 = b * v + p / (p - 1) * v**p
    pot_d2 = b + p**2 / (p - 1) * v ** (p - 1)
    shadow = h * h * (pot_d2 * dv**2 / 12.0 + pot_d1**2 / 24.0)
    return 0.5 * dv**2 + pot - shadow


def default_candidates(spec) -> list[str]:
    kinds = ["constant"]
    if spec.n > 3 and abs(spec.p - (spec.n + 1) / (spec.n - 3)) < 1e-9:
        kinds.append("bubble")
    if spec.geometry != "sphere" and abs(spec.p - spec.critical_p) < 1e-9:
        kinds.append("fowler")
    return kinds


def classify_profile(values: np.ndarray, spec, grid, t_star: float,
                     candidates: Optional[list[str]] = None) -> ProfileFit:
    """Best-fitting stationary profile for a converged rescaled field."""
    kinds = candidates if candidates is not None else default_candidates(spec)
    fitters = {"constant": _fit_constant, "bubble": _fit_bubble, "fowler": _fit_fowler}
    fits = []
    for kind in kinds:
        try:
            fits.append(fitters[kind](values, spec, grid, t_star))
        except (DomainError, UnboundedOrbit):
            # the field has no admissible representative in this family
            continue
    if not fits:
        raise NoCandidateFits("no candidate profile is admissible for this field")
    best = min(fits, key=lambda f: f.residual_sup)
    if best.residual_sup > 0.1 * float(np.abs(values).max()):
        raise NoCandidateFits(
            f"best candidate {best.kind} has residual_sup {best.residual_sup:.3e}, "
            "above 10% of the field amplitude"
        )
    return best


RATE_INF = math.inf


def fit_rate(times: np.ndarray, errors: np.ndarray,
             min_samples: int = 20, decades: float = 1.0) -> tuple[float, float, float]:
    """Algebraic-rate fit of log(error) against log(t) on the trajectory tail.

    Returns (gamma, prefactor, r_squared).  Late-stage convergence of the
    rescaled flow is typically exponential, so gamma is a certified lower
    bound on the rate rather than an exact exponent.  Samples already at the
    error floor (within 3x of the terminal error) are excluded as plateau.
    """
    times = np.asarray(times, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = (times > 0) & (errors > 0) & np.isfinite(errors)
    times, errors = times[keep], errors[keep]
    if times.size < min_samples:
        raise InsufficientData(f"{times.size} usable samples, need {min_samples}")
    if float(errors.max()) < 1e-11:
        return RATE_INF, 0.0, 1.0
    floor = 3.0 * errors[-1]
    t_end = times[-1]
    window = (times >= t_end / 10**decades) & (errors > floor)
    if window.sum() < min_samples:
        window = errors > floor
    if window.sum() < 3:
        return RATE_INF, 0.0, 1.0
    x = np.log(times[window])
    y = np.log(errors[window])
    slope, intercept = np.polyfit(x, y, 1)
    pred = slope * x + intercept
    ss_res = float(np.sum((y - pred) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    quality = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return -slope, math.exp(intercept), quality
