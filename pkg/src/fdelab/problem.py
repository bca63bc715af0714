"""Problem parameters and closed-form reference profiles.

Everything here is an exact formula: drift/reaction coefficients of the
cylindrical equation, the critical integrability exponent, the stationary
constant, the singular self-similar solution, and the sphere bubble family.
All other modules test themselves against these.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import DomainError

PAIR_TOL = 1e-12  # relative tolerance when both m and p are supplied

GEOMETRIES = ("cylinder_rho", "sphere", "cylinder_full")


def derive_coefficients(n: int, p: float) -> tuple[float, float]:
    """Drift coefficient a and zeroth-order coefficient b of the cylindrical equation."""
    if n < 3:
        raise DomainError(f"dimension n={n} must be >= 3")
    if p <= 1:
        raise DomainError(f"exponent p={p} must be > 1")
    a = (n - 2) / (p - 1) * (p - (n + 2) / (n - 2))
    b = 2 * (n - 2) / (p - 1) ** 2 * (n / (n - 2) - p)
    return a, b


def critical_marcinkiewicz_exponent(n: int, m: float) -> float:
    """Critical weak-integrability exponent n(1-m)/2 for finite-time extinction."""
    if n < 3:
        raise DomainError(f"dimension n={n} must be >= 3")
    if not 0 < m <= (n - 2) / n:
        raise DomainError(f"m={m} outside the singular fast-diffusion range (0, (n-2)/n]")
    return n * (1 - m) / 2


def stationary_constant(n: int, p: float, t_star: float = 1.0) -> float:
    """The constant stationary state of the rescaled flow with extinction time t_star."""
    if n < 3:
        raise DomainError(f"dimension n={n} must be >= 3")
    if t_star <= 0:
        raise DomainError(f"t_star={t_star} must be positive")
    if (n - 2) * p <= n:
        raise DomainError(f"(n-2)p={((n-2)*p)} <= n={n}: constant state nonpositive")
    return (2.0 * t_star * ((n - 2) * p - n) / (p * (p - 1))) ** (1.0 / (p - 1))


def singular_barenblatt(n: int, m: float, t_star: float, t, r):
    """Exact singular solution vanishing at t_star, evaluated at radius r, time t.

    Accepts scalars or arrays for t and r.
    """
    t = np.asarray(t, dtype=float)
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("r must be positive")
    if np.any(t >= t_star):
        raise DomainError(f"some t is past the extinction time {t_star}")
    if not 0 < m < (n - 2) / n:
        raise DomainError(f"m={m} outside (0, (n-2)/n)")
    coeff = 2 * m * (n - 2 - n * m) / (1 - m)
    out = coeff ** (1 / (1 - m)) * ((t_star - t) / r**2) ** (1 / (1 - m))
    return float(out) if out.ndim == 0 else out


def bubble_profile(n: int, cos_dist, lam: float):
    """Nonconstant stationary state on the sphere at p = (n+1)/(n-3).

    ``cos_dist`` is cos of the geodesic distance to the bubble center;
    passing the cosine directly avoids an arccos round trip near the poles.
    Accepts scalars or arrays.
    """
    if n <= 3:
        raise DomainError(f"bubbles require n > 3, got n={n}")
    if lam <= 1:
        raise DomainError(f"lambda={lam} must exceed 1")
    amp = ((n - 1) * (n - 3) / (n + 1)) ** ((n - 3) / 4)
    return amp * (math.sqrt(lam**2 - 1) / (lam - cos_dist)) ** ((n - 3) / 2)


def sphere_area(d: int) -> float:
    """Surface measure of the unit sphere S^{d-1} in R^d: 2 pi^{d/2} / Gamma(d/2)."""
    return 2.0 * math.pi ** (d / 2) / math.gamma(d / 2)


@dataclass(frozen=True)
class ProblemSpec:
    """Dimension, diffusion exponent and geometry of one extinction problem.

    Exactly one of ``m`` (diffusion exponent) or ``p`` (= 1/m) must pin the
    exponent; supplying both is accepted only if they agree to PAIR_TOL.
    """

    n: int
    geometry: str
    m: Optional[float] = None
    p: Optional[float] = None
    ell: Optional[float] = None
    t_star: Optional[float] = None
    a: float = field(init=False)
    b: float = field(init=False)

    def __post_init__(self):
        if self.n < 3:
            raise DomainError(f"dimension n={self.n} must be >= 3")
        if self.geometry not in GEOMETRIES:
            raise DomainError(f"unknown geometry {self.geometry!r}")
        if self.m is None and self.p is None:
            raise DomainError("one of m or p is required")
        if self.m is not None and self.p is not None:
            if abs(self.m * self.p - 1.0) > PAIR_TOL * max(1.0, abs(self.m * self.p)):
                raise DomainError(f"inconsistent pair m={self.m}, p={self.p}")
        p = self.p if self.p is not None else 1.0 / self.m
        m = self.m if self.m is not None else 1.0 / self.p
        if p <= 1:
            raise DomainError(f"p={p} must be > 1")
        object.__setattr__(self, "p", float(p))
        object.__setattr__(self, "m", float(m))
        if self.geometry in ("cylinder_rho", "cylinder_full"):
            if self.ell is None or self.ell <= 0:
                raise DomainError("cylinder geometries require a period ell > 0")
        if self.t_star is not None and self.t_star <= 0:
            raise DomainError(f"t_star={self.t_star} must be positive")
        a, b = derive_coefficients(self.n, p)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def critical_p(self) -> float:
        return (self.n + 2) / (self.n - 2)

    @property
    def q_star(self) -> float:
        return critical_marcinkiewicz_exponent(self.n, self.m)

    def with_t_star(self, t_star: float) -> "ProblemSpec":
        return ProblemSpec(
            n=self.n, geometry=self.geometry, p=self.p, ell=self.ell, t_star=t_star
        )

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "m": self.m,
            "p": self.p,
            "geometry": self.geometry,
            "ell": self.ell,
            "t_star": self.t_star,
            "a": self.a,
            "b": self.b,
        }
