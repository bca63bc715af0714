"""Exact changes of variables: physical u <-> cylindrical w <-> rescaled v."""

from __future__ import annotations

import math

import numpy as np

from .errors import DomainError


def to_cylindrical(u_value, r, p: float):
    """w = r^{2/(p-1)} u^{1/p}; accepts scalars or arrays."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("radius must be positive")
    u_value = np.asarray(u_value, dtype=float)
    if np.any(u_value < 0):
        raise DomainError("u must be nonnegative")
    out = r ** (2.0 / (p - 1)) * u_value ** (1.0 / p)
    return float(out) if out.ndim == 0 else out


def from_cylindrical(w_value, r, p: float):
    """Inverse of to_cylindrical: u = (r^{-2/(p-1)} w)^p."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("radius must be positive")
    w_value = np.asarray(w_value, dtype=float)
    if np.any(w_value < 0):
        raise DomainError("w must be nonnegative")
    out = (r ** (-2.0 / (p - 1)) * w_value) ** p
    return float(out) if out.ndim == 0 else out


def rescale_time(tau: float, t_star: float) -> float:
    """Logarithmic time t = T* ln(T*/(T*-tau)) sending extinction to infinity."""
    if not 0 <= tau < t_star:
        raise DomainError(f"tau={tau} outside [0, T*={t_star})")
    return t_star * math.log(t_star / (t_star - tau))

def unrescale_time(t: float, t_star: float) -> float:
    if t < 0:
        raise DomainError(f"rescaled time t={t} must be nonnegative")
    return t_star * (1.0 - math.exp(-t / t_star))


def rescale_factor(tau, t_star: float, p: float):
    tau = np.asarray(tau, dtype=float)
    if np.any(tau < 0) or np.any(tau >= t_star):
        raise DomainError(f"tau outside [0, T*={t_star})")
    out = (t_star / (t_star - tau)) ** (1.0 / (p - 1))
    return float(out) if out.ndim == 0 else out


def rescale_field(w_values, tau: float, t_star: float, p: float):
    """v = (T*/(T*-tau))^{1/(p-1)} w, pointwise."""
    factor = rescale_factor(tau, t_star, p)
    out = factor * np.asarray(w_values, dtype=float)
    return float(out) if out.ndim == 0 else out
