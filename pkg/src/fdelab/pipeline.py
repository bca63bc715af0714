"""End-to-end run orchestration shared by the CLI and the acceptance suite.

A full run estimates the extinction time from the raw flow, sharpens it to
the separatrix of the rescaled flow, relaxes the rescaled flow to its
stationary profile, classifies that profile and fits a convergence rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Optional

import numpy as np

from . import diagnostics, flow
from .errors import InsufficientData, NoCandidateFits
from .flow import Field, FlowConfig, StopRule, TrajectoryRecord
from .geometry import Grid, build_grid
from .initial import make_initial
from .problem import ProblemSpec, stationary_constant


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce one simulation."""

    spec: ProblemSpec
    initial_kind: str = "constant"
    initial_params: dict = dc_field(default_factory=dict)
    resolution: int = 128
    mode: str = "rescaled"  # "raw" | "rescaled"
    t_star: Optional[float] = None  # skip estimation when provided
    dt_initial: float = 1e-2
    dt_max: float = 0.25
    steady_tol: float = 1e-8
    t_max: float = 400.0
    mass_floor: float = 0.01
    seed: int = 0

    def to_json(self) -> dict:
        return {
            "spec": self.spec.to_json(),
            "initial_kind": self.initial_kind,
            "initial_params": self.initial_params,
            "resolution": self.resolution,
            "mode": self.mode,
            "t_star": self.t_star,
            "dt_initial": self.dt_initial,
            "dt_max": self.dt_max,
            "steady_tol": self.steady_tol,
            "t_max": self.t_max,
            "mass_floor": self.mass_floor,
            "seed": self.seed,
        }


@dataclass
class RunOutcome:
    config: RunConfig
    grid: Grid
    initial: Field
    t_estimate: Optional[float] = None
    t_uncertainty: Optional[float] = None
    t_refined: Optional[float] = None
    record: Optional[TrajectoryRecord] = None
    fit: Optional[diagnostics.ProfileFit] = None
    rate: Optional[tuple[float, float, float]] = None  # (gamma, prefactor, quality)

    @property
    def t_star(self) -> float:
        return self.t_refined if self.t_refined is not None else self.t_estimate

    def summary_json(self) -> dict:
        out = {
            "t_star": self.t_star,
            "t_estimate": self.t_estimate,
            "t_uncertainty": self.t_uncertainty,
            "t_refined": self.t_refined,
            "stop_reason": self.record.stop_reason if self.record else None,
            "profile_fit": self.fit.to_json() if self.fit else None,
        }
        if self.rate is not None:
            gamma, prefactor, quality = self.rate
            out["rate"] = {"gamma": gamma, "prefactor": prefactor, "quality": quality}
        return out


def prepare(config: RunConfig) -> tuple[Grid, Field]:
    grid = build_grid(config.spec, config.resolution)
    return grid, make_initial(grid, config.spec, config.initial_kind, config.initial_params)


def reference_field(spec: ProblemSpec, grid: Grid, t_star: float) -> np.ndarray:
    """Constant-profile reference used for residual tracking during relaxation."""
    return np.full(grid.size, stationary_constant(spec.n, spec.p, t_star))


def run_raw(config: RunConfig) -> RunOutcome:
    grid, initial = prepare(config)
    outcome = RunOutcome(config=config, grid=grid, initial=initial)
    t_est, unc = flow.estimate_extinction_time(initial, config.spec,
                                               mass_floor=config.mass_floor)
    outcome.t_estimate, outcome.t_uncertainty = t_est, unc
    raw_cfg = FlowConfig(mode="raw", stop=StopRule("extinction", config.mass_floor),
                         dt_initial=min(config.dt_initial, t_est / 400.0),
                         dt_min=1e-14, dt_max=min(config.dt_max, t_est / 400.0))
    outcome.record = flow.run(initial, config.spec, raw_cfg)
    return outcome


def run_rescaled(config: RunConfig) -> RunOutcome:
    grid, initial = prepare(config)
    outcome = RunOutcome(config=config, grid=grid, initial=initial)
    spec = config.spec
    if config.t_star is not None:
        t_star = config.t_star
    else:
        t_est, unc = flow.estimate_extinction_time(initial, spec,
                                                   mass_floor=config.mass_floor)
        outcome.t_estimate, outcome.t_uncertainty = t_est, unc
        t_star = flow.refine_extinction_time(initial, spec, t_est, unc,
                                             dt_max=config.dt_max, t_cap=config.t_max)
        outcome.t_refined = t_star

    reference = reference_field(spec, grid, t_star)
    cfg = FlowConfig(mode="rescaled", stop=StopRule("steady_state", config.steady_tol),
                     t_star=t_star, dt_initial=config.dt_initial, dt_min=1e-14,
                     dt_max=config.dt_max, t_max=config.t_max)
    outcome.record = flow.run(initial, spec, cfg, reference=reference)

    try:
        outcome.fit = diagnostics.classify_profile(outcome.record.final, spec, grid, t_star)
    except NoCandidateFits:
        outcome.fit = None
    resid = outcome.record.column("residual_to_limit")
    times = outcome.record.times
    try:
        outcome.rate = diagnostics.fit_rate(times, resid)
    except (InsufficientData, ValueError):
        outcome.rate = None
    return outcome


def full_run(config: RunConfig) -> RunOutcome:
    """Dispatch on mode; the rescaled pipeline includes extinction-time search."""
    if config.mode == "raw":
        return run_raw(config)
    return run_rescaled(config)
