"""Command-line front end: simulate, fowler, profiles, verify.

Configuration is TOML (primary) or JSON; command-line flags override file
values.  `FDE_OUT_DIR` sets the default output root.  Errors are emitted as
machine-readable JSON on stderr: exit 2 for malformed configuration, exit 1
for runtime failures.
"""

from __future__ import annotations

import argparse
import json
import math
import multiprocessing
import os
import sys
from pathlib import Path

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib

from . import fowler, records
from .errors import DomainError
from .acceptance import format_table, run_acceptance
from .geometry import build_grid, periodic_line, polar_arc
from .pipeline import RunConfig, full_run
from .problem import ProblemSpec, bubble_profile, singular_barenblatt, stationary_constant
from .records import _fmt
from .transform import from_cylindrical, rescale_factor, unrescale_time


class ConfigError(Exception):
    def __init__(self, key: str, message: str):
        super().__init__(message)
        self.key = key


def _error_json(kind: str, message: str, key: str | None = None) -> str:
    payload = {"error": kind, "message": message}
    if key is not None:
        payload["key"] = key
    return json.dumps(payload)


def _load_config_file(path: str) -> dict:
    p = Path(path)
    if not p.exists():
        raise ConfigError("config", f"config file {path} not found")
    text = p.read_bytes()
    if p.suffix == ".json":
        try:
            return json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}") from exc
    try:
        return tomllib.loads(text.decode())
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"invalid TOML: {exc}") from exc


def _require(table: dict, key: str, section: str):
    if key not in table:
        dotted = f"{section}.{key}" if section else key
        raise ConfigError(dotted, f"missing required key {dotted}")
    return table[key]


_SPEC_KEYS = {"n", "geometry", "p", "m", "ell", "t_star"}
_FLOW_KEYS = {"mode", "resolution", "dt_initial", "dt_max", "steady_tol",
              "t_max", "mass_floor"}
_TOP_KEYS = {"spec", "initial", "flow", "output_dir", "seed", "name"}


def build_run_config(data: dict, overrides: dict | None = None) -> tuple[RunConfig, str | None]:
    """Validate a parsed config table and apply flag overrides.

    Returns the run configuration and the output directory (if any).
    Precedence: flags > config file > defaults.
    """
    overrides = overrides or {}
    for key in data:
        if key not in _TOP_KEYS:
            raise ConfigError(key, f"unknown top-level key {key!r}")
    spec_tab = dict(_require(data, "spec", ""))
    for key in spec_tab:
        if key not in _SPEC_KEYS:
            raise ConfigError(f"spec.{key}", f"unknown spec key {key!r}")
    init_tab = dict(data.get("initial", {"kind": "constant"}))
    flow_tab = dict(data.get("flow", {}))
    for key in flow_tab:
        if key not in _FLOW_KEYS:
            raise ConfigError(f"flow.{key}", f"unknown flow key {key!r}")

    if overrides.get("tstar") is not None:
        spec_tab["t_star"] = overrides["tstar"]
    try:
        spec = ProblemSpec(
            n=int(_require(spec_tab, "n", "spec")),
            geometry=str(_require(spec_tab, "geometry", "spec")),
            p=spec_tab.get("p"),
            m=spec_tab.get("m"),
            ell=spec_tab.get("ell"),
            t_star=spec_tab.get("t_star"),
        )
    except DomainError as exc:
        raise ConfigError("spec", str(exc)) from exc

    kind = init_tab.pop("kind", "constant")
    resolution = overrides.get("resolution") or flow_tab.get("resolution", 128)
    if isinstance(resolution, (list, tuple)) and len(resolution) == 1:
        resolution = resolution[0]

    config = RunConfig(
        spec=spec,
        initial_kind=str(kind),
        initial_params=init_tab,
        resolution=resolution,
        mode=str(overrides.get("mode") or flow_tab.get("mode", "rescaled")),
        t_star=spec.t_star,
        dt_initial=float(flow_tab.get("dt_initial", 1e-2)),
        dt_max=float(flow_tab.get("dt_max", 0.25)),
        steady_tol=float(flow_tab.get("steady_tol", 1e-8)),
        t_max=float(flow_tab.get("t_max", 400.0)),
        mass_floor=float(flow_tab.get("mass_floor", 0.01)),
        seed=int(data.get("seed", 0)),
    )
    if config.mode not in ("raw", "rescaled"):
        raise ConfigError("flow.mode", f"mode must be raw or rescaled, got {config.mode!r}")
    out_dir = overrides.get("out") or data.get("output_dir")
    return config, out_dir


def _default_out_root() -> Path:
    return Path(os.environ.get("FDE_OUT_DIR", "."))


def _resolve_out_dir(out_dir: str | None, fallback_name: str) -> Path:
    if out_dir:
        p = Path(out_dir)
        return p if p.is_absolute() else _default_out_root() / p
    return _default_out_root() / fallback_name


def _execute_run(config: RunConfig, out_path: Path) -> dict:
    outcome = full_run(config)
    extras = {"run_config": config.to_json(), "outcome": outcome.summary_json()}
    records.save_record(outcome.record, out_path, extras=extras)
    if outcome.fit is not None:
        with open(out_path / "profile_fit.json", "w") as fh:
            json.dump(outcome.fit.to_json(), fh, indent=2, sort_keys=True)
    return {"out": str(out_path), **outcome.summary_json()}


def _sweep_worker(args) -> dict:
    config, out_path = args
    return _execute_run(config, out_path)


def cmd_simulate(args) -> int:
    overrides = {"mode": args.mode, "tstar": args.tstar, "out": args.out,
                 "resolution": _parse_resolution(args.resolution)}
    if args.sweep:
        sweep_data = _load_config_file(args.sweep)
        runs = sweep_data.get("runs")
        if not isinstance(runs, list) or not runs:
            raise ConfigError("runs", "sweep file must contain a non-empty 'runs' array")
        jobs = []
        for i, entry in enumerate(runs):
            name = entry.get("name", f"run_{i:03d}")
            config, out_dir = build_run_config(entry, {"mode": args.mode,
                                                       "tstar": args.tstar,
                                                       "resolution": overrides["resolution"]})
            base = _resolve_out_dir(args.out or sweep_data.get("output_dir"), "sweep")
            jobs.append((config, base / name))
        workers = max(1, args.jobs)
        if workers == 1:
            outcomes = [_sweep_worker(j) for j in jobs]
        else:
            with multiprocessing.Pool(workers) as pool:
                outcomes = pool.map(_sweep_worker, jobs)
        print(json.dumps(outcomes, indent=2))
        return 0

    if not args.config:
        raise ConfigError("config", "simulate requires --config (or --sweep)")
    data = _load_config_file(args.config)
    config, out_dir = build_run_config(data, overrides)
    out_path = _resolve_out_dir(out_dir, Path(args.config).stem)
    summary = _execute_run(config, out_path)
    print(json.dumps(summary, indent=2))
    return 0


def cmd_fowler(args) -> int:
    n = args.n
    p = (n + 2) / (n - 2)
    e_c = fowler.center_energy(n, p)
    energies = e_c + (0.0 - e_c) * np.linspace(1e-4, 0.999, args.count)
    lines = ["E,v_min,v_max,period"]
    for e in energies:
        orbit = fowler.describe_orbit(float(e), n, p)
        lines.append(",".join(_fmt(x) for x in
                              (orbit.energy, orbit.v_min, orbit.v_max, orbit.period)))
    _emit(lines, args.out)
    return 0


def _profile_table(args) -> list[str]:
    n, p, t_star = args.n, args.p, args.tstar
    scale = t_star ** (1.0 / (p - 1))
    if args.kind == "constant":
        grid = polar_arc(n, args.resolution)
        coords = grid.theta
        values = np.full(grid.size, stationary_constant(n, p, t_star))
    elif args.kind == "bubble":
        grid = polar_arc(n, args.resolution)
        coords = grid.theta
        values = scale * bubble_profile(n, np.cos(grid.theta), args.lam)
    elif args.kind == "fowler":
        grid = periodic_line(n, args.ell, args.resolution)
        coords = grid.rho
        values = scale * fowler.fowler_on_grid(args.ell, args.k, args.phase, n, p, grid)
    elif args.kind == "barenblatt":
        coords = np.geomspace(args.rmin, args.rmax, args.resolution)
        m = 1.0 / p
        values = singular_barenblatt(n, m, t_star, args.time, coords)
        grid = None
    else:
        raise ConfigError("kind", f"unknown profile kind {args.kind!r}")

    if args.physical and args.kind in ("constant", "fowler"):
        # map the rescaled stationary field back to physical u(r, t)
        if args.kind == "constant":
            rho = np.linspace(math.log(args.rmin), math.log(args.rmax), args.resolution)
            values = np.full(args.resolution, float(values[0]))
            coords = np.exp(rho)
        else:
            coords = np.exp(coords)
        tau = args.time
        w = values / rescale_factor(tau, t_star, p)
        values = from_cylindrical(w, coords, p)
    elif args.physical:
        raise ConfigError("physical", f"--physical unsupported for kind {args.kind!r}")

    lines = ["# columns: coordinate,value"]
    for c, v in zip(coords, np.asarray(values)):
        lines.append(f"{_fmt(c)},{_fmt(v)}")
    return lines


def cmd_profiles(args) -> int:
    _emit(_profile_table(args), args.out)
    return 0


def cmd_verify(args) -> int:
    results = run_acceptance(quick=args.quick)
    print(format_table(results))
    failed = [r for r in results if not r.passed]
    if failed:
        print("failed criteria: " + ", ".join(str(r.index) for r in failed),
              file=sys.stderr)
        return 1
    return 0


def _emit(lines: list[str], out: str | None) -> None:
    text = "\n".join(lines) + "\n"
    if out:
        path = _resolve_out_dir(out, "table.csv")
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    else:
        sys.stdout.write(text)


def _parse_resolution(text: str | None):
    if text is None:
        return None
    parts = [int(x) for x in str(text).split(",")]
    return parts[0] if len(parts) == 1 else tuple(parts)


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fdelab",
                                     description="Numerical laboratory for finite-time "
                                                 "extinction of fast diffusion flows")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run one configured flow or a sweep")
    sim.add_argument("--config", help="TOML or JSON run configuration")
    sim.add_argument("--out", help="output directory (default from FDE_OUT_DIR)")
    sim.add_argument("--mode", choices=["raw", "rescaled"], help="override flow mode")
    sim.add_argument("--tstar", type=float, help="skip extinction-time estimation")
    sim.add_argument("--resolution", help="grid resolution, int or int,int")
    sim.add_argument("--sweep", help="file with a 'runs' array of configs")
    sim.add_argument("--jobs", type=int, default=1, help="sweep worker count")
    sim.set_defaults(func=cmd_simulate)

    fow = sub.add_parser("fowler", help="tabulate periodic-orbit families")
    fow.add_argument("--n", type=int, default=4)
    fow.add_argument("--count", type=int, default=50)
    fow.add_argument("--out")
    fow.set_defaults(func=cmd_fowler)

    prof = sub.add_parser("profiles", help="sample closed-form profiles as CSV")
    prof.add_argument("--kind", required=True,
                      choices=["constant", "bubble", "fowler", "barenblatt"])
    prof.add_argument("--n", type=int, default=4)
    prof.add_argument("--p", type=float, default=3.0)
    prof.add_argument("--tstar", type=float, default=1.0)
    prof.add_argument("--lam", type=float, default=2.0, help="bubble concentration")
    prof.add_argument("--ell", type=float, default=6.0, help="rho circumference")
    prof.add_argument("--k", type=int, default=1, help="orbit periods around the circle")
    prof.add_argument("--phase", type=float, default=0.0)
    prof.add_argument("--resolution", type=int, default=256)
    prof.add_argument("--physical", action="store_true",
                      help="emit u(r, t) on a radius grid instead of the profile")
    prof.add_argument("--time", type=float, default=0.0, help="physical time for --physical")
    prof.add_argument("--rmin", type=float, default=0.1)
    prof.add_argument("--rmax", type=float, default=10.0)
    prof.add_argument("--out")
    prof.set_defaults(func=cmd_profiles)

    ver = sub.add_parser("verify", help="run the acceptance suite")
    ver.add_argument("--quick", action="store_true", help="halved resolutions")
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(_error_json("config", str(exc), key=exc.key), file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure: machine-readable, nonzero
        print(_error_json(type(exc).__name__, str(exc)), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
