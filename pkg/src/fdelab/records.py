"""On-disk layout of a run: JSON manifest, diagnostic CSV, field snapshots.

Floats are written with 17 significant digits so identical configs produce
bit-identical artifacts on one platform.
"""

from __future__ import annotations

import json
import os
from pathlib import Path

import numpy as np

from .flow import DIAG_COLUMNS, TrajectoryRecord


def _fmt(x) -> str:
    return f"{float(x):.17g}"


def write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(x) for x in row) + "\n")


def _grid_coordinates(grid) -> tuple[list[str], np.ndarray]:
    if grid.kind == "periodic_line":
        return ["rho"], grid.rho.reshape(-1, 1)
    if grid.kind == "polar_arc":
        return ["theta"], grid.theta.reshape(-1, 1)
    rho = np.repeat(grid.rho, grid.theta.size)
    theta = np.tile(grid.theta, grid.rho.size)
    return ["rho", "theta"], np.column_stack([rho, theta])


def save_record(record: TrajectoryRecord, outdir: str | os.PathLike,
                extras: dict | None = None) -> Path:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    snapdir = outdir / "snapshots"
    snapdir.mkdir(exist_ok=True)

    manifest = {
        "spec": record.spec.to_json(),
        "config": record.config.to_json(),
        "grid": record.grid.to_json(),
        "columns": list(DIAG_COLUMNS),
        "stop_reason": record.stop_reason,
        "n_steps": len(record.rows) - 1,
        "snapshots": [
            {"index": i, "t": t, "file": f"snapshots/snap_{i:04d}.csv"}
            for i, (t, _) in enumerate(record.snapshots)
        ],
    }
    if extras:
        manifest.update(extras)
    with open(outdir / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)

    write_csv(outdir / "series.csv", list(DIAG_COLUMNS), record.rows)

    names, coords = _grid_coordinates(record.grid)
    for i, (t, values) in enumerate(record.snapshots):
        rows = np.column_stack([coords, values.reshape(-1, 1)])
        write_csv(snapdir / f"snap_{i:04d}.csv", names + ["value"], rows)
    return outdir


def load_manifest(outdir: str | os.PathLike) -> dict:
    with open(Path(outdir) / "manifest.json") as fh:
        return json.load(fh)
