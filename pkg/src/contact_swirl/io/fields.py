"""
Field, free-boundary and grid files of a solve.

fields.csv          x,r,phi,psi,S,Lambda,u_x,u_r,u_theta,rho,p (one row per node,
                    axial index outer, radial index inner)
free_boundary.csv   x,f
grid.yaml           L, nx, nr
"""
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np
import yaml

from ..core.free_boundary import FreeBoundaryCurve
from ..core.gas_state import BackgroundState, VelocityTriple
from ..core.geometry import build_reference_grid, metric_coefficients
from ..core.solver import SolutionState
from ..errors import ConfigError
from .csv_handler import CSVHandler, PathLike

FIELD_COLUMNS = ("x", "r", "phi", "psi", "S", "Lambda", "u_x", "u_r", "u_theta",
                 "rho", "p")
CURVE_COLUMNS = ("x", "f")

FIELDS_FILE = "fields.csv"
CURVE_FILE = "free_boundary.csv"
GRID_FILE = "grid.yaml"


@dataclass(frozen=True, eq=False)
class StoredFields:
    """Arrays read back from a run directory."""

    L: float
    nx: int
    nr: int
    curve_x: np.ndarray
    curve_f: np.ndarray
    columns: Dict[str, np.ndarray]


def _field_arrays(state: SolutionState) -> Dict[str, np.ndarray]:
    m = state.metrics
    return {
        "x": m.X, "r": m.R, "phi": state.phi, "psi": state.psi, "S": state.S,
        "Lambda": state.Lambda, "u_x": state.u.u_x, "u_r": state.u.u_r,
        "u_theta": state.u.u_theta, "rho": state.rho, "p": state.p,
    }


def write_solution(state: SolutionState, run_dir: PathLike,
                   handler: Optional[CSVHandler] = None) -> Tuple[Path, Path, Path]:
    handler = handler or CSVHandler()
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    arrays = {k: np.asarray(v).ravel() for k, v in _field_arrays(state).items()}
    n = arrays["x"].size
    rows = [{c: arrays[c][k] for c in FIELD_COLUMNS} for k in range(n)]
    fields_path = run_dir / FIELDS_FILE
    handler.write_rows(rows, fields_path, FIELD_COLUMNS)

    curve_path = run_dir / CURVE_FILE
    curve = state.curve
    handler.write_rows([{"x": x, "f": f} for x, f in zip(curve.x, curve.values)],
                       curve_path, CURVE_COLUMNS)

    grid = state.grid
    grid_path = run_dir / GRID_FILE
    with open(grid_path, "w", encoding="utf-8") as f:
        yaml.safe_dump({"L": float(grid.L), "nx": int(grid.nx), "nr": int(grid.nr)}, f,
                       sort_keys=True)
    return fields_path, curve_path, grid_path


def read_fields(run_dir: PathLike, handler: Optional[CSVHandler] = None) -> StoredFields:
    handler = handler or CSVHandler()
    run_dir = Path(run_dir)
    grid_path = run_dir / GRID_FILE
    if not grid_path.exists():
        raise ConfigError(f"grid metadata not found: {grid_path}")
    with open(grid_path, "r", encoding="utf-8") as f:
        meta = yaml.safe_load(f) or {}
    try:
        L, nx, nr = float(meta["L"]), int(meta["nx"]), int(meta["nr"])
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"{grid_path}: malformed grid metadata ({e})") from e

    rows = handler.load_rows(run_dir / FIELDS_FILE, FIELD_COLUMNS)
    if len(rows) != (nx + 1) * (nr + 1):
        raise ConfigError(
            f"{FIELDS_FILE} has {len(rows)} rows, "
            f"grid {nx}x{nr} needs {(nx + 1) * (nr + 1)}"
        )
    columns = {c: np.array([float(row[c]) for row in rows]).reshape(nx + 1, nr + 1)
               for c in FIELD_COLUMNS}

    curve_rows = handler.load_rows(run_dir / CURVE_FILE, CURVE_COLUMNS)
    if len(curve_rows) != nx + 1:
        raise ConfigError(f"{CURVE_FILE} has {len(curve_rows)} rows, expected {nx + 1}")
    curve_x = np.array([float(row["x"]) for row in curve_rows])
    curve_f = np.array([float(row["f"]) for row in curve_rows])
    return StoredFields(L=L, nx=nx, nr=nr, curve_x=curve_x, curve_f=curve_f,
                        columns=columns)


def restore_state(stored: StoredFields, background: BackgroundState,
                  interface: Tuple[float, float]) -> SolutionState:
    """Rebuild a SolutionState from stored arrays without recomputing them."""
    grid = build_reference_grid(stored.L, stored.nx, stored.nr)
    curve = FreeBoundaryCurve(x=grid.x, values=stored.curve_f)
    metrics = metric_coefficients(curve, grid)
    c = stored.columns
    return SolutionState(
        curve=curve, metrics=metrics, background=background, interface=interface,
        phi=c["phi"], psi=c["psi"], S=c["S"], Lambda=c["Lambda"],
        u=VelocityTriple(c["u_x"], c["u_r"], c["u_theta"]), rho=c["rho"], p=c["p"],
    )
