"""
Structured-text field export.

`#`-prefixed header (grid lines, conductor tags, London parameters) followed
by one CSV row per node:

    i, j, x_um, y_um, conductor, potential_V
    [, A_z_Wb_per_m, J_z_A_per_m2, sc_area_um2]

Files written by other solvers in the same column layout can be read back
and fed to kinetic_inductance_from_export.
"""

import logging
from pathlib import Path

import numpy as np
import pandas as pd

from engine import __version__
from engine.errors import ConfigError
from engine.fieldsolver import FieldSolution, node_conductors
from engine.geometry import GROUND, RESONATOR, FEEDLINE
from engine.london import CurrentSolution, kinetic_inductance_from_arrays

logger = logging.getLogger(__name__)

BASE_COLUMNS = ["i", "j", "x_um", "y_um", "conductor", "potential_V"]
CURRENT_COLUMNS = ["A_z_Wb_per_m", "J_z_A_per_m2", "sc_area_um2"]
CONDUCTOR_NAMES = {GROUND: "ground", RESONATOR: "resonator", FEEDLINE: "feedline"}
FLOAT_FORMAT = "%.17g"


def _lines(values) -> str:
    return " ".join(FLOAT_FORMAT % v for v in values)


def field_frame(es: FieldSolution = None, current: CurrentSolution = None) -> pd.DataFrame:
    if es is None and current is None:
        raise ConfigError("nothing to export")
    grid = (es if es is not None else current).grid
    if es is not None and current is not None and (
            not np.array_equal(es.grid.x, current.grid.x) or not np.array_equal(es.grid.y, current.grid.y)):
        raise ConfigError("potential and current solutions must share one grid")

    nxn = grid.nx if grid.periodic_x else grid.nx + 1
    I, J = np.meshgrid(np.arange(nxn), np.arange(grid.ny + 1), indexing="ij")

    def _nodes(arr):
        return arr[:nxn].ravel()

    if current is not None:
        conductor = _nodes(current.node_conductor)
    else:
        conductor = node_conductors(grid, es.conductor)

    frame = pd.DataFrame({
        "i": I.ravel(),
        "j": J.ravel(),
        "x_um": grid.x[I.ravel()],
        "y_um": grid.y[J.ravel()],
        "conductor": conductor.astype(int),
        "potential_V": _nodes(es.potential) if es is not None else np.zeros(I.size),
    })
    if current is not None:
        frame["A_z_Wb_per_m"] = _nodes(current.A_z)
        frame["J_z_A_per_m2"] = _nodes(current.J_z)
        frame["sc_area_um2"] = _nodes(current.sc_area)
    return frame


def write_field(path, es: FieldSolution = None, current: CurrentSolution = None,
                provenance: list = None) -> Path:
    """Write the export file; returns its path."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    frame = field_frame(es, current)
    source = es if es is not None else current
    grid, regions = source.grid, source.regions

    header = [f"flipchip-design field export v{__version__}"]
    header += list(provenance or [])
    header += [
        f"grid_x_um: {_lines(grid.x)}",
        f"grid_y_um: {_lines(grid.y)}",
        f"periodic_x: {str(grid.periodic_x).lower()}",
        "conductors: " + ",".join(f"{cid}={CONDUCTOR_NAMES.get(cid, f'conductor{cid}')}"
                                  for cid in regions.conductor_ids),
    ]
    for r in regions.rects:
        header.append(f"region: {r.material} {r.tag or '-'} eps_r={r.eps_r:g} conductor={r.conductor} "
                      f"x=[{r.x0:.17g},{r.x1:.17g}] y=[{r.y0:.17g},{r.y1:.17g}]")
    if current is not None:
        header += [f"lambda_nm: {current.cfg.lambda_nm:.17g}",
                   f"current_A: {current.cfg.current:.17g}"]
    header.append("columns: " + ",".join(frame.columns))

    with open(path, "w", newline="") as fh:
        for line in header:
            fh.write(f"# {line}\n")
        frame.to_csv(fh, index=False, float_format=FLOAT_FORMAT)
    logger.info("wrote %d nodes to %s", len(frame), path)
    return path


def read_field(path) -> tuple[dict, pd.DataFrame]:
    """Header key/value pairs (repeated keys collected in lists) and the node table."""
    header = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            text = line[1:].strip()
            if ": " not in text:
                continue
            key, value = text.split(": ", 1)
            if key in header:
                existing = header[key]
                header[key] = (existing if isinstance(existing, list) else [existing]) + [value]
            else:
                header[key] = value
    frame = pd.read_csv(path, comment="#")
    missing = [c for c in BASE_COLUMNS if c not in frame.columns]
    if missing:
        raise ConfigError(f"field export {path} lacks columns {missing}")
    return header, frame


def kinetic_inductance_from_export(path, lambda_nm: float = None, current: float = None) -> float:
    """Re-evaluate L_k from an exported (or third-party) J_z table."""
    header, frame = read_field(path)
    missing = [c for c in ("J_z_A_per_m2", "sc_area_um2") if c not in frame.columns]
    if missing:
        raise ConfigError(f"field export {path} has no current columns {missing}")
    if lambda_nm is None:
        if "lambda_nm" not in header:
            raise ConfigError("penetration depth is neither in the header nor given")
        lambda_nm = float(header["lambda_nm"])
    if current is None:
        current = float(header.get("current_A", 1.0))
    return kinetic_inductance_from_arrays(frame["J_z_A_per_m2"].to_numpy(),
                                          frame["sc_area_um2"].to_numpy(), lambda_nm, current)
