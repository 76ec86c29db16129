"""
Sweep and batch evaluation for the command-line tools.

Each row function takes one picklable job and returns a dict, so sweeps can
be fanned out to a process pool. Rows always come back in input order.
"""

import math
import sys
from concurrent.futures import ProcessPoolExecutor
from datetime import datetime, timezone
from pathlib import Path

import pandas as pd

from engine import __version__
from engine.conformal import line_params
from engine.errors import ConfigError
from engine.fieldsolver import coupling_cap_matrix, line_params_fd
from engine.london import kinetic_inductance_for
from engine.resonator import coupling, gap_at, resonant_frequency, total_length

FLOAT_FORMAT = "%.10g"


def run_ordered(func, jobs: list, workers: int = 1) -> list:
    """map(func, jobs) on a process pool; result order follows job order."""
    if workers <= 1 or len(jobs) <= 1:
        return [func(job) for job in jobs]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, jobs))


def pool_mapper(workers: int):
    """A map-like callable over several iterables, backed by a pool when workers > 1."""
    if workers <= 1:
        return map

    def _map(func, *iterables):
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(func, *iterables))
    return _map


# ---------------------------------------------------------------------------
# Per-point evaluation
# ---------------------------------------------------------------------------

def _uses(cfg, method: str) -> bool:
    return cfg.method in (method, "both")


def _wants_kinetic(cfg) -> bool:
    return cfg.include_kinetic or cfg.lambda_override


def _line_params(cfg, point: dict) -> dict:
    x = cfg.section(**point)
    out = {"section": x}
    if _uses(cfg, "conf"):
        out["conf"] = line_params(x)
    if _uses(cfg, "fd"):
        out["fd"] = line_params_fd(x, cfg.solver)
    if _wants_kinetic(cfg):
        out["L_k"] = kinetic_inductance_for(x, point["lambda_nm"], cfg.solver)
    return out


def _sweep_key(cfg, point: dict) -> dict:
    if cfg.sweep is None:
        return {"h_s_um": point["h_s_um"]}
    var = cfg.sweep[0]
    return {var: point[var]}


def line_params_row(job) -> dict:
    cfg, point = job
    res = _line_params(cfg, point)
    row = _sweep_key(cfg, point)
    if "conf" in res:
        row.update(L_conf=res["conf"].L_g, C_conf=res["conf"].C)
    if "fd" in res:
        row.update(L_fd=res["fd"].L_g, C_fd=res["fd"].C)
    if "conf" in res and "fd" in res:
        row["dL_rel"] = (res["fd"].L_g - res["conf"].L_g) / res["fd"].L_g
        row["dC_rel"] = (res["fd"].C - res["conf"].C) / res["fd"].C
    if "L_k" in res:
        row["L_k"] = res["L_k"]
    return row


def _coupling(cfg, point: dict, section, f_bare: float, lp):
    spec = cfg.resonator_spec(**point)
    cm = coupling_cap_matrix(section, spec.w_f, spec.s_f, spec.d, cfg.solver)
    return cm, coupling(cm, f_bare, spec, total_length(spec), lp.impedance)


def _bare(res: dict):
    """Line parameters used as the bare resonator: field solver when available."""
    return res.get("fd") or res["conf"]


def freq_row(job) -> dict:
    cfg, point = job
    res = _line_params(cfg, point)
    spec = cfg.resonator_spec(**point)
    l_tot = total_length(spec)
    row = _sweep_key(cfg, point)
    row["l_tot_um"] = l_tot
    for name in ("conf", "fd"):
        if name in res:
            row[f"f_{name}"] = resonant_frequency(res[name], l_tot, spec.p)
            if "L_k" in res:
                row[f"f_{name}_Lk"] = resonant_frequency(res[name].with_kinetic(res["L_k"]), l_tot, spec.p)
    if "fd" in res:
        lp = res["fd"].with_kinetic(res.get("L_k", 0.0))
        _, result = _coupling(cfg, point, res["section"], resonant_frequency(lp, l_tot, spec.p), lp)
        row["df_c"] = result.df_c
        row["Q_c"] = result.Q_c
    return row


def coupling_row(job) -> dict:
    cfg, point = job
    res = _line_params(cfg, point)
    spec = cfg.resonator_spec(**point)
    l_tot = total_length(spec)
    lp = _bare(res).with_kinetic(res.get("L_k", 0.0))
    f_bare = resonant_frequency(lp, l_tot, spec.p)
    cm, result = _coupling(cfg, point, res["section"], f_bare, lp)
    row = _sweep_key(cfg, point)
    row.update(f_bare=f_bare, C_rr=cm.C_rr, C_ff=cm.C_ff, C_rf=cm.C_rf, asymmetry=cm.asymmetry,
               kappa=result.kappa, Z2=result.Z2, Zr=result.Zr, theta=result.theta, psi=result.psi,
               Q_c=result.Q_c, df_c=result.df_c)
    return row


BATCH_COLUMNS = ["name", "x_um", "y_um", "h_s_um", "f_conf", "f_fd", "Q_c", "df_c"]


def resonator_point(cfg, entry: dict) -> dict:
    """Design values for one batch resonator, with its interpolated gap."""
    point = {**cfg.values}
    for key, value in entry.items():
        if key not in ("name", "x_um", "y_um"):
            point[key] = value
    point["h_s_um"] = gap_at(cfg.gap_map(), entry["x_um"], entry["y_um"])
    return point


def batch_row(job) -> dict:
    cfg, entry, point = job
    res = _line_params(cfg, point)
    spec = cfg.resonator_spec(**point)
    l_tot = total_length(spec)
    L_k = res.get("L_k", 0.0)
    row = {"name": entry.get("name", ""), "x_um": entry["x_um"], "y_um": entry["y_um"],
           "h_s_um": point["h_s_um"], "f_conf": math.nan, "f_fd": math.nan,
           "Q_c": math.nan, "df_c": math.nan}
    for name in ("conf", "fd"):
        if name in res:
            row[f"f_{name}"] = resonant_frequency(res[name].with_kinetic(L_k), l_tot, spec.p)
    if "fd" in res:
        lp = res["fd"].with_kinetic(L_k)
        _, result = _coupling(cfg, point, res["section"], row["f_fd"], lp)
        row["Q_c"], row["df_c"] = result.Q_c, result.df_c
    return row


# ---------------------------------------------------------------------------
# Output
# ---------------------------------------------------------------------------

def provenance(cfg, command: str, grid_summary: str, extra: list = None) -> list[str]:
    """Header lines; the timestamp line is the only one that varies between runs."""
    lines = [
        f"tool: flipchip-design {__version__}",
        f"command: {command}",
        f"config_sha256: {cfg.sha256}",
        f"grid: {grid_summary}",
    ]
    lines += list(extra or [])
    lines.append(f"generated: {datetime.now(timezone.utc).isoformat(timespec='seconds')}")
    return lines


def write_table(frame: pd.DataFrame, out: str = None, header: list = None):
    """CSV with a `#` header, to `out` or stdout. Missing parent directories are created."""
    if out:
        try:
            Path(out).parent.mkdir(parents=True, exist_ok=True)
            fh = open(out, "w", newline="")
        except OSError as exc:
            raise ConfigError(f"cannot write output file {out}: {exc.strerror or exc}") from exc
    else:
        fh = sys.stdout
    try:
        for line in header or []:
            fh.write(f"# {line}\n")
        frame.to_csv(fh, index=False, float_format=FLOAT_FORMAT)
    finally:
        if out:
            fh.close()
