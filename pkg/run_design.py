#!/usr/bin/env python3
"""
Flip-chip CPW resonator design toolkit.
Closed-form and field-solver line parameters, resonator frequency and
coupling, kinetic inductance, and ground-plane cutout optimisation.

Usage:
    python run_design.py line-params --sweep h_s_um=1:60:1 --out line_params.csv
    python run_design.py freq --config chip.json --lambda-nm 83
    python run_design.py coupling --method fd
    python run_design.py batch --config fifteen.json --out batch.csv
    python run_design.py fit-lambda --config measured.json
    python run_design.py fit-efflen --config pads.json
    python run_design.py optimize-cutout --method conf
    python run_design.py solve-field --out field.csv
    python run_design.py gap-interp --config positions.json

Exit codes: 0 success, 2 configuration error, 3 solver error, 4 fit failure.
"""

import argparse
import functools
import logging
import os
import sys

import pandas as pd

# Ensure project root is on path
sys.path.insert(0, os.path.dirname(os.path.abspath(__file__)))

from config.settings import get_config
from engine.conformal import line_params
from engine.cutout import build_mix_input, h_s_grid, optimize_gamma
from engine.errors import ConfigError, DesignError
from engine.export import write_field
from engine.fieldsolver import line_params_fd, solve_es
from engine.geometry import RESONATOR, build_grid, cross_section_regions
from engine.london import (
    LondonConfig, Measurement, fit_lambda, kinetic_inductance, kinetic_inductance_for,
    london_grid, solve_current,
)
from engine.resonator import fit_eff_length, gap_at, resonant_frequency, total_length
from engine.runconfig import RunConfig, load_run_config
from engine.sweep import (
    BATCH_COLUMNS, batch_row, coupling_row, freq_row, line_params_row, pool_mapper,
    provenance, resonator_point, run_ordered, write_table,
)

logger = logging.getLogger("flipchip")


def _configure_logging(level: str = "INFO"):
    """Log records to stderr; CSV data owns stdout."""
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter(
        '[%(asctime)s] %(levelname)s in %(module)s: %(message)s'
    ))
    root = logging.getLogger()
    root.handlers[:] = [handler]
    root.setLevel(level)


def _progress(message: str):
    print(message, file=sys.stderr)


def _grid_summary(cfg: RunConfig) -> str:
    if cfg.method == "conf" and not (cfg.include_kinetic or cfg.lambda_override):
        return "closed forms (no grid)"
    s = cfg.solver
    regions = cross_section_regions(cfg.section(), s["lateral_margin"], s["vacuum_margin_um"])
    return build_grid(regions, s["edge_cell_um"], s["growth"], s["max_cell_um"]).summary()


def _emit(cfg: RunConfig, frame: pd.DataFrame, command: str, extra: list = None):
    write_table(frame, cfg.out, provenance(cfg, command, _grid_summary(cfg), extra))
    if cfg.out:
        _progress(f"  Wrote {len(frame)} rows to {cfg.out}")


def _evaluator(cfg: RunConfig):
    if cfg.method == "conf":
        return line_params
    return functools.partial(line_params_fd, solver=cfg.solver)


# ---------------------------------------------------------------------------
# Verbs
# ---------------------------------------------------------------------------

def _sweep_table(cfg: RunConfig, row_func, command: str):
    points = cfg.points()
    _progress(f"\n[1/2] Evaluating {len(points)} point(s) with method={cfg.method}...")
    rows = run_ordered(row_func, [(cfg, p) for p in points], cfg.workers)
    _progress("\n[2/2] Writing results...")
    _emit(cfg, pd.DataFrame(rows), command)
    return rows


def run_line_params(cfg: RunConfig):
    return _sweep_table(cfg, line_params_row, "line-params")


def run_freq(cfg: RunConfig):
    return _sweep_table(cfg, freq_row, "freq")


def run_coupling(cfg: RunConfig):
    return _sweep_table(cfg, coupling_row, "coupling")


def run_batch(cfg: RunConfig):
    entries = cfg.entries("resonators")
    _progress(f"\n[1/3] Interpolating gaps for {len(entries)} resonator(s)...")
    gap_map = cfg.gap_map() if entries else None
    jobs = []
    for entry in entries:
        if "x_um" not in entry or "y_um" not in entry:
            raise ConfigError(f"resonator {entry.get('name', '?')} has no position")
        jobs.append((cfg, entry, resonator_point(cfg, entry)))
    if gap_map is not None:
        _progress(f"  Corner gaps NW/NE/SW/SE = {gap_map.nw}/{gap_map.ne}/{gap_map.sw}/{gap_map.se} um")

    _progress("\n[2/3] Evaluating resonators...")
    rows = run_ordered(batch_row, jobs, cfg.workers)

    _progress("\n[3/3] Writing results...")
    _emit(cfg, pd.DataFrame(rows, columns=BATCH_COLUMNS), "batch")
    return rows


def run_gap_interp(cfg: RunConfig):
    gap_map = cfg.gap_map()
    positions = cfg.entries("positions") or [
        {"name": "center", "x_um": gap_map.width / 2, "y_um": gap_map.height / 2}]
    rows = [{"name": p.get("name", ""), "x_um": p["x_um"], "y_um": p["y_um"],
             "h_s_um": gap_at(gap_map, p["x_um"], p["y_um"])} for p in positions]
    _emit(cfg, pd.DataFrame(rows, columns=["name", "x_um", "y_um", "h_s_um"]), "gap-interp")
    return rows


def run_fit_lambda(cfg: RunConfig):
    entries = cfg.entries("measurements")
    _progress(f"\n[1/2] Modelling {len(entries)} measured resonator(s) without kinetic inductance...")
    evaluate = _evaluator(cfg)
    measurements = []
    for n, entry in enumerate(entries):
        if "f_meas_hz" not in entry:
            raise ConfigError(f"measurements[{n}] has no f_meas_hz")
        point = {**cfg.values, **{k: v for k, v in entry.items() if k not in ("name", "f_meas_hz")}}
        x = cfg.section(**point)
        lp = evaluate(x)
        spec = cfg.resonator_spec(**point)
        f_model = resonant_frequency(lp, total_length(spec), spec.p)
        measurements.append(Measurement(section=x, f_meas=entry["f_meas_hz"], f_model=f_model,
                                        L_g=lp.L_g, name=entry.get("name", f"r{n}")))
        _progress(f"  {measurements[-1].name}: model {f_model / 1e9:.4f} GHz, "
                  f"measured {entry['f_meas_hz'] / 1e9:.4f} GHz")

    _progress("\n[2/2] Fitting penetration depth...")
    model = functools.partial(kinetic_inductance_for, solver=cfg.solver)
    fit = fit_lambda(measurements, kinetic_model=model)
    frame = pd.DataFrame([{"lambda_nm": fit.lambda_nm, "resolvable": fit.resolvable,
                           "mean_discrepancy_hz": fit.mean_discrepancy_hz,
                           "n_measurements": len(measurements)}])
    _emit(cfg, frame, "fit-lambda")
    return fit


def run_fit_efflen(cfg: RunConfig):
    samples = [(s["R_um"], s["f_hz"]) for s in cfg.entries("efflen_samples")]
    x = cfg.section()
    lp = _evaluator(cfg)(x)
    spec = cfg.resonator_spec()
    fit = fit_eff_length(samples, lp, spec.l_r)
    frame = pd.DataFrame([{"alpha1_per_um": fit.alpha1, "alpha2": fit.alpha2, "rms_um": fit.rms_um,
                           "l_r_um": spec.l_r, "R_um": spec.R,
                           "l_tot_um": fit.effective_length(spec.l_r, spec.R)}])
    _emit(cfg, frame, "fit-efflen")
    return fit


def run_optimize_cutout(cfg: RunConfig):
    if cfg.sweep is not None and cfg.sweep[0] == "h_s_um":
        grid = cfg.sweep[1]
    else:
        grid = h_s_grid(*cfg.cutout_grid())
    _progress(f"\n[1/2] Tabulating both facings on {len(grid)} spacings "
              f"({grid[0]:g}..{grid[-1]:g} um)...")
    kinetic = cfg.include_kinetic
    mix = build_mix_input(
        cfg.section(), grid, evaluate=_evaluator(cfg), include_kinetic=kinetic,
        kinetic_model=functools.partial(kinetic_inductance_for, solver=cfg.solver) if kinetic else None,
        lambda_nm=cfg.values["lambda_nm"], mapper=pool_mapper(cfg.workers))

    _progress("\n[2/2] Minimising the spacing sensitivity...")
    result = optimize_gamma(mix)
    _progress(f"  gamma_opt = {result.gamma_opt:.4f}, F = {result.F_min:.4g} /um"
              + (" (flat cost)" if result.flat else ""))
    extra = [f"gamma_opt: {result.gamma_opt:.10g}", f"F_min_per_um: {result.F_min:.10g}",
             f"flat_cost: {str(result.flat).lower()}"]
    _emit(cfg, result.deviation, "optimize-cutout", extra)
    return result


def run_solve_field(cfg: RunConfig):
    x = cfg.section()
    s = cfg.solver
    london_cfg = LondonConfig(lambda_nm=cfg.values["lambda_nm"])
    regions = cross_section_regions(x, s["lateral_margin"], s["vacuum_margin_um"])
    grid = london_grid(regions, london_cfg, s)
    _progress(f"\n[1/3] Grid: {grid.summary()}")

    _progress("\n[2/3] Solving electrostatics and supercurrent...")
    es = solve_es(regions, grid, {RESONATOR: 1.0}, s)
    cur = solve_current(regions, grid, london_cfg)
    L_k = kinetic_inductance(cur)
    _progress(f"  C = {es.charges[RESONATOR]:.5e} F/m, L_k = {L_k:.5e} H/m")

    _progress("\n[3/3] Writing field export...")
    out = cfg.out or "field.csv"
    header = provenance(cfg, "solve-field", grid.summary(), [f"L_k_H_per_m: {L_k:.17g}"])
    write_field(out, es=es, current=cur, provenance=header)
    _progress(f"  Wrote {out}")
    return L_k


COMMANDS = {
    "line-params": run_line_params,
    "freq": run_freq,
    "coupling": run_coupling,
    "batch": run_batch,
    "fit-lambda": run_fit_lambda,
    "fit-efflen": run_fit_efflen,
    "optimize-cutout": run_optimize_cutout,
    "solve-field": run_solve_field,
    "gap-interp": run_gap_interp,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Flip-chip CPW resonator design toolkit")
    parser.add_argument("command", choices=sorted(COMMANDS), help="What to compute")
    parser.add_argument("--config", default=None, help="JSON run configuration")
    parser.add_argument("--sweep", default=None, help="VAR=START:STOP:STEP, e.g. h_s_um=1:60:1")
    parser.add_argument("--out", default=None, help="Output path (CSV; stdout if omitted)")
    parser.add_argument("--method", choices=["conf", "fd", "both"], default=None,
                        help="Closed forms, field solver, or both")
    parser.add_argument("--lambda-nm", type=float, default=None,
                        help="Penetration depth; adds kinetic-inductance columns")
    parser.add_argument("--include-kinetic", action="store_true", default=None,
                        help="Include London kinetic inductance")
    parser.add_argument("--workers", type=int, default=None, help="Worker processes for sweeps")
    parser.add_argument("--verbose", action="store_true", help="Debug logging")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    settings = get_config()
    _configure_logging("DEBUG" if args.verbose else settings.LOG_LEVEL)

    try:
        cfg = load_run_config(args.config, sweep=args.sweep, method=args.method,
                              lambda_nm=args.lambda_nm, include_kinetic=args.include_kinetic,
                              out=args.out, workers=args.workers)
        COMMANDS[args.command](cfg)
    except DesignError as exc:
        logger.error("%s: %s", type(exc).__name__, exc)
        return exc.exit_code
    return 0


if __name__ == "__main__":
    sys.exit(main())
