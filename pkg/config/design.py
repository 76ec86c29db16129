"""
Design defaults and solver configuration.
Reference geometry of the flip-chip readout resonator plus the knobs
of the 2D solvers. Lengths are in µm unless the key says otherwise.
"""

# Cross-section of the resonator CPW and the two-tier stack.
# h_s is measured from the control-tier metal surface to the opposing surface.
DESIGN_DEFAULTS = {
    "w_um": 12.0,
    "s_um": 12.0,
    "t_nm": 150.0,
    "h_s_um": 8.0,
    "h_b_um": 280.0,
    "h_t_um": 280.0,
    "eps_r": 11.45,             # high-resistivity Si at cryogenic temperature
    "facing": "metal",          # "metal" | "dielectric"

    # Quarter-wave resonator layout
    "l_s_um": 3780.3,
    "l_c_um": 425.7,            # includes the two 90-degree arcs
    "l_o_um": 850.4,
    "R_um": 29.4,
    "alpha1_per_um": 0.032,
    "alpha2": 2.9,
    "p": 1,

    # Feedline and coupling section
    "w_f_um": 9.0,
    "s_f_um": 10.0,
    "d_um": 6.0,

    "gamma": 0.0,
    "lambda_nm": 83.0,          # fitted for 150 nm Al films
}


# ---------------------------------------------------------------------------
# Field solver configuration
# ---------------------------------------------------------------------------

SOLVER_CONFIG = {
    # Grid refinement. Cells next to conductor edges start at edge_cell_um and
    # grow geometrically by `growth` up to max_cell_um.
    "edge_cell_um": 0.05,       # t/3 for the 150 nm films
    "growth": 1.25,             # must lie in (1, 1.5]
    "max_cell_um": 20.0,

    # Outer Dirichlet box. Lateral half-width is lateral_margin x (w + 2s);
    # vacuum_margin_um of vacuum is kept below/above the outermost substrates.
    "lateral_margin": 10.0,
    "vacuum_margin_um": 40.0,

    # Linear algebra
    "linear_solver": "direct",  # "direct" (SuperLU) | "cg"
    "cg_rtol": 1e-12,
    "cg_maxiter": 20000,
    "residual_tol": 1e-10,

    # Capacitance matrix reciprocity check
    "max_asymmetry": 0.01,
}


# Lossy interface layers for the participation-ratio Q (never meshed).
INTERFACE_LAYERS = {
    "SA": {"eps_r": 4.0, "tan_delta": 1e-3, "thickness_nm": 2.0},
    "SM": {"eps_r": 4.0, "tan_delta": 1e-3, "thickness_nm": 0.5},
    "MA": {"eps_r": 7.0, "tan_delta": 1e-3, "thickness_nm": 2.0},
}


# ---------------------------------------------------------------------------
# Kinetic inductance / penetration-depth fit
# ---------------------------------------------------------------------------

LONDON_CONFIG = {
    "lambda_bracket_nm": (1.0, 500.0),
    "lambda_xtol_nm": 0.1,
    "min_film_cells": 3,
}


# ---------------------------------------------------------------------------
# Ground-plane cutout optimisation
# ---------------------------------------------------------------------------

CUTOUT_CONFIG = {
    "h_s_start_um": 6.0,
    "h_s_stop_um": 10.0,
    "h_s_step_um": 0.25,
    "gss_tol": 1e-3,
    "flat_cost_rtol": 1e-9,
}


# Every key a JSON run configuration may contain, with its expected type.
# Lists carry per-entry dicts restricted to ENTRY_KEYS of the same list.
CONFIG_SCHEMA = {
    **{key: (str if key == "facing" else (int if key == "p" else float))
       for key in DESIGN_DEFAULTS},
    "sweep": str,               # "VAR=START:STOP:STEP"
    "method": str,              # "conf" | "fd" | "both"
    "include_kinetic": bool,
    "out": str,
    "workers": int,

    # solver overrides
    "edge_cell_um": float,
    "growth": float,
    "max_cell_um": float,
    "lateral_margin": float,
    "vacuum_margin_um": float,
    "linear_solver": str,

    # gap map (batch / gap-interp)
    "gap_nw_um": float,
    "gap_ne_um": float,
    "gap_sw_um": float,
    "gap_se_um": float,
    "chip_width_um": float,
    "chip_height_um": float,

    # cutout grid
    "h_s_start_um": float,
    "h_s_stop_um": float,
    "h_s_step_um": float,

    # lists
    "resonators": list,
    "positions": list,
    "measurements": list,
    "efflen_samples": list,
}

ENTRY_KEYS = {
    "resonators": {"name", "x_um", "y_um", "l_s_um", "l_c_um", "l_o_um",
                   "R_um", "w_um", "s_um", "d_um"},
    "positions": {"name", "x_um", "y_um"},
    "measurements": {"name", "w_um", "s_um", "h_s_um", "l_s_um", "l_c_um",
                     "l_o_um", "R_um", "facing", "f_meas_hz"},
    "efflen_samples": {"R_um", "f_hz"},
}
