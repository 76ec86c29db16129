"""
JSON run configuration.

Flat, unit-suffixed keys (lengths in µm, film thickness and penetration
depth in nm). Anything not in CONFIG_SCHEMA is rejected with the key name.
"""

import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from config.design import CONFIG_SCHEMA, CUTOUT_CONFIG, DESIGN_DEFAULTS, ENTRY_KEYS, SOLVER_CONFIG
from config.settings import get_config
from engine.conformal import CrossSection, Facing
from engine.errors import ConfigError
from engine.resonator import GapMap, ResonatorSpec

logger = logging.getLogger(__name__)

METHODS = ("conf", "fd", "both")
SOLVER_KEYS = ("edge_cell_um", "growth", "max_cell_um", "lateral_margin",
               "vacuum_margin_um", "linear_solver")
GAP_KEYS = ("gap_nw_um", "gap_ne_um", "gap_sw_um", "gap_se_um", "chip_width_um", "chip_height_um")


def _type_ok(value, expected) -> bool:
    if expected is float:
        return isinstance(value, (int, float)) and not isinstance(value, bool)
    if expected is int:
        return isinstance(value, int) and not isinstance(value, bool)
    return isinstance(value, expected)


def validate(raw: dict) -> dict:
    """Check keys and types; returns a copy with list entries validated too."""
    if not isinstance(raw, dict):
        raise ConfigError("run configuration must be a JSON object")
    for key, value in raw.items():
        if key not in CONFIG_SCHEMA:
            raise ConfigError(f"unknown configuration key: {key}")
        expected = CONFIG_SCHEMA[key]
        if not _type_ok(value, expected):
            raise ConfigError(f"{key} must be of type {expected.__name__}, got {type(value).__name__}")
        if expected is list:
            for n, entry in enumerate(value):
                if not isinstance(entry, dict):
                    raise ConfigError(f"{key}[{n}] must be an object")
                extra = set(entry) - ENTRY_KEYS[key]
                if extra:
                    raise ConfigError(f"unknown configuration key: {key}[{n}].{sorted(extra)[0]}")
                for sub, val in entry.items():
                    if sub in ("name", "facing"):
                        if not isinstance(val, str):
                            raise ConfigError(f"{key}[{n}].{sub} must be a string")
                    elif not _type_ok(val, float):
                        raise ConfigError(f"{key}[{n}].{sub} must be a number")
    if raw.get("facing", "metal") not in (f.value for f in Facing):
        raise ConfigError(f"facing must be 'metal' or 'dielectric', got {raw['facing']!r}")
    if raw.get("method", "both") not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {raw['method']!r}")
    if raw.get("linear_solver", "direct") not in ("direct", "cg"):
        raise ConfigError(f"linear_solver must be 'direct' or 'cg', got {raw['linear_solver']!r}")
    return dict(raw)


def parse_sweep(text: str) -> tuple[str, np.ndarray]:
    """'VAR=START:STOP:STEP' -> (VAR, inclusive grid)."""
    try:
        var, spec = text.split("=", 1)
        start, stop, step = (float(v) for v in spec.split(":"))
    except ValueError:
        raise ConfigError(f"sweep must look like VAR=START:STOP:STEP, got {text!r}") from None
    var = var.strip()
    if CONFIG_SCHEMA.get(var) is not float or var not in DESIGN_DEFAULTS:
        raise ConfigError(f"cannot sweep {var!r}: not a numeric design key")
    if step <= 0 or stop < start:
        raise ConfigError(f"empty sweep range {text!r}")
    n = int(np.floor((stop - start) / step + 1e-9))
    return var, start + step * np.arange(n + 1)


@dataclass
class RunConfig:
    values: dict
    solver: dict
    sweep: tuple = None
    method: str = "both"
    include_kinetic: bool = False
    lambda_override: bool = False
    out: str = None
    workers: int = 1
    raw: dict = field(default_factory=dict)

    # ── Derived objects ──────────────────────────────────────────────

    def section(self, **overrides) -> CrossSection:
        v = {**self.values, **overrides}
        return CrossSection(w=v["w_um"], s=v["s_um"], t=v["t_nm"] * 1e-3, h_s=v["h_s_um"],
                            h_b=v["h_b_um"], h_t=v["h_t_um"], eps_r=v["eps_r"],
                            facing=v["facing"])

    def resonator_spec(self, **overrides) -> ResonatorSpec:
        v = {**self.values, **overrides}
        return ResonatorSpec(l_s=v["l_s_um"], l_c=v["l_c_um"], l_o=v["l_o_um"], R=v["R_um"],
                             alpha1=v["alpha1_per_um"], alpha2=v["alpha2"], p=v["p"],
                             w_f=v["w_f_um"], s_f=v["s_f_um"], d=v["d_um"], gamma=v["gamma"])

    def gap_map(self) -> GapMap:
        missing = [k for k in GAP_KEYS if k not in self.values]
        if missing:
            raise ConfigError(f"gap map needs {missing}")
        v = self.values
        return GapMap(nw=v["gap_nw_um"], ne=v["gap_ne_um"], sw=v["gap_sw_um"], se=v["gap_se_um"],
                      width=v["chip_width_um"], height=v["chip_height_um"])

    def points(self) -> list[dict]:
        """Design values per sweep point (one point without a sweep)."""
        if self.sweep is None:
            return [dict(self.values)]
        var, grid = self.sweep
        return [{**self.values, var: float(x)} for x in grid]

    def cutout_grid(self) -> tuple[float, float, float]:
        v = {**CUTOUT_CONFIG, **self.values}
        return v["h_s_start_um"], v["h_s_stop_um"], v["h_s_step_um"]

    def entries(self, key: str) -> list[dict]:
        return list(self.values.get(key, []))

    @property
    def sha256(self) -> str:
        effective = {
            "values": self.values, "solver": self.solver, "method": self.method,
            "sweep": None if self.sweep is None else [self.sweep[0], list(map(float, self.sweep[1]))],
            "include_kinetic": self.include_kinetic,
        }
        blob = json.dumps(effective, sort_keys=True, default=str).encode()
        return hashlib.sha256(blob).hexdigest()


def _env_solver(env: str = None) -> dict:
    settings = get_config(env)
    return {**SOLVER_CONFIG,
            "edge_cell_um": settings.EDGE_CELL_UM,
            "growth": settings.GROWTH,
            "max_cell_um": settings.MAX_CELL_UM,
            "linear_solver": settings.LINEAR_SOLVER}


def build_run_config(raw: dict = None, sweep: str = None, method: str = None,
                     lambda_nm: float = None, include_kinetic: bool = None,
                     out: str = None, workers: int = None, env: str = None) -> RunConfig:
    """Merge defaults, environment, config file and command-line overrides."""
    raw = validate(raw or {})
    values = {**DESIGN_DEFAULTS, **{k: v for k, v in raw.items() if k not in SOLVER_KEYS}}
    if lambda_nm is not None:
        if lambda_nm <= 0:
            raise ConfigError(f"lambda must be positive, got {lambda_nm} nm")
        values["lambda_nm"] = float(lambda_nm)
    solver = {**_env_solver(env), **{k: raw[k] for k in SOLVER_KEYS if k in raw}}
    if solver["linear_solver"] not in ("direct", "cg"):
        raise ConfigError(f"unknown linear solver {solver['linear_solver']!r}")

    sweep_text = sweep if sweep is not None else raw.get("sweep")
    method = method or raw.get("method", "both")
    if method not in METHODS:
        raise ConfigError(f"method must be one of {METHODS}, got {method!r}")
    workers = workers if workers is not None else raw.get("workers", get_config(env).WORKERS)
    if workers < 1:
        raise ConfigError("workers must be >= 1")

    cfg = RunConfig(
        values=values, solver=solver,
        sweep=parse_sweep(sweep_text) if sweep_text else None,
        method=method,
        include_kinetic=bool(include_kinetic if include_kinetic is not None
                             else raw.get("include_kinetic", False)),
        lambda_override=lambda_nm is not None,
        out=out if out is not None else raw.get("out"),
        workers=int(workers), raw=raw,
    )
    # validate the base geometry up front so bad lengths fail as config errors
    cfg.section()
    cfg.resonator_spec()
    return cfg


def load_run_config(path=None, **overrides) -> RunConfig:
    raw = {}
    if path is not None:
        path = Path(path)
        try:
            raw = json.loads(path.read_text())
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file {path} is not valid JSON: {exc}") from None
    logger.debug("loaded run config %s with %d keys", path, len(raw))
    return build_run_config(raw, **overrides)
