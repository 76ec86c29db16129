"""
Ground-plane cutout ratio.

A fraction gamma of the resonator faces bare dielectric instead of the
opposing ground plane. Mixing the two line-parameter tables by gamma and
minimizing the h_s sensitivity of the phase velocity gives a resonator
whose frequency barely moves with inter-chip spacing.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from config.design import CUTOUT_CONFIG
from engine.conformal import CrossSection, Facing, LineParams, Method, line_params
from engine.errors import FitError, GeometryError

logger = logging.getLogger(__name__)

_GOLDEN = (1.0 + math.sqrt(5.0)) / 2.0


@dataclass(eq=False)
class MixInput:
    """Metal- and dielectric-facing tables on a shared h_s grid (µm, SI values)."""
    h_s: np.ndarray
    L_metal: np.ndarray
    C_metal: np.ndarray
    L_diel: np.ndarray
    C_diel: np.ndarray
    Lk_metal: np.ndarray = None
    Lk_diel: np.ndarray = None
    include_kinetic: bool = False
    method: Method = Method.CONFORMAL

    def __post_init__(self):
        self.h_s = np.asarray(self.h_s, dtype=float)
        n = len(self.h_s)
        if n < 2:
            raise GeometryError("the h_s grid needs at least two points")
        if np.any(np.diff(self.h_s) <= 0):
            raise GeometryError("the h_s grid must be strictly increasing")
        for name in ("L_metal", "C_metal", "L_diel", "C_diel", "Lk_metal", "Lk_diel"):
            value = getattr(self, name)
            value = np.zeros(n) if value is None else np.asarray(value, dtype=float)
            if value.shape != (n,):
                raise GeometryError(f"{name} does not match the h_s grid ({value.shape} vs {n})")
            setattr(self, name, value)

    @classmethod
    def from_tables(cls, h_s, metal: list, dielectric: list, include_kinetic: bool = False):
        """Build from two LineParams lists aligned with h_s."""
        if len(metal) != len(h_s) or len(dielectric) != len(h_s):
            raise GeometryError("metal and dielectric tables must share the h_s grid")
        return cls(
            h_s=np.asarray(h_s, dtype=float),
            L_metal=np.array([lp.L_g for lp in metal]),
            C_metal=np.array([lp.C for lp in metal]),
            L_diel=np.array([lp.L_g for lp in dielectric]),
            C_diel=np.array([lp.C for lp in dielectric]),
            Lk_metal=np.array([lp.L_k for lp in metal]),
            Lk_diel=np.array([lp.L_k for lp in dielectric]),
            include_kinetic=include_kinetic,
            method=metal[0].method,
        )


@dataclass(eq=False)
class CutoutResult:
    gamma_opt: float
    F_min: float
    deviation: pd.DataFrame
    flat: bool = False


def _check_gamma(gamma: float):
    if not 0.0 <= gamma <= 1.0:
        raise GeometryError(f"gamma must lie in [0, 1], got {gamma}")


def _mixed(mix: MixInput, gamma: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    _check_gamma(gamma)
    L_g = (1.0 - gamma) * mix.L_metal + gamma * mix.L_diel
    if mix.include_kinetic:
        L_k = (1.0 - gamma) * mix.Lk_metal + gamma * mix.Lk_diel
    else:
        L_k = np.zeros_like(L_g)
    C = (1.0 - gamma) * mix.C_metal + gamma * mix.C_diel
    return L_g, L_k, C


def effective_lc(mix: MixInput, gamma: float) -> list[LineParams]:
    """L^e = (1-gamma)(L_g+L_k) + gamma(L_g'+L_k'), C^e likewise, per grid h_s."""
    L_g, L_k, C = _mixed(mix, gamma)
    return [LineParams(L_g=a, C=c, L_k=k, method=mix.method) for a, k, c in zip(L_g, L_k, C)]


def _velocity(mix: MixInput, gamma: float) -> np.ndarray:
    L_g, L_k, C = _mixed(mix, gamma)
    return 1.0 / np.sqrt((L_g + L_k) * C)


def cost(mix: MixInput, gamma: float) -> float:
    """
    F = sum over the grid of |d(L^e C^e)^(-1/2) / dh_s|, central differences
    inside and one-sided at the ends, normalized by the mean velocity (1/µm).
    """
    v = _velocity(mix, gamma)
    slope = np.gradient(v, mix.h_s)
    return float(np.sum(np.abs(slope)) / np.mean(v))


def golden_section(f, a: float, b: float, tol: float) -> float:
    c = b - (b - a) / _GOLDEN
    d = a + (b - a) / _GOLDEN
    fc, fd = f(c), f(d)
    while abs(b - a) > tol:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - (b - a) / _GOLDEN
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + (b - a) / _GOLDEN
            fd = f(d)
    return (a + b) / 2.0


def deviation_curve(mix: MixInput, gamma: float) -> pd.DataFrame:
    """Relative frequency change vs h_s, referenced to the middle of the h_s range."""
    v = _velocity(mix, gamma)
    h_ref = 0.5 * (mix.h_s[0] + mix.h_s[-1])
    v_ref = np.interp(h_ref, mix.h_s, v)
    return pd.DataFrame({"h_s_um": mix.h_s, "f_rel_deviation": v / v_ref - 1.0})


def optimize_gamma(mix: MixInput, tol: float = None) -> CutoutResult:
    """Golden-section minimum of cost over [0, 1], checked against both ends."""
    tol = CUTOUT_CONFIG["gss_tol"] if tol is None else tol
    inner = golden_section(lambda g: cost(mix, g), 0.0, 1.0, tol)
    candidates = {0.0: cost(mix, 0.0), inner: cost(mix, inner), 1.0: cost(mix, 1.0)}
    gamma_opt = min(candidates, key=candidates.get)
    F_min = candidates[gamma_opt]

    values = list(candidates.values()) + [cost(mix, 0.5)]
    spread = max(values) - min(values)
    flat = spread <= CUTOUT_CONFIG["flat_cost_rtol"] * max(max(values), 1e-300)
    if flat:
        logger.warning("cutout cost is flat in gamma (spread %.3g); optimum is not meaningful", spread)
    if not np.isfinite(F_min):
        raise FitError("cutout cost is not finite")

    logger.info("gamma_opt = %.4f, F = %.4g /µm", gamma_opt, F_min)
    return CutoutResult(gamma_opt=float(gamma_opt), F_min=F_min,
                        deviation=deviation_curve(mix, gamma_opt), flat=flat)


def h_s_grid(start: float = None, stop: float = None, step: float = None) -> np.ndarray:
    start = CUTOUT_CONFIG["h_s_start_um"] if start is None else start
    stop = CUTOUT_CONFIG["h_s_stop_um"] if stop is None else stop
    step = CUTOUT_CONFIG["h_s_step_um"] if step is None else step
    if step <= 0 or stop <= start:
        raise GeometryError(f"bad h_s grid {start}:{stop}:{step}")
    n = int(round((stop - start) / step))
    return start + step * np.arange(n + 1)


def build_mix_input(section: CrossSection, h_s, evaluate=None, include_kinetic: bool = False,
                    kinetic_model=None, lambda_nm: float = None, mapper=map) -> MixInput:
    """
    Tabulate both facings over h_s. `evaluate` maps a CrossSection to
    LineParams (closed forms by default); `kinetic_model(section, lambda_nm)`
    supplies L_k when include_kinetic is set. `mapper` lets the caller fan
    the per-point work out to a pool.
    """
    evaluate = evaluate or line_params
    h_s = np.asarray(h_s, dtype=float)
    sections = [section.with_(h_s=float(h), facing=facing)
                for facing in (Facing.METAL, Facing.DIELECTRIC) for h in h_s]
    params = list(mapper(evaluate, sections))
    if include_kinetic:
        if kinetic_model is None or lambda_nm is None:
            raise GeometryError("kinetic terms need a kinetic model and lambda")
        lks = list(mapper(kinetic_model, sections, [lambda_nm] * len(sections)))
        params = [lp.with_kinetic(lk) for lp, lk in zip(params, lks)]
    n = len(h_s)
    return MixInput.from_tables(h_s, params[:n], params[n:], include_kinetic=include_kinetic)
