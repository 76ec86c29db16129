"""
Device-level predictions for quarter-wave readout resonators: frequency from
the line parameters and effective length, feedline coupling Q and frequency
shift, inter-chip gap at a chip position, and the effective-length fit.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from sklearn.linear_model import LinearRegression

from engine.conformal import LineParams
from engine.errors import FitError, GeometryError, SolverError
from engine.fieldsolver import CapMatrix

logger = logging.getLogger(__name__)

UM = 1e-6


@dataclass(frozen=True)
class ResonatorSpec:
    """Layout lengths in µm; alpha1 in 1/µm."""
    l_s: float
    l_c: float
    l_o: float
    R: float = 0.0
    alpha1: float = 0.0
    alpha2: float = 0.0
    p: int = 1
    w_f: float = 9.0
    s_f: float = 10.0
    d: float = 6.0
    gamma: float = 0.0

    def __post_init__(self):
        for name in ("l_s", "l_c", "l_o", "R", "w_f", "s_f", "d"):
            if getattr(self, name) < 0:
                raise GeometryError(f"{name} must be >= 0, got {getattr(self, name)}")
        if self.l_r <= 0:
            raise GeometryError("resonator length l_s + l_c + l_o must be positive")
        if int(self.p) != self.p or self.p < 1:
            raise GeometryError(f"mode index p must be a positive integer, got {self.p}")
        if not 0.0 <= self.gamma <= 1.0:
            raise GeometryError(f"gamma must lie in [0, 1], got {self.gamma}")

    @property
    def l_r(self) -> float:
        return self.l_s + self.l_c + self.l_o

    @property
    def pad_length(self) -> float:
        return self.alpha1 * self.R ** 2 + self.alpha2 * self.R

    @property
    def l_o_eff(self) -> float:
        """Open end plus the coupling-pad allowance; the short end adds nothing."""
        return self.l_o + self.pad_length


def total_length(spec: ResonatorSpec) -> float:
    """l_tot = l_r + alpha1 R² + alpha2 R (µm)."""
    return spec.l_r + spec.pad_length


def resonant_frequency(lp: LineParams, l_tot: float, p: int = 1) -> float:
    """f_r = (2p-1) / (4 l_tot sqrt((L_g + L_k) C)), l_tot in µm."""
    if l_tot <= 0:
        raise GeometryError(f"l_tot must be positive, got {l_tot}")
    return (2 * p - 1) / (4.0 * l_tot * UM * math.sqrt(lp.L * lp.C))


# ---------------------------------------------------------------------------
# Feedline coupling
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CouplingResult:
    Q_c: float
    df_c: float
    kappa: float
    theta: float
    psi: float
    Z2: float
    Zr: float
    c_l: float


def coupling(cm: CapMatrix, f_bare: float, spec: ResonatorSpec, l_tot: float,
             Zr: float) -> CouplingResult:
    """
    Q_c and the coupling-induced shift df_c (Hz). kappa is the Maxwell mutual
    term over sqrt(C_rr C_ff), so it lies in (-1, 0]. An unbounded Q_c is
    returned as math.inf.
    """
    if f_bare <= 0:
        raise GeometryError(f"bare frequency must be positive, got {f_bare}")
    kappa = cm.C_rf / math.sqrt(cm.C_rr * cm.C_ff)
    if abs(kappa) >= 1.0:
        raise SolverError(f"non-physical capacitance matrix: |kappa| = {abs(kappa):.4g}")
    return _coupling_from_kappa(kappa, cm.C_ff, f_bare, spec, l_tot, Zr)


def _coupling_from_kappa(kappa: float, C_ff: float, f_bare: float, spec: ResonatorSpec,
                         l_tot: float, Zr: float) -> CouplingResult:
    odd = 2 * spec.p - 1
    l_tot_m = l_tot * UM
    c_l = f_bare * 4.0 * l_tot_m / odd
    Z2 = 1.0 / (c_l * C_ff * math.sqrt(1.0 - kappa ** 2))
    theta = 2.0 * math.pi * spec.l_c / (4.0 * l_tot)
    psi = 2.0 * math.pi * (spec.l_c + 2.0 * spec.l_o_eff) / (4.0 * l_tot)

    inv_q = 2.0 * kappa ** 2 * math.sin(theta) ** 2 / (math.pi * odd)
    Q_c = 1.0 / inv_q if inv_q > 0 else math.inf

    bracket = (kappa ** 2 * (2.0 * math.cos(psi) + math.cos(theta)) / 2.0
               + (Z2 - Zr) * math.cos(psi) / Zr)
    df_c = -c_l * math.sin(theta) / (2.0 * math.pi * l_tot_m) * bracket
    return CouplingResult(Q_c=Q_c, df_c=df_c, kappa=kappa, theta=theta, psi=psi,
                          Z2=Z2, Zr=Zr, c_l=c_l)


# ---------------------------------------------------------------------------
# Inter-chip gap map
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GapMap:
    """Corner gaps (µm) of a chip spanning [0, width] x [0, height]; SW is the origin."""
    nw: float
    ne: float
    sw: float
    se: float
    width: float
    height: float

    def __post_init__(self):
        if min(self.nw, self.ne, self.sw, self.se) <= 0:
            raise GeometryError("corner gaps must be positive")
        if self.width <= 0 or self.height <= 0:
            raise GeometryError("chip size must be positive")


def gap_at(gap_map: GapMap, x: float, y: float) -> float:
    """Bilinear blend of the four corner gaps at chip position (x, y) in µm."""
    if not (0.0 <= x <= gap_map.width and 0.0 <= y <= gap_map.height):
        raise GeometryError(f"position ({x}, {y}) µm lies outside the "
                            f"{gap_map.width} x {gap_map.height} µm chip")
    u = x / gap_map.width
    v = y / gap_map.height
    south = (1.0 - u) * gap_map.sw + u * gap_map.se
    north = (1.0 - u) * gap_map.nw + u * gap_map.ne
    return (1.0 - v) * south + v * north


# ---------------------------------------------------------------------------
# Effective-length fit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EffLengthFit:
    alpha1: float
    alpha2: float
    rms_um: float
    beta: float

    def effective_length(self, l_r: float, R: float) -> float:
        return l_r + self.alpha1 * R ** 2 + self.alpha2 * R


def fit_eff_length(samples: list, lp: LineParams, l_r: float) -> EffLengthFit:
    """
    Least-squares (alpha1, alpha2) from (R, f_r) samples through
    f_r = beta / (l_r + alpha1 R² + alpha2 R), beta = 1 / (4 sqrt(L C)).
    """
    data = np.asarray(samples, dtype=float)
    if data.ndim != 2 or data.shape[1] != 2:
        raise FitError("samples must be (R, f_r) pairs")
    R, f = data[:, 0], data[:, 1]
    if len(np.unique(R)) < 3:
        raise FitError("fit_eff_length needs at least 3 distinct pad radii")
    if np.any(f <= 0):
        raise FitError("sample frequencies must be positive")

    beta = 1.0 / (4.0 * math.sqrt(lp.L * lp.C))
    y = beta / f / UM - l_r
    X = np.column_stack([R ** 2, R])
    if np.linalg.matrix_rank(X) < 2:
        raise FitError("rank-deficient sample set")

    reg = LinearRegression(fit_intercept=False).fit(X, y)
    alpha1, alpha2 = (float(c) for c in reg.coef_)
    rms = float(np.sqrt(np.mean((reg.predict(X) - y) ** 2)))
    logger.info("effective length fit: alpha1=%.5g /µm, alpha2=%.5g, rms %.3g µm", alpha1, alpha2, rms)
    return EffLengthFit(alpha1=alpha1, alpha2=alpha2, rms_um=rms, beta=beta)
