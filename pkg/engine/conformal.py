"""
Closed-form per-unit-length L and C of a flip-chip CPW.
The cross-section is split by a magnetic wall into a top half (vacuum gap up
to the opposing chip) and a bottom half (control-tier substrate). With a
metal ground opposite, the halves combine in parallel; with bare dielectric
opposite, the top half is a series combination of vacuum and substrate.
Film thickness is ignored.
"""

import logging
from dataclasses import dataclass, field, replace
from enum import Enum

import numpy as np
from scipy.constants import c as C_LIGHT, epsilon_0, mu_0

from engine.elliptic import k_ratio
from engine.errors import DegenerateGeometryError, DomainError, GeometryError

logger = logging.getLogger(__name__)

# Below this spacing the magnetic-wall split degrades noticeably.
MAGNETIC_WALL_MIN_HS_UM = 4.0


class Facing(str, Enum):
    METAL = "metal"
    DIELECTRIC = "dielectric"


class Method(str, Enum):
    CONFORMAL = "conformal"
    FIELD_SOLVER = "fd"


@dataclass(frozen=True)
class CrossSection:
    """Flip-chip CPW cross-section. Lengths in µm."""
    w: float
    s: float
    t: float
    h_s: float
    h_b: float
    h_t: float
    eps_r: float
    facing: Facing = Facing.METAL

    def __post_init__(self):
        object.__setattr__(self, "facing", Facing(self.facing))
        for name in ("w", "s", "t", "h_s", "h_b", "h_t"):
            value = getattr(self, name)
            if not np.isfinite(value) or value <= 0:
                raise GeometryError(f"{name} must be a positive finite length, got {value}")
        if not np.isfinite(self.eps_r) or self.eps_r < 1.0:
            raise GeometryError(f"eps_r must be >= 1, got {self.eps_r}")

    @property
    def pitch(self) -> float:
        return self.w + 2.0 * self.s

    def with_(self, **changes) -> "CrossSection":
        return replace(self, **changes)


@dataclass(frozen=True)
class LineParams:
    """Per-unit-length line parameters in SI units (H/m, F/m)."""
    L_g: float
    C: float
    L_k: float = 0.0
    method: Method = Method.CONFORMAL
    extras: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        if not (self.L_g > 0 and self.C > 0 and self.L_k >= 0):
            raise GeometryError(
                f"non-physical line parameters L_g={self.L_g}, C={self.C}, L_k={self.L_k}")

    @property
    def L(self) -> float:
        return self.L_g + self.L_k

    @property
    def eps_eff(self) -> float:
        return C_LIGHT ** 2 * self.L_g * self.C

    @property
    def impedance(self) -> float:
        return float(np.sqrt(self.L / self.C))

    @property
    def phase_velocity(self) -> float:
        return float(1.0 / np.sqrt(self.L * self.C))

    def with_kinetic(self, L_k: float) -> "LineParams":
        return replace(self, L_k=float(L_k))


@dataclass(frozen=True)
class HalfParams:
    """Diagnostic split into the top and bottom halves of the cross-section."""
    L_top: float
    L_bottom: float
    C_top: float
    C_bottom: float


def _check_modulus(name: str, k: float) -> float:
    if not np.isfinite(k):
        raise DomainError(f"{name} is not finite")
    if k <= 0.0 or k >= 1.0:
        raise DegenerateGeometryError(f"{name}={k!r} collapsed to the interval ends")
    return float(k)


def _modulus_pairs(x: CrossSection) -> tuple[tuple, tuple, tuple]:
    """(k, k') for each problem, complements from closed-form identities."""
    k1 = (_check_modulus("k1", x.w / x.pitch),
          2.0 * np.sqrt(x.s * (x.w + x.s)) / x.pitch)

    a, b = np.pi * x.w / (4.0 * x.h_b), np.pi * x.pitch / (4.0 * x.h_b)
    with np.errstate(over="ignore"):
        k2 = (np.sinh(a) / np.sinh(b),
              np.sqrt(np.sinh(b - a) * np.sinh(b + a)) / np.sinh(b))
    if not np.all(np.isfinite(k2)):
        raise DomainError(f"sinh overflow for h_b={x.h_b} µm and pitch={x.pitch} µm")
    k2 = (_check_modulus("k2", k2[0]), float(k2[1]))

    # sinh^2 b - sinh^2 a = sinh(b - a) sinh(b + a), so 1 - ks^2 keeps its digits
    a, b = np.pi * x.w / (4.0 * x.h_s), np.pi * x.pitch / (4.0 * x.h_s)
    ks = _check_modulus("ks", np.tanh(a) / np.tanh(b))
    ks_c = np.sqrt(np.sinh(b - a) * np.sinh(b + a)) / (np.cosh(a) * np.sinh(b))
    return k1, k2, (ks, float(ks_c))


def moduli(x: CrossSection) -> tuple[float, float, float]:
    """
    Moduli (k1, k2, ks) of the bare-CPW, substrate and spacer problems.

        w = s = 12, h_b = 280, h_s = 8  ->  (1/3, ~0.3328, ~0.828)
    """
    return tuple(k for k, _ in _modulus_pairs(x))


def _ratios(x: CrossSection) -> tuple[float, float, float]:
    return tuple(k_ratio(k, kp) for k, kp in _modulus_pairs(x))


def _warn_validity(x: CrossSection):
    if x.h_s <= MAGNETIC_WALL_MIN_HS_UM:
        logger.warning(
            "h_s=%.3g µm is at or below %.0f µm; magnetic-wall closed forms lose accuracy",
            x.h_s, MAGNETIC_WALL_MIN_HS_UM)
    if x.h_b != x.h_t:
        logger.warning("h_b=%.4g µm differs from h_t=%.4g µm; closed forms assume equal tiers",
                       x.h_b, x.h_t)


def half_params(x: CrossSection) -> HalfParams:
    r1, r2, rs = _ratios(x)
    C_bottom = 2.0 * epsilon_0 * (r1 + (x.eps_r - 1.0) * r2)
    L_bottom = (mu_0 / 2.0) / r1

    if x.facing is Facing.METAL:
        return HalfParams(L_top=(mu_0 / 2.0) / rs, L_bottom=L_bottom,
                          C_top=2.0 * epsilon_0 * rs, C_bottom=C_bottom)

    if x.eps_r <= 1.0:
        raise DomainError("dielectric-facing capacitance needs eps_r > 1")
    C_top = 2.0 * epsilon_0 / (1.0 / (x.eps_r * r1)
                               + 1.0 / ((x.eps_r / (x.eps_r - 1.0)) * rs))
    return HalfParams(L_top=(mu_0 / 2.0) / r1, L_bottom=L_bottom,
                      C_top=C_top, C_bottom=C_bottom)


def line_params_metal_facing(x: CrossSection) -> LineParams:
    """L_g and C with an opposing metal ground plane (parallel halves)."""
    if x.facing is not Facing.METAL:
        raise GeometryError("line_params_metal_facing needs a metal-facing cross-section")
    _warn_validity(x)
    halves = half_params(x)
    L_g = 1.0 / (1.0 / halves.L_top + 1.0 / halves.L_bottom)
    C = halves.C_top + halves.C_bottom
    return LineParams(L_g=L_g, C=C, method=Method.CONFORMAL, extras={"halves": halves})


def line_params_dielectric_facing(x: CrossSection) -> LineParams:
    """L' and C' with bare qubit-tier substrate opposite. L' has no h_s dependence."""
    if x.facing is not Facing.DIELECTRIC:
        raise GeometryError("line_params_dielectric_facing needs a dielectric-facing cross-section")
    _warn_validity(x)
    halves = half_params(x)
    L_g = (mu_0 / 4.0) / k_ratio(*_modulus_pairs(x)[0])
    return LineParams(L_g=L_g, C=halves.C_top + halves.C_bottom,
                      method=Method.CONFORMAL, extras={"halves": halves})


def line_params(x: CrossSection) -> LineParams:
    if x.facing is Facing.METAL:
        return line_params_metal_facing(x)
    return line_params_dielectric_facing(x)
