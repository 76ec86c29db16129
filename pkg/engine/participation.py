"""
Surface participation ratios of thin lossy interface layers.
The layers are not meshed: their energy is estimated from the unperturbed
surface fields (tangential E and normal D carried through the layer).
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.constants import epsilon_0

from config.design import INTERFACE_LAYERS, SOLVER_CONFIG
from engine.conformal import CrossSection
from engine.errors import SolverError
from engine.fieldsolver import FieldSolution, solve_es
from engine.geometry import (
    CODE_METAL, CODE_SUBSTRATE, CODE_VACUUM, RESONATOR, build_grid, cross_section_regions,
)

logger = logging.getLogger(__name__)

UM = 1e-6

_PAIR_KIND = {
    frozenset((CODE_SUBSTRATE, CODE_VACUUM)): "SA",
    frozenset((CODE_METAL, CODE_VACUUM)): "MA",
    frozenset((CODE_SUBSTRATE, CODE_METAL)): "SM",
}


@dataclass(frozen=True)
class ParticipationResult:
    p_SA: float
    p_SM: float
    p_MA: float
    Q_pr: float

    @property
    def ratios(self) -> dict:
        return {"SA": self.p_SA, "SM": self.p_SM, "MA": self.p_MA}


def _cell_fields(sol: FieldSolution) -> tuple[np.ndarray, np.ndarray]:
    """Cell-averaged Ex, Ey in V/m, shape (nx, ny)."""
    V = sol.potential
    hx, hy = sol.grid.hx * UM, sol.grid.hy * UM
    ex = -0.5 * ((V[1:, :-1] - V[:-1, :-1]) + (V[1:, 1:] - V[:-1, 1:])) / hx[:, None]
    ey = -0.5 * ((V[:-1, 1:] - V[:-1, :-1]) + (V[1:, 1:] - V[1:, :-1])) / hy[None, :]
    return ex, ey


def _normal_d(side_a, side_b, code_a, code_b, eps_a, eps_b):
    """D normal to an interface from the non-metal side(s), averaged when both qualify."""
    d_a = epsilon_0 * eps_a * side_a
    d_b = epsilon_0 * eps_b * side_b
    use_a = code_a != CODE_METAL
    use_b = code_b != CODE_METAL
    both = use_a & use_b
    return np.where(both, 0.5 * (d_a + d_b), np.where(use_a, d_a, d_b))


def surface_integrals(sol: FieldSolution) -> dict:
    """
    Per interface kind, line integrals (SI) of E_par^2 and D_perp^2 along
    every cell edge that separates two different material classes.
    """
    V = sol.potential
    code, eps = sol.material, sol.eps
    hx, hy = sol.grid.hx * UM, sol.grid.hy * UM
    ex, ey = _cell_fields(sol)
    out = {kind: {"E2": 0.0, "D2": 0.0} for kind in ("SA", "SM", "MA")}

    # horizontal edges between cells (i, j-1) and (i, j), on y = y[j]
    below, above = code[:, :-1], code[:, 1:]
    e_par = (V[1:, 1:-1] - V[:-1, 1:-1]) / hx[:, None]
    d_perp = _normal_d(ey[:, :-1], ey[:, 1:], below, above, eps[:, :-1], eps[:, 1:])
    length = np.broadcast_to(hx[:, None], below.shape)
    _accumulate(out, below, above, e_par, d_perp, length)

    # vertical edges between cells (i-1, j) and (i, j), on x = x[i]
    left, right = code[:-1, :], code[1:, :]
    e_par = (V[1:-1, 1:] - V[1:-1, :-1]) / hy[None, :]
    d_perp = _normal_d(ex[:-1, :], ex[1:, :], left, right, eps[:-1, :], eps[1:, :])
    length = np.broadcast_to(hy[None, :], left.shape)
    _accumulate(out, left, right, e_par, d_perp, length)
    return out


def _accumulate(out, code_a, code_b, e_par, d_perp, length):
    for pair, kind in _PAIR_KIND.items():
        a, b = tuple(pair)
        mask = ((code_a == a) & (code_b == b)) | ((code_a == b) & (code_b == a))
        if mask.any():
            out[kind]["E2"] += float(np.sum(e_par[mask] ** 2 * length[mask]))
            out[kind]["D2"] += float(np.sum(d_perp[mask] ** 2 * length[mask]))


def participation_from_solution(sol: FieldSolution, layers: dict = None) -> ParticipationResult:
    layers = layers or INTERFACE_LAYERS
    if sol.energy <= 0:
        raise SolverError("field solution stores no energy")
    integrals = surface_integrals(sol)

    p = {}
    for kind in ("SA", "SM", "MA"):
        layer = layers[kind]
        t = layer["thickness_nm"] * 1e-9
        eps_i = layer["eps_r"]
        energy = t * (epsilon_0 * eps_i * integrals[kind]["E2"] / 2.0
                      + integrals[kind]["D2"] / (2.0 * epsilon_0 * eps_i))
        p[kind] = energy / sol.energy

    loss = sum(p[kind] * layers[kind]["tan_delta"] for kind in p)
    Q_pr = 1.0 / loss if loss > 0 else math.inf
    logger.debug("participation SA=%.3e SM=%.3e MA=%.3e Q_pr=%.4g", p["SA"], p["SM"], p["MA"], Q_pr)
    return ParticipationResult(p_SA=p["SA"], p_SM=p["SM"], p_MA=p["MA"], Q_pr=Q_pr)


def participation_q(x: CrossSection, layers: dict = None, solution: FieldSolution = None,
                    solver: dict = None) -> ParticipationResult:
    """
    Participation ratios and the resulting Q_pr for the resonator CPW,
    center conductor at 1 V. Reuses `solution` when given.
    """
    if solution is None:
        cfg = {**SOLVER_CONFIG, **(solver or {})}
        regions = cross_section_regions(x, cfg["lateral_margin"], cfg["vacuum_margin_um"])
        grid = build_grid(regions, cfg["edge_cell_um"], cfg["growth"], cfg["max_cell_um"])
        solution = solve_es(regions, grid, {RESONATOR: 1.0}, cfg)
    return participation_from_solution(solution, layers)
