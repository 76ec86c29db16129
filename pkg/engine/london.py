"""
Magnetoquasistatic London solve for the supercurrent J_z in thin films,
kinetic inductance from the current distribution, and penetration-depth
extraction from measured frequencies.

Working units: lengths in µm, A~ = A_z / (mu0 I), J~ = J_z [A/µm²] / I.
Each electrical node c carries a drive constant v_c (same units as A~), so
that on its films J~ = (v_c - A~) / lam². With K the vacuum box-integration
stiffness, M the nodal film area and s_c the net current of c (in units of
I), the symmetric system is

    (K + M/lam²) A~ - sum_c m_c v_c / lam² = 0
    -m_c^T A~ / lam² + a_c v_c / lam²      = s_c

with m_c the film area of c at free nodes and a_c its total film area.
Both row blocks scale like (film area)/lam².
"""

import functools
import logging
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
from scipy.constants import mu_0
from scipy.optimize import brentq
from scipy.sparse.linalg import norm as spnorm, spsolve

from config.design import LONDON_CONFIG, SOLVER_CONFIG
from engine.conformal import CrossSection
from engine.errors import ConvergenceError, FitError, GeometryError, UnderResolvedError
from engine.fieldsolver import box_nodes, nodal_field, node_conductors, stiffness
from engine.geometry import GROUND, RESONATOR, GridSpec, RegionMap, build_grid, cross_section_regions

logger = logging.getLogger(__name__)

_RESOLUTION_TOL = 1e-9


@dataclass(frozen=True)
class LondonConfig:
    lambda_nm: float = 83.0
    current: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.lambda_nm) and self.lambda_nm > 0):
            raise GeometryError(f"penetration depth must be positive, got {self.lambda_nm} nm")
        if self.current == 0 or not np.isfinite(self.current):
            raise GeometryError("drive current must be non-zero")

    @property
    def lambda_um(self) -> float:
        return self.lambda_nm * 1e-3


@dataclass(eq=False)
class CurrentSolution:
    regions: RegionMap
    grid: GridSpec
    cfg: LondonConfig
    A_z: np.ndarray             # (nx+1, ny+1) Wb/m
    J_z: np.ndarray             # (nx+1, ny+1) A/m², zero off the films
    sc_area: np.ndarray         # (nx+1, ny+1) µm² of film attached to each node
    node_conductor: np.ndarray  # (nx+1, ny+1) conductor id, -1 off the films
    currents: dict              # conductor id -> A
    drive_constants: dict       # conductor id -> J0 in A/m²
    magnetic_inductance: float  # H/m from the field energy outside the London term
    residual: float = 0.0
    extras: dict = field(default_factory=dict)


def film_area(grid: GridSpec, cond: np.ndarray) -> np.ndarray:
    """Nodal dual area of superconducting cells (a quarter cell per corner), µm²."""
    cell = np.where(cond >= 0, np.outer(grid.hx, grid.hy) / 4.0, 0.0)
    area = np.zeros((grid.nx + 1, grid.ny + 1))
    area[:-1, :-1] += cell
    area[1:, :-1] += cell
    area[:-1, 1:] += cell
    area[1:, 1:] += cell
    if grid.periodic_x:
        area[0] += area[-1]
        area = area[:-1]
    return area.ravel()


def check_resolution(regions: RegionMap, grid: GridSpec, cfg: LondonConfig,
                     min_cells: int = None):
    """Films need min_cells through their thickness and cells <= lambda/2 at their edges."""
    min_cells = LONDON_CONFIG["min_film_cells"] if min_cells is None else min_cells
    limit = cfg.lambda_um / 2.0 * (1.0 + _RESOLUTION_TOL)
    for film in regions.films:
        inside = (grid.y >= film.y0 - _RESOLUTION_TOL) & (grid.y <= film.y1 + _RESOLUTION_TOL)
        rows = np.flatnonzero(inside)
        n_cells = len(rows) - 1
        if n_cells < min_cells:
            raise UnderResolvedError(
                f"film {film.tag or film.conductor} has {n_cells} cells through its thickness")
        if np.diff(grid.y[rows]).max() > limit:
            raise UnderResolvedError(
                f"film {film.tag or film.conductor} cells exceed lambda/2 = {cfg.lambda_um / 2:.4g} µm")
        for edge in (film.x0, film.x1):
            if edge in (regions.x_min, regions.x_max):
                continue
            i = int(np.argmin(np.abs(grid.x - edge)))
            neighbours = grid.hx[max(i - 1, 0):i + 1]
            if neighbours.max() > limit:
                raise UnderResolvedError(
                    f"cells at film edge x={edge:.6g} µm exceed lambda/2 = {cfg.lambda_um / 2:.4g} µm")


def backward_error(system: sp.spmatrix, x: np.ndarray, rhs: np.ndarray) -> float:
    """Normwise backward error |Sx - b| / (|S| |x| + |b|), infinity norms."""
    scale = spnorm(system, np.inf) * np.abs(x).max() + np.abs(rhs).max()
    return float(np.abs(system @ x - rhs).max() / scale) if scale > 0 else 0.0


def london_grid(regions: RegionMap, cfg: LondonConfig, solver: dict = None) -> GridSpec:
    s = {**SOLVER_CONFIG, **(solver or {})}
    half_lambda = cfg.lambda_um / 2.0
    # stay under lambda/2 after grid rounding
    target = 0.9 * half_lambda
    return build_grid(regions, edge_cell=min(s["edge_cell_um"], target), growth=s["growth"],
                      max_cell=s["max_cell_um"], film_cell=target)


def solve_current(regions: RegionMap, grid: GridSpec, cfg: LondonConfig,
                  net_currents: dict = None) -> CurrentSolution:
    """
    Solve for A_z and J_z with +I on the center conductor and -I on the
    ground group; other conductors carry no net current. The split of the
    return current inside the ground group is part of the solution.
    """
    grid.check_aligned(regions)
    check_resolution(regions, grid, cfg)

    ids = regions.conductor_ids
    if net_currents is None:
        net_currents = {cid: 0.0 for cid in ids}
        net_currents[RESONATOR] = 1.0
        net_currents[GROUND] = -1.0
    if abs(sum(net_currents.values())) > 1e-12:
        raise GeometryError("net currents must sum to zero")

    lam2 = cfg.lambda_um ** 2
    _, cond, _ = regions.paint(grid.x, grid.y)
    K = stiffness(grid, np.ones((grid.nx, grid.ny)))
    node_cond = node_conductors(grid, cond)
    area = film_area(grid, cond)
    free = ~box_nodes(grid)
    n_free = int(free.sum())

    K_ff = K[free][:, free]
    M_ff = sp.diags(area[free])
    cols, areas, rhs_tail = [], [], []
    for cid in ids:
        on_c = (node_cond == cid)
        cols.append(sp.csc_matrix(-(area * on_c)[free][:, None]))
        areas.append(area[on_c].sum())
        rhs_tail.append(net_currents.get(cid, 0.0))
    if min(areas) <= 0:
        raise UnderResolvedError("a conductor has no film area on the grid")

    B = sp.hstack(cols).tocsc() / lam2
    D = sp.diags(np.asarray(areas) / lam2)
    system = sp.bmat([[K_ff + M_ff / lam2, B], [B.T, D]], format="csc")
    rhs = np.concatenate([np.zeros(n_free), rhs_tail])
    sol = spsolve(system, rhs)

    residual = backward_error(system, sol, rhs)
    if not np.isfinite(residual) or residual > SOLVER_CONFIG["residual_tol"]:
        raise ConvergenceError(f"London solve backward error {residual:.3e}")

    A_t = np.zeros(grid.n_nodes)
    A_t[free] = sol[:n_free]
    v = dict(zip(ids, sol[n_free:]))

    J_t = np.zeros(grid.n_nodes)
    for cid in ids:
        on_c = node_cond == cid
        J_t[on_c] = (v[cid] - A_t[on_c]) / lam2
    J_t[area == 0] = 0.0
    j0 = {cid: value / lam2 for cid, value in v.items()}

    I = cfg.current
    currents = {cid: float(I * np.sum(area[node_cond == cid] * J_t[node_cond == cid])) for cid in ids}
    L_mag = mu_0 * float(A_t @ (K @ A_t))

    logger.debug("London solve lambda=%.4g nm: residual %.2e, currents %s", cfg.lambda_nm, residual, currents)
    return CurrentSolution(
        regions=regions, grid=grid, cfg=cfg,
        A_z=nodal_field(grid, mu_0 * I * A_t),
        J_z=nodal_field(grid, I * J_t * 1e12),
        sc_area=nodal_field(grid, area),
        node_conductor=nodal_field(grid, node_cond),
        currents=currents,
        drive_constants={cid: I * v * 1e12 for cid, v in j0.items()},
        magnetic_inductance=L_mag,
        residual=float(residual),
    )


def _unique_nodes(sol: CurrentSolution, arr: np.ndarray) -> np.ndarray:
    """Drop the duplicated periodic column before summing over nodes."""
    return arr[:-1] if sol.grid.periodic_x else arr


def kinetic_inductance_from_arrays(J_z: np.ndarray, sc_area_um2: np.ndarray,
                                   lambda_nm: float, current: float) -> float:
    """L_k = mu0 lambda² / I² * integral of J_z² over the films (H/m)."""
    lam = lambda_nm * 1e-9
    return float(mu_0 * lam ** 2 / current ** 2 * np.sum(sc_area_um2 * 1e-12 * J_z ** 2))


def kinetic_inductance(sol: CurrentSolution, cfg: LondonConfig = None) -> float:
    cfg = cfg or sol.cfg
    return kinetic_inductance_from_arrays(_unique_nodes(sol, sol.J_z), _unique_nodes(sol, sol.sc_area),
                                          cfg.lambda_nm, cfg.current)


def total_inductance(sol: CurrentSolution) -> float:
    """Magnetic plus kinetic energy per I² (H/m)."""
    return sol.magnetic_inductance + kinetic_inductance(sol)


def qubit_plane_fraction(sol: CurrentSolution) -> float:
    """
    Share of the squared-current integral on the opposing ground plane that
    lies directly opposite the center conductor.
    """
    section = sol.regions.meta.get("section")
    plane_y = sol.regions.meta.get("qubit_plane_y")
    if section is None or plane_y is None:
        raise GeometryError("layout has no qubit-tier plane")
    X, Y = np.meshgrid(sol.grid.x, sol.grid.y, indexing="ij")
    weight = sol.sc_area * sol.J_z ** 2
    plane = (sol.node_conductor == GROUND) & (Y >= plane_y - 1e-9)
    facing = plane & (np.abs(X) <= section.w / 2.0 + 1e-9)
    total = _unique_nodes(sol, np.where(plane, weight, 0.0)).sum()
    return float(_unique_nodes(sol, np.where(facing, weight, 0.0)).sum() / total) if total > 0 else 0.0


def kinetic_inductance_for(x: CrossSection, lambda_nm: float, solver: dict = None) -> float:
    """Build the CPW layout, solve for J_z and integrate L_k."""
    cfg = LondonConfig(lambda_nm=lambda_nm)
    s = {**SOLVER_CONFIG, **(solver or {})}
    regions = cross_section_regions(x, s["lateral_margin"], s["vacuum_margin_um"])
    sol = solve_current(regions, london_grid(regions, cfg, s), cfg)
    L_k = kinetic_inductance(sol)
    logger.info("L_k(h_s=%.4g µm, lambda=%.4g nm) = %.4e H/m", x.h_s, lambda_nm, L_k)
    return L_k


# ---------------------------------------------------------------------------
# Penetration-depth fit
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Measurement:
    """One resonator: its cross-section, measured and no-kinetic model frequencies."""
    section: CrossSection
    f_meas: float
    f_model: float
    L_g: float
    name: str = ""


@dataclass(frozen=True)
class LambdaFit:
    lambda_nm: float
    resolvable: bool
    mean_discrepancy_hz: float
    evaluations: int


KineticModel = Callable[[CrossSection, float], float]


def fit_lambda(measurements: list, kinetic_model: KineticModel = None,
               bracket: tuple = None, xtol: float = None) -> LambdaFit:
    """
    Penetration depth that zeroes the mean of f_model(lambda) - f_meas,
    where f_model scales the no-kinetic frequency by sqrt(L_g / (L_g + L_k)).
    """
    if not measurements:
        raise FitError("fit_lambda needs at least one measurement")
    lo, hi = bracket or LONDON_CONFIG["lambda_bracket_nm"]
    xtol = LONDON_CONFIG["lambda_xtol_nm"] if xtol is None else xtol
    model = functools.lru_cache(maxsize=None)(kinetic_model or kinetic_inductance_for)
    history = []

    def discrepancy(lam: float) -> float:
        shifts = [m.f_model * np.sqrt(m.L_g / (m.L_g + model(m.section, float(lam)))) - m.f_meas
                  for m in measurements]
        value = float(np.mean(shifts))
        history.append((lam, value))
        return value

    g_lo = discrepancy(lo)
    if g_lo <= 0:
        logger.warning("no kinetic inductance resolvable: model already at or below measurement "
                       "(mean discrepancy %.4g Hz)", g_lo)
        return LambdaFit(lambda_nm=lo, resolvable=False, mean_discrepancy_hz=g_lo,
                         evaluations=len(history))
    g_hi = discrepancy(hi)
    if g_hi > 0:
        raise FitError(f"no sign change on [{lo}, {hi}] nm: kinetic inductance cannot "
                       f"explain a mean discrepancy of {g_lo:.4g} Hz")

    lam = brentq(discrepancy, lo, hi, xtol=xtol)
    seen = sorted(history)
    values = [v for _, v in seen]
    if any(b > a for a, b in zip(values, values[1:])):
        logger.warning("frequency discrepancy is not monotone in lambda; fit may be ambiguous")
    logger.info("fitted lambda = %.2f nm after %d evaluations", lam, len(history))
    return LambdaFit(lambda_nm=float(lam), resolvable=True,
                     mean_discrepancy_hz=discrepancy(lam), evaluations=len(history))
