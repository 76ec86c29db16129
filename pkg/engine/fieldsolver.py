"""
2D finite-difference electrostatics on a boundary-aligned tensor grid.

Node potentials, cell permittivities, box-integration (finite volume)
stencil. Conductor nodes are fixed at their drive potential and take
precedence over the outer V = 0 box, so a box face may coincide with a
conductor surface. Charges per unit length come from the residual of the
full stiffness matrix summed over each conductor's nodes.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.constants import epsilon_0, mu_0
from scipy.sparse.linalg import cg, splu

from config.design import SOLVER_CONFIG
from engine.conformal import CrossSection, LineParams, Method
from engine.errors import ConvergenceError, GeometryError, SolverError
from engine.geometry import (
    FEEDLINE, RESONATOR, GridSpec, RegionMap, build_grid, coupling_regions,
    cross_section_regions,
)

logger = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# Discrete operator
# ---------------------------------------------------------------------------

def node_index(grid: GridSpec) -> np.ndarray:
    """Unknown number of every node (i, j); periodic x folds column nx onto 0."""
    nxn = grid.nx if grid.periodic_x else grid.nx + 1
    idx = np.arange(nxn * (grid.ny + 1)).reshape(nxn, grid.ny + 1)
    if grid.periodic_x:
        idx = np.vstack([idx, idx[:1]])
    return idx


def stiffness(grid: GridSpec, eps: np.ndarray) -> sp.csr_matrix:
    """
    Symmetric box-integration matrix of -div(eps grad V), dimensionless.

    x-edge (i,j)-(i+1,j): (eps[i,j-1] hy[j-1] + eps[i,j] hy[j]) / (2 hx[i])
    y-edge (i,j)-(i,j+1): (eps[i-1,j] hx[i-1] + eps[i,j] hx[i]) / (2 hy[j])
    """
    hx, hy = grid.hx, grid.hy
    idx = node_index(grid)

    eps_y = np.pad(eps, ((0, 0), (1, 1)))
    hy_p = np.concatenate(([0.0], hy, [0.0]))
    ax = (eps_y[:, :-1] * hy_p[:-1] + eps_y[:, 1:] * hy_p[1:]) / (2.0 * hx[:, None])

    if grid.periodic_x:
        eps_x = np.vstack([eps[-1:], eps, eps[:1]])
        hx_p = np.concatenate(([hx[-1]], hx, [hx[0]]))
    else:
        eps_x = np.pad(eps, ((1, 1), (0, 0)))
        hx_p = np.concatenate(([0.0], hx, [0.0]))
    ay = (eps_x[:-1, :] * hx_p[:-1, None] + eps_x[1:, :] * hx_p[1:, None]) / (2.0 * hy[None, :])
    if grid.periodic_x:
        ay = ay[:-1]

    p = np.concatenate([idx[:-1, :].ravel(), idx[:ay.shape[0], :-1].ravel()])
    q = np.concatenate([idx[1:, :].ravel(), idx[:ay.shape[0], 1:].ravel()])
    a = np.concatenate([ax.ravel(), ay.ravel()])

    n = grid.n_nodes
    rows = np.concatenate([p, q, p, q])
    cols = np.concatenate([p, q, q, p])
    vals = np.concatenate([a, a, -a, -a])
    return sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()


def node_conductors(grid: GridSpec, cond: np.ndarray) -> np.ndarray:
    """Conductor id per unknown (-1 if none); raises if two conductors share a node."""
    padded = np.pad(cond, 1, constant_values=-1)
    if grid.periodic_x:
        padded[0, 1:-1] = cond[-1]
        padded[-1, 1:-1] = cond[0]
    neighbours = np.stack([padded[:-1, :-1], padded[1:, :-1], padded[:-1, 1:], padded[1:, 1:]])
    node_cond = neighbours.max(axis=0)
    clash = ((neighbours >= 0) & (neighbours != node_cond[None])).any(axis=0)
    if clash.any():
        i, j = np.argwhere(clash)[0]
        raise GeometryError(f"two conductors touch at node x={grid.x[i]:.6g}, y={grid.y[j]:.6g} µm")
    if grid.periodic_x:
        node_cond = node_cond[:-1]
    return node_cond.ravel()


def box_nodes(grid: GridSpec) -> np.ndarray:
    nxn = grid.nx if grid.periodic_x else grid.nx + 1
    mask = np.zeros((nxn, grid.ny + 1), dtype=bool)
    mask[:, 0] = mask[:, -1] = True
    if not grid.periodic_x:
        mask[0, :] = mask[-1, :] = True
    return mask.ravel()


def nodal_field(grid: GridSpec, values: np.ndarray) -> np.ndarray:
    """Unknown vector -> (nx+1, ny+1) node array."""
    return values[node_index(grid)]


# ---------------------------------------------------------------------------
# Results
# ---------------------------------------------------------------------------

@dataclass(eq=False)
class FieldSolution:
    regions: RegionMap
    grid: GridSpec
    potential: np.ndarray          # (nx+1, ny+1) V
    eps: np.ndarray                # (nx, ny) relative permittivity per cell
    conductor: np.ndarray          # (nx, ny) conductor id per cell, -1 outside
    material: np.ndarray           # (nx, ny) material code
    charges: dict                  # conductor id -> C/m
    boundary_charge: float         # C/m collected by the outer box
    energy: float                  # J/m
    residual: float
    drive: dict = field(default_factory=dict)

    @property
    def charge_balance(self) -> float:
        """Gauss check: relative size of (sum of charges + box flux)."""
        total = sum(self.charges.values()) + self.boundary_charge
        scale = max(abs(q) for q in list(self.charges.values()) + [self.boundary_charge])
        return abs(total) / scale if scale > 0 else 0.0


@dataclass(frozen=True)
class CapMatrix:
    """Maxwell capacitance entries per unit length (F/m)."""
    C_rr: float
    C_ff: float
    C_rf: float
    asymmetry: float = 0.0

    def __post_init__(self):
        if not (self.C_rr > 0 and self.C_ff > 0):
            raise SolverError(f"self capacitances must be positive: {self.C_rr}, {self.C_ff}")

    @property
    def C_fr(self) -> float:
        return self.C_rf

    @property
    def kappa(self) -> float:
        return self.C_rf / np.sqrt(self.C_rr * self.C_ff)


# ---------------------------------------------------------------------------
# Solver
# ---------------------------------------------------------------------------

class ElectrostaticSystem:
    """
    Assembled operator for one (RegionMap, GridSpec) pair. Repeated solves
    with different drives share one sparse LU factorization.
    """

    def __init__(self, regions: RegionMap, grid: GridSpec, solver: dict = None):
        self.cfg = {**SOLVER_CONFIG, **(solver or {})}
        if self.cfg["linear_solver"] not in ("direct", "cg"):
            raise GeometryError(f"unknown linear solver {self.cfg['linear_solver']!r}")
        grid.check_aligned(regions)
        self.regions = regions
        self.grid = grid
        self.eps, self.cond, self.material = regions.paint(grid.x, grid.y)
        self.K = stiffness(grid, self.eps)
        self.node_cond = node_conductors(grid, self.cond)
        self.on_box = box_nodes(grid)
        self.fixed = (self.node_cond >= 0) | self.on_box
        self.free = ~self.fixed
        self.K_ff = self.K[self.free][:, self.free].tocsc()
        self.K_fd = self.K[self.free][:, self.fixed]
        self._lu = None

    def _solve_free(self, rhs: np.ndarray) -> np.ndarray:
        if not rhs.any():
            return np.zeros_like(rhs)
        if self.cfg["linear_solver"] == "direct":
            if self._lu is None:
                self._lu = splu(self.K_ff)
            return self._lu.solve(rhs)
        diag = self.K_ff.diagonal()
        precond = sp.diags(1.0 / diag)
        v, info = cg(self.K_ff, rhs, rtol=self.cfg["cg_rtol"],
                     maxiter=self.cfg["cg_maxiter"], M=precond)
        if info > 0:
            raise ConvergenceError(f"conjugate gradient stopped after {info} iterations")
        if info < 0:
            raise SolverError("conjugate gradient breakdown")
        return v

    def solve(self, drive: dict) -> FieldSolution:
        unknown = set(drive) - set(self.regions.conductor_ids)
        if unknown:
            raise GeometryError(f"drive names conductors not in the layout: {sorted(unknown)}")

        V = np.zeros(self.grid.n_nodes)
        for cid, volts in drive.items():
            V[self.node_cond == cid] = volts
        rhs = -self.K_fd @ V[self.fixed]
        V[self.free] = self._solve_free(rhs)

        scale = np.linalg.norm(rhs)
        residual = np.linalg.norm(self.K_ff @ V[self.free] - rhs) / scale if scale > 0 else 0.0
        if residual > self.cfg["residual_tol"]:
            raise ConvergenceError(f"relative residual {residual:.3e} above {self.cfg['residual_tol']:.1e}")

        flux = epsilon_0 * (self.K @ V)
        charges = {cid: float(flux[self.node_cond == cid].sum())
                   for cid in self.regions.conductor_ids}
        boundary = float(flux[self.on_box & (self.node_cond < 0)].sum())
        energy = 0.5 * epsilon_0 * float(V @ (self.K @ V))

        logger.debug("solve %s: residual %.2e, energy %.4e J/m", drive, residual, energy)
        return FieldSolution(
            regions=self.regions, grid=self.grid, potential=nodal_field(self.grid, V),
            eps=self.eps, conductor=self.cond, material=self.material,
            charges=charges, boundary_charge=boundary, energy=energy,
            residual=residual, drive=dict(drive),
        )


def solve_es(regions: RegionMap, grid: GridSpec, drive: dict, solver: dict = None) -> FieldSolution:
    """Solve div(eps grad V) = 0 with conductors held at `drive` (others at 0 V)."""
    return ElectrostaticSystem(regions, grid, solver).solve(drive)


def cap_matrix(regions: RegionMap, grid: GridSpec, solver: dict = None) -> CapMatrix:
    """
    Maxwell matrix of conductors 1 and 2 from two unit-potential solves.
    The off-diagonal estimates are averaged; their relative difference is
    stored as `asymmetry` and must stay under the configured limit.
    """
    ids = set(regions.conductor_ids)
    if not {RESONATOR, FEEDLINE} <= ids:
        raise GeometryError("cap_matrix needs conductors 1 and 2 in the layout")
    system = ElectrostaticSystem(regions, grid, solver)
    on_r = system.solve({RESONATOR: 1.0})
    on_f = system.solve({FEEDLINE: 1.0})

    c_rf, c_fr = on_r.charges[FEEDLINE], on_f.charges[RESONATOR]
    mean = 0.5 * (c_rf + c_fr)
    asym = abs(c_rf - c_fr) / abs(mean) if mean != 0 else 0.0
    if asym >= system.cfg["max_asymmetry"]:
        raise SolverError(f"capacitance matrix asymmetry {asym:.2%} exceeds "
                          f"{system.cfg['max_asymmetry']:.0%}")
    if asym > 1e-6:
        logger.info("capacitance matrix asymmetry before averaging: %.3e", asym)
    return CapMatrix(C_rr=on_r.charges[RESONATOR], C_ff=on_f.charges[FEEDLINE],
                     C_rf=mean, asymmetry=asym)


def _grid_for(regions: RegionMap, solver: dict = None) -> GridSpec:
    cfg = {**SOLVER_CONFIG, **(solver or {})}
    return build_grid(regions, edge_cell=cfg["edge_cell_um"], growth=cfg["growth"],
                      max_cell=cfg["max_cell_um"])


def line_params_fd(x: CrossSection, solver: dict = None, grid: GridSpec = None) -> LineParams:
    """
    C from the dielectric solve; L_g = mu0 eps0 / C_vac from the same layout
    with every substrate set to vacuum.
    """
    cfg = {**SOLVER_CONFIG, **(solver or {})}
    regions = cross_section_regions(x, cfg["lateral_margin"], cfg["vacuum_margin_um"])
    grid = grid or _grid_for(regions, cfg)

    C = solve_es(regions, grid, {RESONATOR: 1.0}, cfg).charges[RESONATOR]
    C_vac = solve_es(regions.with_vacuum(), grid, {RESONATOR: 1.0}, cfg).charges[RESONATOR]
    if C <= 0 or C_vac <= 0:
        raise SolverError(f"non-positive capacitance C={C}, C_vac={C_vac}")

    logger.info("fd line params at h_s=%.4g µm (%s): C=%.5e F/m, C_vac=%.5e F/m",
                x.h_s, x.facing.value, C, C_vac)
    return LineParams(L_g=mu_0 * epsilon_0 / C_vac, C=C, method=Method.FIELD_SOLVER,
                      extras={"C_vac": C_vac, "grid": grid.summary()})


def coupling_cap_matrix(x: CrossSection, w_f: float, s_f: float, d: float,
                        solver: dict = None) -> CapMatrix:
    cfg = {**SOLVER_CONFIG, **(solver or {})}
    regions = coupling_regions(x, w_f, s_f, d, cfg["lateral_margin"], cfg["vacuum_margin_um"])
    return cap_matrix(regions, _grid_for(regions, cfg), cfg)
