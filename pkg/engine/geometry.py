"""
Region maps and boundary-aligned tensor grids for the 2D solvers.

A RegionMap is an ordered list of material rectangles painted over a vacuum
background inside an outer box; later rectangles win where they overlap.
The grid builder places a grid line on every rectangle edge and fills each
interval with geometrically graded cells.
"""

import logging
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.integrate import cumulative_trapezoid

from config.design import SOLVER_CONFIG
from engine.conformal import CrossSection, Facing
from engine.errors import ConfigError, GeometryError

logger = logging.getLogger(__name__)

GROUND = 0
RESONATOR = 1
FEEDLINE = 2

VACUUM = "vacuum"
SUBSTRATE = "substrate"
CONDUCTOR = "conductor"

# material codes on the cell arrays
CODE_VACUUM, CODE_SUBSTRATE, CODE_METAL = 0, 1, 2

_ALIGN_TOL = 1e-9


@dataclass(frozen=True)
class Rect:
    x0: float
    x1: float
    y0: float
    y1: float
    material: str
    eps_r: float = 1.0
    conductor: int = -1
    tag: str = ""

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise GeometryError(f"empty rectangle {self}")
        if self.material not in (VACUUM, SUBSTRATE, CONDUCTOR):
            raise GeometryError(f"unknown material {self.material!r}")
        if self.material == CONDUCTOR and self.conductor < 0:
            raise GeometryError("conductor rectangles need a conductor id")

    @property
    def thickness(self) -> float:
        return self.y1 - self.y0

    def overlaps(self, other: "Rect") -> bool:
        return (min(self.x1, other.x1) > max(self.x0, other.x0)
                and min(self.y1, other.y1) > max(self.y0, other.y0))

    def mirrored(self, axis: float = 0.0) -> "Rect":
        return replace(self, x0=2 * axis - self.x1, x1=2 * axis - self.x0)


@dataclass(frozen=True)
class RegionMap:
    """Material layout inside the outer box [x_min, x_max] x [y_min, y_max] (µm)."""
    rects: tuple
    x_min: float
    x_max: float
    y_min: float
    y_max: float
    periodic_x: bool = False
    meta: dict = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        object.__setattr__(self, "rects", tuple(self.rects))
        conductors = [r for r in self.rects if r.material == CONDUCTOR]
        if not any(r.conductor == GROUND for r in conductors):
            raise GeometryError("the ground group (conductor 0) is empty")
        for i, a in enumerate(conductors):
            for b in conductors[i + 1:]:
                if a.conductor != b.conductor and a.overlaps(b):
                    raise GeometryError(f"conductors {a.conductor} and {b.conductor} overlap")

    @property
    def conductor_ids(self) -> list[int]:
        return sorted({r.conductor for r in self.rects if r.material == CONDUCTOR})

    @property
    def films(self) -> list[Rect]:
        return [r for r in self.rects if r.material == CONDUCTOR]

    def x_edges(self) -> np.ndarray:
        xs = [self.x_min, self.x_max]
        for r in self.rects:
            xs.extend(v for v in (r.x0, r.x1) if self.x_min < v < self.x_max)
        return np.unique(np.round(xs, 12))

    def y_edges(self) -> np.ndarray:
        ys = [self.y_min, self.y_max]
        for r in self.rects:
            ys.extend(v for v in (r.y0, r.y1) if self.y_min < v < self.y_max)
        return np.unique(np.round(ys, 12))

    def with_vacuum(self) -> "RegionMap":
        """Same layout with every substrate replaced by vacuum."""
        rects = [replace(r, eps_r=1.0) if r.material == SUBSTRATE else r for r in self.rects]
        return replace(self, rects=tuple(rects))

    def mirror(self, axis: float = 0.0) -> "RegionMap":
        """Reflect the layout about the vertical line x = axis."""
        return replace(self, rects=tuple(r.mirrored(axis) for r in self.rects),
                       x_min=2 * axis - self.x_max, x_max=2 * axis - self.x_min)

    def paint(self, x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Cell arrays (eps_r, conductor id, material code), shape (nx, ny)."""
        xc = 0.5 * (x[:-1] + x[1:])
        yc = 0.5 * (y[:-1] + y[1:])
        X, Y = np.meshgrid(xc, yc, indexing="ij")
        eps = np.ones(X.shape)
        cond = np.full(X.shape, -1, dtype=int)
        code = np.full(X.shape, CODE_VACUUM, dtype=int)
        for r in self.rects:
            mask = (X > r.x0) & (X < r.x1) & (Y > r.y0) & (Y < r.y1)
            if r.material == CONDUCTOR:
                eps[mask] = 1.0
                cond[mask] = r.conductor
                code[mask] = CODE_METAL
            else:
                eps[mask] = r.eps_r
                cond[mask] = -1
                code[mask] = CODE_SUBSTRATE if r.material == SUBSTRATE and r.eps_r != 1.0 \
                    else CODE_VACUUM
        return eps, cond, code


@dataclass(frozen=True, eq=False)
class GridSpec:
    """Tensor-product grid lines (µm) plus the refinement knobs that built them."""
    x: np.ndarray
    y: np.ndarray
    edge_cell: float = SOLVER_CONFIG["edge_cell_um"]
    growth: float = SOLVER_CONFIG["growth"]
    max_cell: float = SOLVER_CONFIG["max_cell_um"]
    periodic_x: bool = False

    @property
    def nx(self) -> int:
        return len(self.x) - 1

    @property
    def ny(self) -> int:
        return len(self.y) - 1

    @property
    def hx(self) -> np.ndarray:
        return np.diff(self.x)

    @property
    def hy(self) -> np.ndarray:
        return np.diff(self.y)

    @property
    def n_nodes(self) -> int:
        return (self.nx if self.periodic_x else self.nx + 1) * (self.ny + 1)

    def summary(self) -> str:
        return (f"{self.nx}x{self.ny} cells, min cell {min(self.hx.min(), self.hy.min()):.4g} um, "
                f"growth {self.growth:g}, box x[{self.x[0]:.6g},{self.x[-1]:.6g}] "
                f"y[{self.y[0]:.6g},{self.y[-1]:.6g}] um")

    def refined(self) -> "GridSpec":
        """Insert a grid line at every cell midpoint (2x uniform refinement)."""
        def _split(v):
            out = np.empty(2 * len(v) - 1)
            out[0::2] = v
            out[1::2] = 0.5 * (v[:-1] + v[1:])
            return out
        return replace(self, x=_split(self.x), y=_split(self.y),
                       edge_cell=self.edge_cell / 2)

    def check_aligned(self, regions: RegionMap):
        """Every material boundary must sit on a grid line."""
        for name, lines, edges in (("x", self.x, regions.x_edges()), ("y", self.y, regions.y_edges())):
            scale = max(1.0, float(np.abs(lines).max()))
            nearest = np.abs(edges[:, None] - lines[None, :]).min(axis=1)
            bad = edges[nearest > _ALIGN_TOL * scale]
            if bad.size:
                raise GeometryError(f"{name} boundaries {bad[:5]} are not on grid lines")
        if not (np.isclose(self.x[0], regions.x_min) and np.isclose(self.x[-1], regions.x_max)
                and np.isclose(self.y[0], regions.y_min) and np.isclose(self.y[-1], regions.y_max)):
            raise GeometryError("grid does not span the outer box")
        if self.periodic_x != regions.periodic_x:
            raise GeometryError("grid and region map disagree on periodic x")


# ---------------------------------------------------------------------------
# Grid construction
# ---------------------------------------------------------------------------

def _fill_interval(a: float, b: float, h_a: float, h_b: float,
                   growth: float, h_max: float) -> np.ndarray:
    """
    Grid lines on [a, b] with cell sizes bounded by
    h(x) = min(h_a + (g-1)(x-a), h_b + (g-1)(b-x), h_max).
    Lines are placed at equal increments of the integral of 1/h, scaled so
    the end cells equal h_a and h_b and neighbours differ by `growth`.
    """
    length = b - a
    if length <= min(h_a, h_b, h_max):
        return np.array([a, b])

    g1 = growth - 1.0
    h_min = min(h_a, h_b)
    offsets = np.geomspace(h_min * 1e-3, length / 2.0, 1500)
    xs = np.unique(np.concatenate(([a, b, a + length / 2.0], a + offsets, b - offsets)))
    h = np.minimum.reduce([h_a + g1 * (xs - a), h_b + g1 * (b - xs),
                           np.full_like(xs, h_max)])
    cum = cumulative_trapezoid(1.0 / h, xs, initial=0.0) * (g1 / np.log(growth))
    n = max(1, int(np.ceil(cum[-1] - 1e-9)))
    lines = np.interp(np.arange(n + 1) * cum[-1] / n, cum, xs)
    lines[0], lines[-1] = a, b
    return lines


def _edge_demands(edges: np.ndarray, fine: set, edge_cell: float, coarse_cell: float) -> np.ndarray:
    return np.array([edge_cell if round(e, 12) in fine else coarse_cell for e in edges])


def _axis_lines(edges: np.ndarray, demands: np.ndarray, caps: np.ndarray,
                growth: float, max_cell: float) -> np.ndarray:
    parts = []
    for k in range(len(edges) - 1):
        a, b = edges[k], edges[k + 1]
        cap = min(max_cell, caps[k])
        lines = _fill_interval(a, b, min(demands[k], cap), min(demands[k + 1], cap), growth, cap)
        parts.append(lines if k == 0 else lines[1:])
    return np.concatenate(parts)


def build_grid(regions: RegionMap, edge_cell: float = None, growth: float = None,
               max_cell: float = None, film_cell: float = None) -> GridSpec:
    """
    Boundary-aligned grid for `regions`.

    Conductor edges get `edge_cell`; other material boundaries start at
    10 x edge_cell. Intervals through a film are capped at film_cell
    (default: a third of the thinnest film).
    """
    edge_cell = SOLVER_CONFIG["edge_cell_um"] if edge_cell is None else edge_cell
    growth = SOLVER_CONFIG["growth"] if growth is None else growth
    max_cell = SOLVER_CONFIG["max_cell_um"] if max_cell is None else max_cell
    if not (1.0 < growth <= 1.5):
        raise ConfigError(f"growth factor must lie in (1, 1.5], got {growth}")
    if edge_cell <= 0 or max_cell < edge_cell:
        raise ConfigError(f"need 0 < edge_cell <= max_cell, got {edge_cell}, {max_cell}")

    films = regions.films
    thinnest = min(r.thickness for r in films)
    film_cell = thinnest / 3.0 if film_cell is None else min(film_cell, thinnest / 3.0)
    edge_cell = min(edge_cell, film_cell)
    coarse = min(max_cell, 10.0 * edge_cell)

    x_edges, y_edges = regions.x_edges(), regions.y_edges()
    fine_x = {round(v, 12) for r in films for v in (r.x0, r.x1)} - {
        round(regions.x_min, 12), round(regions.x_max, 12)}
    fine_y = {round(v, 12) for r in films for v in (r.y0, r.y1)} - {
        round(regions.y_min, 12), round(regions.y_max, 12)}

    x_caps = np.full(len(x_edges) - 1, max_cell)
    y_caps = np.full(len(y_edges) - 1, max_cell)
    for k in range(len(y_edges) - 1):
        a, b = y_edges[k], y_edges[k + 1]
        if any(r.y0 <= a + _ALIGN_TOL and b <= r.y1 + _ALIGN_TOL for r in films):
            y_caps[k] = film_cell

    x = _axis_lines(x_edges, _edge_demands(x_edges, fine_x, edge_cell, coarse),
                    x_caps, growth, max_cell)
    y = _axis_lines(y_edges, _edge_demands(y_edges, fine_y, edge_cell, coarse),
                    y_caps, growth, max_cell)
    grid = GridSpec(x=x, y=y, edge_cell=edge_cell, growth=growth, max_cell=max_cell,
                    periodic_x=regions.periodic_x)
    logger.debug("built grid: %s", grid.summary())
    return grid


# ---------------------------------------------------------------------------
# Cross-section layouts
# ---------------------------------------------------------------------------

def _stack(x: CrossSection, x_min: float, x_max: float, vacuum_margin: float):
    """Substrates and the opposing chip; returns (rects, y_min, y_max)."""
    rects = [Rect(x_min, x_max, -x.h_b, 0.0, SUBSTRATE, eps_r=x.eps_r, tag="control_substrate")]
    gap_top = x.t + x.h_s
    if x.facing is Facing.METAL:
        rects.append(Rect(x_min, x_max, gap_top, gap_top + x.t, CONDUCTOR,
                          conductor=GROUND, tag="qubit_plane"))
        sub_bottom = gap_top + x.t
    else:
        sub_bottom = gap_top
    rects.append(Rect(x_min, x_max, sub_bottom, sub_bottom + x.h_t, SUBSTRATE,
                      eps_r=x.eps_r, tag="qubit_substrate"))
    return rects, -x.h_b - vacuum_margin, sub_bottom + x.h_t + vacuum_margin


def cross_section_regions(x: CrossSection, lateral_margin: float = None,
                          vacuum_margin: float = None) -> RegionMap:
    """Single CPW on the control tier: center conductor 1, ground group 0."""
    lateral_margin = SOLVER_CONFIG["lateral_margin"] if lateral_margin is None else lateral_margin
    vacuum_margin = SOLVER_CONFIG["vacuum_margin_um"] if vacuum_margin is None else vacuum_margin
    half = lateral_margin * x.pitch
    rects, y_min, y_max = _stack(x, -half, half, vacuum_margin)
    edge = x.w / 2.0 + x.s
    rects += [
        Rect(-half, -edge, 0.0, x.t, CONDUCTOR, conductor=GROUND, tag="ground_left"),
        Rect(-x.w / 2.0, x.w / 2.0, 0.0, x.t, CONDUCTOR, conductor=RESONATOR, tag="center"),
        Rect(edge, half, 0.0, x.t, CONDUCTOR, conductor=GROUND, tag="ground_right"),
    ]
    return RegionMap(rects=tuple(rects), x_min=-half, x_max=half, y_min=y_min, y_max=y_max,
                     meta={"section": x, "qubit_plane_y": x.t + x.h_s})


def coupling_regions(x: CrossSection, w_f: float, s_f: float, d: float,
                     lateral_margin: float = None, vacuum_margin: float = None) -> RegionMap:
    """
    Resonator and feedline side by side on the control tier. The resonator's
    right gap is followed by a ground strip of width d, then the feedline gap
    s_f and the feedline center w_f.
    """
    lateral_margin = SOLVER_CONFIG["lateral_margin"] if lateral_margin is None else lateral_margin
    vacuum_margin = SOLVER_CONFIG["vacuum_margin_um"] if vacuum_margin is None else vacuum_margin
    if min(w_f, s_f, d) <= 0:
        raise GeometryError(f"feedline geometry must be positive: w_f={w_f}, s_f={s_f}, d={d}")

    r_gap = x.w / 2.0 + x.s
    f_left = r_gap + d + s_f
    f_right = f_left + w_f
    span_left, span_right = -r_gap, f_right + s_f
    pad = lateral_margin * max(x.pitch, w_f + 2.0 * s_f)
    x_min, x_max = span_left - pad, span_right + pad

    rects, y_min, y_max = _stack(x, x_min, x_max, vacuum_margin)
    rects += [
        Rect(x_min, -r_gap, 0.0, x.t, CONDUCTOR, conductor=GROUND, tag="ground_left"),
        Rect(-x.w / 2.0, x.w / 2.0, 0.0, x.t, CONDUCTOR, conductor=RESONATOR, tag="center"),
        Rect(r_gap, r_gap + d, 0.0, x.t, CONDUCTOR, conductor=GROUND, tag="ground_strip"),
        Rect(f_left, f_right, 0.0, x.t, CONDUCTOR, conductor=FEEDLINE, tag="feedline"),
        Rect(span_right, x_max, 0.0, x.t, CONDUCTOR, conductor=GROUND, tag="ground_right"),
    ]
    return RegionMap(rects=tuple(rects), x_min=x_min, x_max=x_max, y_min=y_min, y_max=y_max,
                     meta={"section": x, "qubit_plane_y": x.t + x.h_s})
