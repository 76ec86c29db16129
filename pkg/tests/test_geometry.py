"""Tests for region maps and grid construction."""
import numpy as np
import pytest

from engine.errors import ConfigError, GeometryError
from engine.geometry import (
    CODE_METAL, CODE_SUBSTRATE, CODE_VACUUM, CONDUCTOR, FEEDLINE, GROUND, RESONATOR,
    SUBSTRATE, GridSpec, Rect, RegionMap, build_grid, coupling_regions, cross_section_regions,
)


# ── Rectangles and region maps ──────────────────────────────────

class TestRegionMap:
    def test_empty_rectangle_rejected(self):
        """Zero-width rectangles are refused."""
        with pytest.raises(GeometryError):
            Rect(1.0, 1.0, 0.0, 1.0, SUBSTRATE)

    def test_conductor_needs_id(self):
        """Conductor rectangles need a conductor id."""
        with pytest.raises(GeometryError):
            Rect(0.0, 1.0, 0.0, 1.0, CONDUCTOR)

    def test_ground_group_required(self):
        """Every layout needs a ground conductor."""
        rects = (Rect(0.0, 1.0, 0.0, 0.2, CONDUCTOR, conductor=RESONATOR),)
        with pytest.raises(GeometryError, match="ground"):
            RegionMap(rects=rects, x_min=-5, x_max=5, y_min=-5, y_max=5)

    def test_overlapping_conductors_rejected(self):
        """Distinct conductors may not overlap."""
        rects = (Rect(0.0, 1.0, 0.0, 0.2, CONDUCTOR, conductor=GROUND),
                 Rect(0.5, 2.0, 0.0, 0.2, CONDUCTOR, conductor=RESONATOR))
        with pytest.raises(GeometryError, match="overlap"):
            RegionMap(rects=rects, x_min=-5, x_max=5, y_min=-5, y_max=5)

    def test_cross_section_layout(self, section):
        """The CPW layout spans ten pitches each side with the expected conductors."""
        regions = cross_section_regions(section, lateral_margin=10.0, vacuum_margin=40.0)
        assert regions.conductor_ids == [GROUND, RESONATOR]
        assert regions.x_min == pytest.approx(-360.0)
        assert regions.y_min == pytest.approx(-320.0)
        assert regions.meta["qubit_plane_y"] == pytest.approx(8.15)
        tags = {r.tag for r in regions.rects}
        assert {"center", "ground_left", "ground_right", "qubit_plane"} <= tags

    def test_dielectric_facing_has_no_qubit_plane(self, dielectric_section):
        """Dielectric facing leaves out the opposing plane."""
        regions = cross_section_regions(dielectric_section)
        assert "qubit_plane" not in {r.tag for r in regions.rects}

    def test_coupling_layout(self, section):
        """The coupling layout places the feedline past the ground strip."""
        regions = coupling_regions(section, w_f=9.0, s_f=10.0, d=6.0)
        assert regions.conductor_ids == [GROUND, RESONATOR, FEEDLINE]
        feed = next(r for r in regions.rects if r.tag == "feedline")
        assert feed.x0 == pytest.approx(18.0 + 6.0 + 10.0)
        assert feed.x1 - feed.x0 == pytest.approx(9.0)

    def test_coupling_layout_rejects_bad_feedline(self, section):
        """A zero feedline gap is refused."""
        with pytest.raises(GeometryError):
            coupling_regions(section, w_f=9.0, s_f=0.0, d=6.0)

    def test_with_vacuum_clears_substrates(self, section):
        """with_vacuum sets every permittivity to one."""
        vac = cross_section_regions(section).with_vacuum()
        assert all(r.eps_r == 1.0 for r in vac.rects)

    def test_mirror_is_an_involution(self, section):
        """Mirroring twice restores the layout."""
        regions = cross_section_regions(section)
        twice = regions.mirror().mirror()
        assert twice.rects == regions.rects
        assert (twice.x_min, twice.x_max) == (regions.x_min, regions.x_max)

    def test_paint_codes(self, section):
        """Cells carry the permittivity, conductor and material of their region."""
        regions = cross_section_regions(section)
        grid = build_grid(regions, edge_cell=0.05, growth=1.4, max_cell=40.0)
        eps, cond, code = regions.paint(grid.x, grid.y)
        assert eps.shape == cond.shape == code.shape == (grid.nx, grid.ny)
        assert set(np.unique(code)) == {CODE_VACUUM, CODE_SUBSTRATE, CODE_METAL}
        assert np.all(eps[code == CODE_SUBSTRATE] == 11.45)
        assert np.all(cond[code != CODE_METAL] == -1)


# ── Grid construction ───────────────────────────────────────────

class TestBuildGrid:
    @pytest.fixture
    def regions(self, section):
        return cross_section_regions(section)

    def test_boundaries_on_grid_lines(self, regions):
        """Every material boundary is a grid line."""
        grid = build_grid(regions, edge_cell=0.05, growth=1.4, max_cell=40.0)
        grid.check_aligned(regions)

    def test_lines_strictly_increasing(self, regions):
        """Grid lines strictly increase."""
        grid = build_grid(regions, edge_cell=0.05, growth=1.4, max_cell=40.0)
        assert np.all(np.diff(grid.x) > 0)
        assert np.all(np.diff(grid.y) > 0)

    def test_film_resolved_in_thickness(self, regions):
        """Films get at least three cells through their thickness."""
        grid = build_grid(regions, edge_cell=0.05, growth=1.4, max_cell=40.0)
        inside = grid.y[(grid.y >= -1e-12) & (grid.y <= 0.15 + 1e-12)]
        assert len(inside) - 1 >= 3

    def test_cells_bounded(self, regions):
        """No cell exceeds max_cell."""
        grid = build_grid(regions, edge_cell=0.05, growth=1.4, max_cell=40.0)
        assert grid.hx.max() <= 40.0 + 1e-9
        assert grid.hy.max() <= 40.0 + 1e-9
        assert grid.hx.min() <= 0.05 * 1.001

    def test_grading_respects_growth(self, regions):
        """Neighbouring cells grow by about the growth factor at most."""
        grid = build_grid(regions, edge_cell=0.05, growth=1.25, max_cell=20.0)
        ratio = grid.hx[1:] / grid.hx[:-1]
        # adjacent cells inside one interval never jump by much more than the growth factor
        assert np.percentile(np.maximum(ratio, 1 / ratio), 95) < 1.4

    @pytest.mark.parametrize("growth", [1.0, 1.6])
    def test_growth_range(self, regions, growth):
        """Growth factors outside (1, 1.5] are refused."""
        with pytest.raises(ConfigError):
            build_grid(regions, edge_cell=0.05, growth=growth, max_cell=20.0)

    def test_edge_cell_above_max_rejected(self, regions):
        """edge_cell above max_cell is refused."""
        with pytest.raises(ConfigError):
            build_grid(regions, edge_cell=30.0, growth=1.25, max_cell=20.0)

    def test_refined_halves_every_cell(self, regions):
        """Refinement doubles the cell count on both axes."""
        grid = build_grid(regions, edge_cell=0.05, growth=1.4, max_cell=40.0)
        fine = grid.refined()
        assert fine.nx == 2 * grid.nx
        assert fine.ny == 2 * grid.ny
        np.testing.assert_allclose(fine.x[::2], grid.x)
        fine.check_aligned(regions)

    def test_misaligned_grid_rejected(self, regions):
        """A grid off the material boundaries is refused."""
        grid = build_grid(regions, edge_cell=0.05, growth=1.4, max_cell=40.0)
        shifted = GridSpec(x=grid.x + 1e-3, y=grid.y)
        with pytest.raises(GeometryError):
            shifted.check_aligned(regions)

    def test_periodic_node_count(self, parallel_plates):
        """Periodic grids fold the last column onto the first."""
        grid = build_grid(parallel_plates, edge_cell=0.5, growth=1.4, max_cell=5.0)
        assert grid.periodic_x
        assert grid.n_nodes == grid.nx * (grid.ny + 1)
