"""Tests for the ground-plane cutout optimisation."""
import numpy as np
import pytest

from engine.conformal import line_params
from engine.cutout import (
    MixInput, build_mix_input, cost, deviation_curve, effective_lc, golden_section, h_s_grid,
    optimize_gamma,
)
from engine.errors import GeometryError


@pytest.fixture
def mix(section):
    return build_mix_input(section, h_s_grid(6.0, 10.0, 0.25))


def _max_deviation(mix, gamma):
    return float(np.abs(deviation_curve(mix, gamma)["f_rel_deviation"]).max())


# ── Grid and inputs ─────────────────────────────────────────────

class TestInputs:
    def test_default_grid(self):
        """The default spacing grid runs 6 to 10 µm in 17 points."""
        grid = h_s_grid()
        assert grid[0] == 6.0 and grid[-1] == pytest.approx(10.0)
        assert len(grid) == 17

    def test_bad_grid(self):
        """A reversed range is refused."""
        with pytest.raises(GeometryError):
            h_s_grid(10.0, 6.0, 0.25)

    def test_tables_follow_facing(self, section, mix):
        """Metal and dielectric tables come from the matching closed forms."""
        assert mix.L_metal[8] == pytest.approx(line_params(section).L_g)
        assert mix.L_diel[8] == pytest.approx(line_params(section.with_(facing="dielectric")).L_g)

    def test_mismatched_tables(self):
        """Tables must share the spacing grid length."""
        with pytest.raises(GeometryError):
            MixInput(h_s=[1.0, 2.0, 3.0], L_metal=[1.0, 1.0], C_metal=[1.0] * 3,
                     L_diel=[1.0] * 3, C_diel=[1.0] * 3)

    def test_grid_must_increase(self):
        """The spacing grid must increase."""
        with pytest.raises(GeometryError):
            MixInput(h_s=[2.0, 1.0], L_metal=[1.0] * 2, C_metal=[1.0] * 2,
                     L_diel=[1.0] * 2, C_diel=[1.0] * 2)

    def test_kinetic_needs_model(self, section):
        """Kinetic tables need a kinetic model."""
        with pytest.raises(GeometryError):
            build_mix_input(section, [6.0, 8.0], include_kinetic=True)

    def test_kinetic_model_applied(self, section):
        """The kinetic model fills both L_k tables."""
        mix = build_mix_input(section, [6.0, 8.0], include_kinetic=True,
                              kinetic_model=lambda x, lam: 1e-9 * lam, lambda_nm=83.0)
        np.testing.assert_allclose(mix.Lk_metal, 83e-9)
        np.testing.assert_allclose(mix.Lk_diel, 83e-9)


# ── Mixing and cost ─────────────────────────────────────────────

class TestMixing:
    def test_linear_in_gamma(self, mix):
        """Effective L_g is the gamma-weighted mix of the two tables."""
        lc = effective_lc(mix, 0.3)
        for n, lp in enumerate(lc):
            assert lp.L_g == pytest.approx(0.7 * mix.L_metal[n] + 0.3 * mix.L_diel[n], rel=1e-14)
            assert lp.C == pytest.approx(0.7 * mix.C_metal[n] + 0.3 * mix.C_diel[n], rel=1e-14)

    def test_endpoints(self, mix):
        """gamma = 0 and 1 reproduce the pure tables."""
        metal = effective_lc(mix, 0.0)
        diel = effective_lc(mix, 1.0)
        assert metal[0].L_g == mix.L_metal[0]
        assert diel[-1].C == mix.C_diel[-1]

    def test_gamma_outside_unit_interval(self, mix):
        """gamma outside [0, 1] is refused."""
        with pytest.raises(GeometryError):
            cost(mix, 1.5)

    def test_cost_is_non_negative(self, mix):
        """The spacing-sensitivity cost is never negative."""
        assert all(cost(mix, g) >= 0 for g in np.linspace(0, 1, 11))


class TestGoldenSection:
    def test_parabola(self):
        """Golden-section search finds a parabola's minimum."""
        assert golden_section(lambda x: (x - 0.3) ** 2, 0.0, 1.0, 1e-6) == pytest.approx(0.3, abs=1e-5)


# ── Optimisation ────────────────────────────────────────────────

class TestOptimizeGamma:
    def test_reference_optimum(self, mix):
        """The reference design optimises to gamma near 0.75."""
        result = optimize_gamma(mix)
        assert result.gamma_opt == pytest.approx(0.75, abs=0.05)
        assert not result.flat
        assert result.F_min <= cost(mix, 0.0)
        assert result.F_min <= cost(mix, 1.0)

    def test_flattens_the_frequency(self, mix):
        """The optimum cuts the frequency spread at least fivefold."""
        result = optimize_gamma(mix)
        assert _max_deviation(mix, result.gamma_opt) < 0.2 * _max_deviation(mix, 0.0)

    def test_deviation_frame(self, mix):
        """One deviation row per spacing point."""
        frame = optimize_gamma(mix).deviation
        assert list(frame.columns) == ["h_s_um", "f_rel_deviation"]
        assert len(frame) == len(mix.h_s)
        mid = frame.loc[frame["h_s_um"] == 8.0, "f_rel_deviation"].iloc[0]
        assert mid == pytest.approx(0.0, abs=1e-15)

    def test_flat_cost_flagged(self, mix):
        """Identical tables give a flat cost and are flagged."""
        same = MixInput(h_s=mix.h_s, L_metal=mix.L_metal, C_metal=mix.C_metal,
                        L_diel=mix.L_metal, C_diel=mix.C_metal)
        result = optimize_gamma(same)
        assert result.flat
