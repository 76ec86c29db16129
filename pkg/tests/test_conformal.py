"""Tests for the closed-form flip-chip CPW line parameters."""
import logging
import math

import pytest
from hypothesis import assume, given, settings, strategies as st
from scipy import special
from scipy.constants import c as C_LIGHT, epsilon_0, mu_0

from engine.conformal import (
    CrossSection, Facing, LineParams, Method, half_params, line_params,
    line_params_dielectric_facing, line_params_metal_facing, moduli,
)
from engine.elliptic import k_ratio
from engine.errors import DomainError, GeometryError


# ── Moduli ──────────────────────────────────────────────────────

class TestModuli:
    def test_reference_geometry(self, section):
        """Moduli of the 12/12 µm line on 280 µm tiers at 8 µm spacing."""
        k1, k2, ks = moduli(section)
        assert k1 == pytest.approx(1 / 3, rel=1e-15)
        assert k2 == pytest.approx(0.3328, abs=1e-4)
        assert ks == pytest.approx(0.828, abs=1e-3)

    def test_substrate_modulus_below_bare(self, section):
        """The finite substrate lowers the modulus below w/pitch."""
        k1, k2, _ = moduli(section)
        assert k2 < k1

    def test_spacer_modulus_above_bare(self, section):
        """The opposing chip raises the spacer modulus above w/pitch."""
        k1, _, ks = moduli(section)
        assert ks > k1

    def test_sinh_overflow_is_domain_error(self, section):
        """A vanishing substrate overflows sinh and raises DomainError."""
        with pytest.raises(DomainError):
            moduli(section.with_(h_b=1e-3))

    @pytest.mark.parametrize("h_s", [0.6, 1.0, 2.0])
    def test_spacer_ratio_keeps_digits_at_small_spacing(self, section, h_s):
        """ks approaches 1 as the chips close, and the spacer ratio keeps full precision."""
        a = math.pi * section.w / (4 * h_s)
        b = math.pi * section.pitch / (4 * h_s)
        kc2 = (1 / math.cosh(a) ** 2 - 1 / math.cosh(b) ** 2) / math.tanh(b) ** 2
        rs = special.ellipkm1(kc2) / special.ellipk(kc2)
        halves = half_params(section.with_(h_s=h_s))
        assert halves.L_top == pytest.approx((mu_0 / 2) / rs, rel=1e-11)
        assert halves.C_top == pytest.approx(2 * epsilon_0 * rs, rel=1e-11)


# ── Cross-section validation ────────────────────────────────────

class TestCrossSection:
    @pytest.mark.parametrize("field", ["w", "s", "t", "h_s", "h_b", "h_t"])
    def test_rejects_non_positive_lengths(self, section, field):
        """Zero lengths are refused at construction."""
        with pytest.raises(GeometryError):
            section.with_(**{field: 0.0})

    def test_rejects_eps_below_one(self, section):
        """Relative permittivity below one is refused."""
        with pytest.raises(GeometryError):
            section.with_(eps_r=0.5)

    def test_facing_from_string(self, section):
        """The facing field accepts its string value."""
        assert section.with_(facing="dielectric").facing is Facing.DIELECTRIC

    def test_pitch(self, section):
        """Pitch is w + 2s."""
        assert section.pitch == 36.0


# ── Metal facing ────────────────────────────────────────────────

class TestMetalFacing:
    def test_reference_values(self, section):
        """Metal-facing L_g and C of the reference design."""
        lp = line_params_metal_facing(section)
        assert lp.L_g == pytest.approx(3.43e-7, rel=6e-3)
        assert lp.C == pytest.approx(1.51e-10, rel=6e-3)
        assert lp.L_k == 0.0
        assert lp.method is Method.CONFORMAL

    def test_closed_form_identity(self, section):
        """L_g and C follow the parallel-halves closed forms exactly."""
        r1 = k_ratio(1 / 3)
        _, k2, ks = moduli(section)
        lp = line_params(section)
        assert lp.L_g == pytest.approx((mu_0 / 2) / (k_ratio(ks) + r1), rel=1e-13)
        expected_c = 2 * epsilon_0 * k_ratio(ks) + 2 * epsilon_0 * (r1 + 10.45 * k_ratio(k2))
        assert lp.C == pytest.approx(expected_c, rel=1e-13)

    def test_far_opposing_chip_reduces_to_single_chip(self, section):
        """A distant opposing chip leaves the single-chip inductance."""
        far = line_params(section.with_(h_s=1e6))
        r1 = k_ratio(1 / 3)
        assert far.L_g == pytest.approx((mu_0 / 4) / r1, rel=1e-6)

    def test_single_chip_textbook_cpw(self, section):
        """Thick substrate: eps_eff ~ (eps_r + 1)/2 and Z0 = 30 pi K(k')/K(k)/sqrt(eps_eff)."""
        far = line_params(section.with_(h_s=1e6))
        assert far.eps_eff == pytest.approx((11.45 + 1) / 2, rel=1e-2)
        z0 = 30 * math.pi / math.sqrt(far.eps_eff) / k_ratio(1 / 3)
        assert far.impedance == pytest.approx(z0, rel=2e-3)

    def test_inductance_rises_and_capacitance_falls_with_spacing(self, section):
        """L_g grows and C shrinks monotonically as the chips separate."""
        gaps = [2.0, 4.0, 8.0, 16.0, 32.0, 60.0]
        params = [line_params(section.with_(h_s=h)) for h in gaps]
        assert all(a.L_g < b.L_g for a, b in zip(params, params[1:]))
        assert all(a.C > b.C for a, b in zip(params, params[1:]))

    def test_halves_combine_in_parallel(self, section):
        """The diagnostic halves recombine into the reported L_g and C."""
        halves = half_params(section)
        lp = line_params(section)
        assert lp.L_g == pytest.approx(1 / (1 / halves.L_top + 1 / halves.L_bottom), rel=1e-14)
        assert lp.C == pytest.approx(halves.C_top + halves.C_bottom, rel=1e-14)

    def test_wrong_facing_rejected(self, dielectric_section):
        """A dielectric-facing section is refused by the metal-facing formula."""
        with pytest.raises(GeometryError):
            line_params_metal_facing(dielectric_section)


# ── Dielectric facing ───────────────────────────────────────────

class TestDielectricFacing:
    def test_reference_values(self, dielectric_section):
        """Dielectric-facing L' and C' of the reference design."""
        lp = line_params_dielectric_facing(dielectric_section)
        assert lp.L_g == pytest.approx(4.91e-7, rel=3e-3)
        assert lp.C == pytest.approx(1.49e-10, rel=6e-3)

    def test_inductance_independent_of_spacing(self, dielectric_section):
        """L' does not depend on the spacing."""
        values = {line_params(dielectric_section.with_(h_s=h)).L_g for h in (3.0, 8.0, 40.0)}
        assert len(values) == 1

    def test_needs_dielectric_contrast(self, dielectric_section):
        """The series top half needs eps_r > 1."""
        with pytest.raises(DomainError):
            line_params(dielectric_section.with_(eps_r=1.0))

    def test_inductance_above_metal_facing(self, section, dielectric_section):
        """Removing the opposing ground raises the inductance."""
        assert line_params(dielectric_section).L_g > line_params(section).L_g

    def test_wrong_facing_rejected(self, section):
        """A metal-facing section is refused by the dielectric-facing formula."""
        with pytest.raises(GeometryError):
            line_params_dielectric_facing(section)


# ── Validity warnings ───────────────────────────────────────────

class TestValidityWarnings:
    def test_small_spacing_warns(self, section, caplog):
        """Spacings at or below 4 µm log a magnetic-wall warning."""
        with caplog.at_level(logging.WARNING, logger="engine.conformal"):
            line_params(section.with_(h_s=3.0))
        assert "magnetic-wall" in caplog.text

    def test_unequal_tiers_warn(self, section, caplog):
        """Unequal substrate thicknesses log a warning."""
        with caplog.at_level(logging.WARNING, logger="engine.conformal"):
            line_params(section.with_(h_t=500.0))
        assert "differs from h_t" in caplog.text

    def test_reference_geometry_is_quiet(self, section, caplog):
        """The reference geometry logs nothing."""
        with caplog.at_level(logging.WARNING, logger="engine.conformal"):
            line_params(section)
        assert caplog.text == ""


# ── Line parameters ─────────────────────────────────────────────

class TestLineParams:
    def test_rejects_non_physical(self):
        """Negative L_g or L_k is refused."""
        with pytest.raises(GeometryError):
            LineParams(L_g=-1e-7, C=1e-10)
        with pytest.raises(GeometryError):
            LineParams(L_g=1e-7, C=1e-10, L_k=-1e-9)

    def test_kinetic_inductance_slows_the_line(self, section):
        """Added L_k lowers the phase velocity but not eps_eff."""
        lp = line_params(section)
        slow = lp.with_kinetic(1e-8)
        assert slow.L == pytest.approx(lp.L_g + 1e-8)
        assert slow.phase_velocity < lp.phase_velocity
        assert slow.eps_eff == lp.eps_eff

    @given(w=st.floats(2.0, 30.0), s=st.floats(2.0, 30.0), h_s=st.floats(3.0, 100.0),
           eps_r=st.floats(1.5, 15.0), facing=st.sampled_from(list(Facing)))
    @settings(max_examples=60, deadline=None)
    def test_effective_permittivity_bounds(self, w, s, h_s, eps_r, facing):
        """eps_eff stays between 1 and eps_r over random geometries."""
        x = CrossSection(w=w, s=s, t=0.15, h_s=h_s, h_b=280.0, h_t=280.0, eps_r=eps_r, facing=facing)
        lp = line_params(x)
        assume(math.isfinite(lp.eps_eff))
        assert 1.0 - 1e-9 <= lp.eps_eff <= eps_r + 1e-9
        assert lp.eps_eff == pytest.approx(C_LIGHT ** 2 * lp.L_g * lp.C)
