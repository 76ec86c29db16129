import pytest

from config.design import DESIGN_DEFAULTS, SOLVER_CONFIG
from config.settings import TestingConfig
from engine.conformal import CrossSection, Facing
from engine.geometry import CONDUCTOR, FEEDLINE, GROUND, RESONATOR, RegionMap, Rect
from engine.resonator import ResonatorSpec


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running solver checks (deselect with -m 'not slow')")


@pytest.fixture
def section():
    """Reference flip-chip cross-section, metal facing, h_s = 8 µm."""
    return CrossSection(w=12.0, s=12.0, t=0.15, h_s=8.0, h_b=280.0, h_t=280.0,
                        eps_r=11.45, facing=Facing.METAL)


@pytest.fixture
def dielectric_section(section):
    return section.with_(facing=Facing.DIELECTRIC)


@pytest.fixture
def spec():
    """Reference quarter-wave resonator layout."""
    d = DESIGN_DEFAULTS
    return ResonatorSpec(l_s=d["l_s_um"], l_c=d["l_c_um"], l_o=d["l_o_um"], R=d["R_um"],
                         alpha1=d["alpha1_per_um"], alpha2=d["alpha2"], p=1,
                         w_f=d["w_f_um"], s_f=d["s_f_um"], d=d["d_um"])


@pytest.fixture
def solver():
    """Coarse grid settings for the field-solver tests."""
    return {
        **SOLVER_CONFIG,
        "edge_cell_um": TestingConfig.EDGE_CELL_UM,
        "growth": TestingConfig.GROWTH,
        "max_cell_um": TestingConfig.MAX_CELL_UM,
    }


@pytest.fixture
def strip_pair():
    """Two 1 x 0.3 µm strips in a 20 x 20 µm vacuum box: go (1) and return (0)."""
    rects = (
        Rect(-0.5, 0.5, 0.0, 0.3, CONDUCTOR, conductor=RESONATOR, tag="go"),
        Rect(2.0, 3.0, 0.0, 0.3, CONDUCTOR, conductor=GROUND, tag="return"),
    )
    return RegionMap(rects=rects, x_min=-10.0, x_max=10.0, y_min=-10.0, y_max=10.0)


@pytest.fixture
def parallel_plates():
    """100 µm wide plates 10 µm apart, periodic in x; the plates fill the top and bottom of the box."""
    rects = (
        Rect(0.0, 100.0, -1.0, 0.0, CONDUCTOR, conductor=GROUND, tag="bottom"),
        Rect(0.0, 100.0, 10.0, 11.0, CONDUCTOR, conductor=RESONATOR, tag="top"),
    )
    return RegionMap(rects=rects, x_min=0.0, x_max=100.0, y_min=-1.0, y_max=11.0, periodic_x=True)


@pytest.fixture
def twin_strips():
    """Resonator and feedline strips mirrored about x = 0, flanked by ground strips."""
    rects = (
        Rect(-12.0, -7.0, 0.0, 0.2, CONDUCTOR, conductor=GROUND, tag="ground_left"),
        Rect(-4.0, -1.0, 0.0, 0.2, CONDUCTOR, conductor=RESONATOR, tag="resonator"),
        Rect(1.0, 4.0, 0.0, 0.2, CONDUCTOR, conductor=FEEDLINE, tag="feedline"),
        Rect(7.0, 12.0, 0.0, 0.2, CONDUCTOR, conductor=GROUND, tag="ground_right"),
    )
    return RegionMap(rects=rects, x_min=-20.0, x_max=20.0, y_min=-20.0, y_max=20.0)
