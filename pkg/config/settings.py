import os

from dotenv import load_dotenv

load_dotenv()


class Config:
    """Base configuration."""
    # ── Execution ─────────────────────────────────────────────
    WORKERS = int(os.environ.get('FLIPCHIP_WORKERS', '1'))
    LOG_LEVEL = os.environ.get('FLIPCHIP_LOG_LEVEL', 'INFO')

    # ── Field solver ──────────────────────────────────────────
    # Supported: 'direct' (sparse LU), 'cg' (conjugate gradient)
    LINEAR_SOLVER = os.environ.get('FLIPCHIP_LINEAR_SOLVER', 'direct')
    EDGE_CELL_UM = float(os.environ.get('FLIPCHIP_EDGE_CELL_UM', '0.05'))
    GROWTH = float(os.environ.get('FLIPCHIP_GROWTH', '1.25'))
    MAX_CELL_UM = 20.0


class DefaultConfig(Config):
    """Production-accuracy grids."""


class TestingConfig(Config):
    """Coarser grids so the test suite stays fast."""
    WORKERS = 1
    EDGE_CELL_UM = float(os.environ.get('FLIPCHIP_TEST_EDGE_CELL_UM', '0.05'))
    GROWTH = 1.4
    MAX_CELL_UM = 40.0


config_by_name = {
    'default': DefaultConfig,
    'testing': TestingConfig,
}


def get_config(name=None):
    """Return the Config class selected by name or FLIPCHIP_ENV."""
    if name is None:
        name = os.environ.get('FLIPCHIP_ENV', 'default')
    return config_by_name[name]
