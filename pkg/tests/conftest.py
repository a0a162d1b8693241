"""
File: conftest.py
Location: /tests/conftest.py
Description: Shared fixtures and the slow marker for the solver tests
Author: Patrick Jordan
Version: 2026-10

Acceptance-scale runs (lattice, sweeps, 48^3 grids) are marked `slow` and
skipped unless pytest is started with --runslow.
"""

import os
import sys

import numpy as np
import pytest

# Add project root to path
project_root = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))
if project_root not in sys.path:
    sys.path.insert(0, project_root)

from config_manager import ConfigurationManager  # noqa: E402
from src.model import CartesianGrid, KirchhoffParams, RadialGrid  # noqa: E402


def pytest_addoption(parser):
    parser.addoption(
        "--runslow", action="store_true", default=False, help="run slow acceptance tests"
    )


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: acceptance-scale run (needs --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def params():
    return KirchhoffParams(a=1.0, b=1.0, p=5.0)


@pytest.fixture
def small_radial():
    return RadialGrid(12.0, 600)


@pytest.fixture
def small_box():
    return CartesianGrid(3.0, 9)


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture
def config_root():
    return os.path.join(project_root, "config")


@pytest.fixture
def merged_defaults(config_root, tmp_path):
    """Default configuration with the output folder redirected to tmp_path."""
    manager = ConfigurationManager(config_root)
    merged = manager.load_defaults()
    merged["output"]["base_output_path"] = str(tmp_path / "output")
    return merged
