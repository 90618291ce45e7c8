"""
Shared pytest fixtures and configuration for the Oscillator SAT Toolbox tests.
"""

import os
from pathlib import Path

import pytest
from hypothesis import settings

from modules.formula import Formula, read_dimacs_file

RESOURCES = Path(__file__).parent / "resources"
A12_PATH = RESOURCES / "a12.cnf"

settings.register_profile("dev", deadline=None, max_examples=50)
if "CI" in os.environ:
    # CI can be slow, so be patient
    settings.register_profile("ci", deadline=None, max_examples=200)
    settings.load_profile("ci")
else:
    settings.load_profile("dev")


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run the long acceptance reproductions")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running reproduction; needs --runslow")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def a12_path() -> Path:
    return A12_PATH


@pytest.fixture
def a12() -> Formula:
    """The 6-variable, 10-clause illustrative instance"""
    return read_dimacs_file(A12_PATH)


@pytest.fixture
def positive_clause() -> Formula:
    """(x1 or x2 or x3)"""
    return Formula.from_ints(3, [[1, 2, 3]])
