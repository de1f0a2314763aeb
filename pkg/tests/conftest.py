"""
conftest.py - shared fixtures for the test suite.

Built-in cases are loaded once per session; MarketCase is frozen so
sharing them across tests is safe.
"""

import numpy as np
import pytest

from bench.acceptance import pinned_qcqp
from market.case_loader import load_builtin


@pytest.fixture(scope="session")
def one_bus():
    return load_builtin("toy_one_bus")


@pytest.fixture(scope="session")
def two_bus():
    return load_builtin("toy_two_bus")


@pytest.fixture(scope="session")
def three_bus():
    return load_builtin("toy_three_bus")


@pytest.fixture(scope="session")
def ieee30():
    return load_builtin("ieee30")


@pytest.fixture
def pinned():
    return pinned_qcqp()


@pytest.fixture
def rng():
    return np.random.default_rng(7)


@pytest.fixture(autouse=True)
def _isolated_output(tmp_path, monkeypatch):
    """Keep reports written during tests out of the data folder."""
    monkeypatch.setenv("NODAL_OUTPUT_FOLDER", str(tmp_path / "results"))
