"""Shared fixtures: seeded generators, Pauli matrices, qubit models"""

import logging

import numpy as np
import pytest

from qjh.config import reload_settings
from qjh.lindblad import amplitude_damping_model

from .helpers import SIGMA_X, SIGMA_Y, SIGMA_Z


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def paulis():
    return SIGMA_X, SIGMA_Y, SIGMA_Z


@pytest.fixture
def damping():
    return amplitude_damping_model(1.0)


@pytest.fixture(autouse=True)
def isolated_settings(monkeypatch, tmp_path):
    """Keep QJH_* variables from the developer's shell out of the tests"""
    for key in ("QJH_SEED", "QJH_THREADS", "QJH_OUTPUT_DIR", "QJH_MAX_HISTORY_BYTES"):
        monkeypatch.delenv(key, raising=False)
    monkeypatch.chdir(tmp_path)
    reload_settings()
    yield
    monkeypatch.undo()
    reload_settings()


@pytest.fixture
def restore_root_logger():
    """setup_logging replaces root handlers; put pytest's back afterwards"""
    root = logging.getLogger()
    handlers, level = root.handlers[:], root.level
    yield root
    for handler in root.handlers[:]:
        root.removeHandler(handler)
    for handler in handlers:
        root.addHandler(handler)
    root.setLevel(level)
