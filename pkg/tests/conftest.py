"""Pytest configuration and shared fixtures."""

import os
from unittest.mock import patch

import numpy as np
import pytest

from src.config import Settings
from src.domain.models import ModelSection, ProtocolSection, RunConfig
from src.domain.states import SpinSpace
from src.physics.model_builder import ITAT_RATIO, bogoliubov_from_drive, drive_for_ratio


@pytest.fixture
def rng():
    """Seeded random generator."""
    return np.random.default_rng(1234)


@pytest.fixture
def space4():
    return SpinSpace(4)


@pytest.fixture
def itat_params():
    """ITAT effective parameters at E_beta=20, N=10, no dissipation."""

    def make(n_spins: int = 10, e_beta: float = 20.0, kappa: float = 0.0, gamma_phi: float = 0.0):
        delta_c, lam = drive_for_ratio(e_beta, ITAT_RATIO)
        return bogoliubov_from_drive(
            delta_c,
            lam,
            delta_s=1.0 / e_beta,
            g=1.0,
            kappa=kappa,
            gamma_phi=gamma_phi,
            n_spins=n_spins,
        )

    return make


@pytest.fixture
def oat_params():
    def make(n_spins: int = 10, e_beta: float = 20.0):
        return bogoliubov_from_drive(e_beta, 0.0, delta_s=1.0 / e_beta, g=1.0, n_spins=n_spins)

    return make


@pytest.fixture
def constant_config():
    """Small coherent ITAT run configuration."""

    def make(n_spins: int = 10, **protocol):
        protocol.setdefault("t_final", 4.0)
        protocol.setdefault("n_times", 41)
        return RunConfig(
            model=ModelSection(n_spins=n_spins, e_beta=20.0),
            protocol=ProtocolSection(**protocol),
        )

    return make


@pytest.fixture
def test_settings():
    """Settings built from a clean environment."""
    with patch.dict(os.environ, {}, clear=True):
        yield Settings(_env_file=None)
