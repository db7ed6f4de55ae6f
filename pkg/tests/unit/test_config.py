"""Tests for config module."""

import importlib
import os
import tempfile
from pathlib import Path
from unittest.mock import patch

import pytest

from src.config import Settings
from src.domain.exceptions import ConfigError


def test_settings_defaults(test_settings):
    """Test defaults with an empty environment."""
    assert test_settings.log_level == "INFO"
    assert test_settings.output_dir == "output"
    assert test_settings.threads is None
    assert test_settings.max_bruteforce_spins == 8


def test_settings_read_prefixed_environment():
    """Test that SPINSQ_* variables override defaults."""
    with patch.dict(
        os.environ,
        {"SPINSQ_LOG_LEVEL": "DEBUG", "SPINSQ_THREADS": "3", "SPINSQ_OUTPUT_DIR": "/tmp/x"},
        clear=True,
    ):
        settings = Settings(_env_file=None)
        assert settings.log_level == "DEBUG"
        assert settings.threads == 3
        assert settings.output_dir == "/tmp/x"


def test_settings_validation_invalid_threads():
    """Test that a non-positive thread count raises error."""
    with patch.dict(os.environ, {"SPINSQ_THREADS": "0"}, clear=True):
        with pytest.raises(ConfigError, match="SPINSQ_THREADS"):
            Settings(_env_file=None)


def test_settings_reject_malformed_threads():
    with patch.dict(os.environ, {"SPINSQ_THREADS": "abc"}, clear=True):
        with pytest.raises(ConfigError, match="SPINSQ_THREADS"):
            Settings(_env_file=None)


def test_import_falls_back_on_malformed_environment():
    """Test that a malformed variable still lets the config module import."""
    import src.config as config_module

    try:
        with patch.dict(os.environ, {"SPINSQ_THREADS": "abc"}, clear=True):
            reloaded = importlib.reload(config_module)
            assert reloaded.settings.threads is None
            assert reloaded.settings.max_bruteforce_spins == 8
    finally:
        importlib.reload(config_module)


def test_settings_validation_positivity_tolerances():
    with patch.dict(
        os.environ,
        {"SPINSQ_POSITIVITY_WARN_TOL": "1e-3", "SPINSQ_POSITIVITY_FAIL_TOL": "1e-5"},
        clear=True,
    ):
        with pytest.raises(ConfigError, match="POSITIVITY"):
            Settings(_env_file=None)


def test_resolve_workers_environment_wins():
    """Test that SPINSQ_THREADS overrides --workers."""
    with patch.dict(os.environ, {"SPINSQ_THREADS": "2"}, clear=True):
        settings = Settings(_env_file=None)
        assert settings.resolve_workers(8) == 2


def test_resolve_workers_from_request(test_settings):
    assert test_settings.resolve_workers(4) == 4
    assert test_settings.resolve_workers(0) == 1
    assert test_settings.resolve_workers() == 1


def test_settings_ensure_directories():
    """Test that ensure_directories creates required directories."""
    with tempfile.TemporaryDirectory() as tmpdir:
        output_dir = Path(tmpdir) / "nested" / "output"
        with patch.dict(os.environ, {"SPINSQ_OUTPUT_DIR": str(output_dir)}, clear=True):
            settings = Settings(_env_file=None)
            settings.ensure_directories()
            assert output_dir.exists()
