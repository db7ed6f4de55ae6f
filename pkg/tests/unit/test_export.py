"""Tests for result export service."""

import json
import math
import tempfile
from pathlib import Path
from unittest.mock import patch

import numpy as np
import pandas as pd
import pytest

from src import SCHEMA_VERSION
from src.domain.exceptions import ApplicationError
from src.services.export import ExportService, build_bundle, to_jsonable


@pytest.fixture
def export_service():
    """Create an export service with temporary directory."""
    with tempfile.TemporaryDirectory() as tmpdir:
        yield ExportService(output_dir=tmpdir)


@pytest.fixture
def sample_frame():
    t = np.linspace(0.0, 1.0, 5)
    return pd.DataFrame({"t": t, "xi2": 1.0 / (1.0 + t), "theta": np.full(5, np.nan)})


@pytest.fixture
def sample_bundle(constant_config):
    return build_bundle(
        constant_config(n_spins=6),
        summary={"min_xi2": 0.25, "cooperativity": math.inf, "curve": [1.0, 0.5]},
        warnings=["something to note"],
        integrator_stats={"method": "eigh"},
        wall_clock_s=0.5,
    )


def test_to_jsonable_handles_non_finite_and_numpy():
    payload = {
        "a": math.inf,
        "b": -np.inf,
        "c": float("nan"),
        "d": np.int64(3),
        "e": np.array([0.5, 1.5]),
        "f": np.bool_(True),
        "g": 1 + 2j,
    }

    assert to_jsonable(payload) == {
        "a": "inf",
        "b": "-inf",
        "c": "nan",
        "d": 3,
        "e": [0.5, 1.5],
        "f": True,
        "g": {"re": 1.0, "im": 2.0},
    }


def test_build_bundle_records_versions(sample_bundle):
    assert sample_bundle.schema_version == SCHEMA_VERSION
    assert sample_bundle.config["model"]["n_spins"] == 6
    assert sample_bundle.incomplete is False


def test_export_frame(export_service, sample_frame):
    result = export_service.export_frame(sample_frame, "trace.csv")

    assert result.kind == "trace"
    assert result.size_bytes > 0
    loaded = pd.read_csv(result.filepath)
    assert list(loaded.columns) == ["t", "xi2", "theta"]
    assert np.allclose(loaded["xi2"], sample_frame["xi2"], rtol=1e-12)


def test_export_frame_is_byte_identical(export_service, sample_frame):
    first = Path(export_service.export_frame(sample_frame, "a.csv").filepath).read_bytes()
    second = Path(export_service.export_frame(sample_frame.copy(), "b.csv").filepath).read_bytes()
    assert first == second


def test_export_result_writes_sidecar(export_service, sample_frame, sample_bundle):
    table, sidecar = export_service.export_result(sample_frame, sample_bundle, "itat_n6")

    assert table.filepath.endswith("itat_n6.csv")
    assert sidecar.filepath.endswith("itat_n6.json")
    with open(sidecar.filepath) as f:
        data = json.load(f)
    assert data["trace_path"] == table.filepath
    assert data["summary_path"] == sidecar.filepath
    assert data["summary"]["cooperativity"] == "inf"
    assert data["warnings"] == ["something to note"]


def test_export_markdown(export_service, sample_bundle):
    """Test Markdown export."""
    result = export_service.export_markdown(sample_bundle, "report", title="ITAT run")

    assert result.kind == "md"
    content = Path(result.filepath).read_text()
    assert "# ITAT run" in content
    assert "**min_xi2:** 0.25" in content
    assert "curve" not in content
    assert "- something to note" in content


def test_export_error_handling(export_service, sample_frame):
    with patch.object(pd.DataFrame, "to_csv", side_effect=OSError("disk full")):
        with pytest.raises(ApplicationError, match="Failed to export to CSV: disk full"):
            export_service.export_frame(sample_frame, "trace.csv")
