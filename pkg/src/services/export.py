"""Export service for traces, sweep tables and run summaries."""

import json
import logging
import math
from pathlib import Path
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from src import SCHEMA_VERSION, __version__
from src.config import settings
from src.domain.exceptions import ApplicationError
from src.domain.models import ExportResult, ResultBundle, RunConfig

logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12e"


def to_jsonable(value: Any) -> Any:
    """Plain JSON types; non-finite floats become the strings "inf", "-inf", "nan"."""
    if isinstance(value, dict):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        value = float(value)
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return value
    if isinstance(value, (np.bool_,)):
        return bool(value)
    if isinstance(value, complex):
        return {"re": to_jsonable(value.real), "im": to_jsonable(value.imag)}
    return value


def build_bundle(
    config: RunConfig,
    summary: Dict[str, Any],
    warnings: Optional[List[str]] = None,
    integrator_stats: Optional[Dict[str, Any]] = None,
    wall_clock_s: float = 0.0,
    incomplete: bool = False,
) -> ResultBundle:
    """Assemble the metadata bundle written next to every result table."""
    return ResultBundle(
        schema_version=SCHEMA_VERSION,
        package_version=__version__,
        config=config.model_dump(mode="json", exclude_none=True),
        summary=summary,
        warnings=list(warnings or []),
        integrator_stats=dict(integrator_stats or {}),
        wall_clock_s=wall_clock_s,
        incomplete=incomplete,
    )


class ExportService:
    """Service for writing result tables and their JSON sidecars."""

    def __init__(self, output_dir: Optional[str] = None):
        """
        Initialize export service.

        Args:
            output_dir: Directory for exported files (defaults to settings.output_dir)
        """
        self.output_dir = Path(output_dir or settings.output_dir)
        self.output_dir.mkdir(parents=True, exist_ok=True)
        logger.info(f"Export service initialized with output dir: {self.output_dir}")

    def export_frame(self, frame: pd.DataFrame, filename: str, kind: str = "trace") -> ExportResult:
        """
        Write a table as CSV with a fixed float format.

        Re-running a deterministic computation reproduces the file byte for byte.

        Args:
            frame: Table to write
            filename: File name inside the output directory
            kind: Label stored in the ExportResult

        Returns:
            ExportResult object

        Raises:
            ApplicationError: If writing fails
        """
        try:
            filepath = self.output_dir / filename
            frame.to_csv(filepath, index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
            size = filepath.stat().st_size
            logger.info(f"CSV export successful: {filepath} ({size} bytes)")
            return ExportResult(kind=kind, filepath=str(filepath), size_bytes=size)
        except Exception as e:
            logger.error(f"Error exporting to CSV: {str(e)}")
            raise ApplicationError(f"Failed to export to CSV: {str(e)}") from e

    def export_json(
        self, payload: Dict[str, Any], filename: str, kind: str = "summary"
    ) -> ExportResult:
        """Write a mapping as indented, key-sorted JSON."""
        try:
            filepath = self.output_dir / filename
            with open(filepath, "w", encoding="utf-8") as f:
                json.dump(to_jsonable(payload), f, indent=2, sort_keys=True)
                f.write("\n")
            size = filepath.stat().st_size
            logger.info(f"JSON export successful: {filepath} ({size} bytes)")
            return ExportResult(kind=kind, filepath=str(filepath), size_bytes=size)
        except Exception as e:
            logger.error(f"Error exporting to JSON: {str(e)}")
            raise ApplicationError(f"Failed to export to JSON: {str(e)}") from e

    def export_result(
        self, frame: pd.DataFrame, bundle: ResultBundle, stem: str, kind: str = "trace"
    ) -> List[ExportResult]:
        """
        Write ``<stem>.csv`` and its ``<stem>.json`` summary sidecar.

        Args:
            frame: Result table
            bundle: Metadata bundle; its paths are filled in here
            stem: File stem
            kind: Table kind (trace, sweep, pulse)

        Returns:
            List of ExportResult objects, table first
        """
        table = self.export_frame(frame, f"{stem}.csv", kind=kind)
        summary_path = str(self.output_dir / f"{stem}.json")
        bundle = bundle.model_copy(
            update={"trace_path": table.filepath, "summary_path": summary_path}
        )
        sidecar = self.export_json(bundle.model_dump(mode="python"), f"{stem}.json")
        return [table, sidecar]

    def export_markdown(
        self, bundle: ResultBundle, stem: str, title: str = "Run Report"
    ) -> ExportResult:
        """
        Short human-readable report of a run.

        Args:
            bundle: Metadata bundle
            stem: File stem
            title: Report heading

        Returns:
            ExportResult object
        """
        try:
            filepath = self.output_dir / f"{stem}.md"
            summary = to_jsonable(bundle.summary)
            lines = [f"# {title}", "", "## Metadata", ""]
            lines.append(f"- **Package version:** {bundle.package_version}")
            lines.append(f"- **Schema version:** {bundle.schema_version}")
            lines.append(f"- **Wall clock:** {bundle.wall_clock_s:.2f} s")
            lines.append(f"- **Incomplete:** {bundle.incomplete}")
            if bundle.trace_path:
                lines.append(f"- **Table:** {bundle.trace_path}")
            lines += ["", "## Summary", ""]
            for key in sorted(summary):
                if isinstance(summary[key], (dict, list)):
                    continue
                lines.append(f"- **{key}:** {summary[key]}")
            if bundle.warnings:
                lines += ["", "## Warnings", ""]
                lines += [f"- {w}" for w in bundle.warnings]
            lines += ["", "---", "*Generated by spinsq*", ""]

            filepath.write_text("\n".join(lines), encoding="utf-8")
            size = filepath.stat().st_size
            logger.info(f"Markdown export successful: {filepath} ({size} bytes)")
            return ExportResult(kind="md", filepath=str(filepath), size_bytes=size)
        except Exception as e:
            logger.error(f"Error exporting to Markdown: {str(e)}")
            raise ApplicationError(f"Failed to export to Markdown: {str(e)}") from e
