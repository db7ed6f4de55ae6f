"""Load run configurations from TOML or JSON files."""

import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, Union

import pydantic

from src.domain.exceptions import ConfigError
from src.domain.models import RunConfig

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

logger = logging.getLogger(__name__)


def _format_errors(error: pydantic.ValidationError) -> str:
    lines = []
    for item in error.errors():
        key = ".".join(str(part) for part in item["loc"]) or "<root>"
        lines.append(f"  {key}: {item['msg']}")
    return "\n".join(lines)


def parse_run_config(data: Dict[str, Any]) -> RunConfig:
    """
    Validate a raw mapping into a RunConfig.

    Raises:
        ConfigError: Listing every offending section.key
    """
    try:
        return RunConfig.model_validate(data)
    except pydantic.ValidationError as e:
        raise ConfigError(f"Invalid run configuration:\n{_format_errors(e)}") from e


def read_config_file(path: Union[str, Path]) -> Dict[str, Any]:
    """Read a .toml or .json file into a dict."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"Config file not found: {path}")
    try:
        if path.suffix.lower() == ".json":
            with open(path, encoding="utf-8") as f:
                return json.load(f)
        with open(path, "rb") as f:
            return tomllib.load(f)
    except (json.JSONDecodeError, tomllib.TOMLDecodeError) as e:
        raise ConfigError(f"Failed to parse {path}: {e}") from e


def load_run_config(path: Union[str, Path]) -> RunConfig:
    """Read and validate a run configuration file."""
    config = parse_run_config(read_config_file(path))
    logger.info(f"Loaded run config from {path}")
    return config


def write_run_config(config: RunConfig, path: Union[str, Path]) -> Path:
    """Write a configuration as JSON (readable back by load_run_config)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(config.model_dump_json(indent=2, exclude_none=True), encoding="utf-8")
    return path
