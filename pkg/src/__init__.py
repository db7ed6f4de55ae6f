"""Parametric-drive spin squeezing simulator - Main package."""

__version__ = "0.1.0"
SCHEMA_VERSION = "1"
