"""Boundaries to scipy numerics and configuration files."""

__all__ = [
    "integrators",
    "config_loader",
]
