"""Collective-spin physics: models, dynamics, metrics and closed forms."""

__all__ = [
    "collective_spin",
    "model_builder",
    "dephasing",
    "dynamics",
    "metrics",
    "linearized",
    "schedules",
]
