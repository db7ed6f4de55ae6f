"""
spinsq: collective-spin squeezing under a parametrically driven cavity.

This package builds effective one-axis and two-axis twisting models, integrates
pure and dissipative dynamics, and reports Ramsey squeezing traces and sweeps.
"""

__version__ = "0.1.0"
__all__ = []
