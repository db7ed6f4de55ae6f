"""Adiabatic ramp of the squeeze parameter at constant Bogoliubov energy."""

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
import pandas as pd
from scipy import linalg

from src.domain.exceptions import ValidationError
from src.domain.states import Operator, SpinSpace
from src.physics.collective_spin import build_spin_operators

logger = logging.getLogger(__name__)

PULSE_COLUMNS = ["t", "t_over_tau", "r", "lambda_im", "delta_c", "lambda_re", "delta_s"]


@dataclass(frozen=True)
class RampSchedule:
    """
    Smooth ramp r(t) from 0 to r_f over tau_prot with E_beta held fixed.

    Im lambda(t) = (30 r_f / tau) s^2 (s - 1)^2 with s = t / tau, and r(t) is its
    integral r_f s^3 (6 s^2 - 15 s + 10). The real drive follows
    delta_c = E_beta cosh 2r and Re lambda = E_beta sinh 2r. Times are in units of 1/g.
    """

    r_f: float
    tau_prot: float
    e_beta: float
    g: float = 1.0

    def __post_init__(self):
        if self.tau_prot <= 0:
            raise ValidationError(f"Ramp duration must be positive, got {self.tau_prot}")
        if self.e_beta <= 0:
            raise ValidationError(f"Bogoliubov energy must be positive, got {self.e_beta}")
        if self.r_f < 0:
            raise ValidationError(f"Final squeeze parameter must be non-negative, got {self.r_f}")

    @classmethod
    def in_chi_units(
        cls, r_f: float, tau_chi: float, e_beta: float, g: float = 1.0
    ) -> "RampSchedule":
        """Build a ramp whose duration is given as chi * tau."""
        return cls(r_f=r_f, tau_prot=tau_chi * e_beta / g**2, e_beta=e_beta, g=g)

    @property
    def chi(self) -> float:
        return self.g**2 / self.e_beta

    def _s(self, t):
        return np.clip(np.asarray(t, dtype=float) / self.tau_prot, 0.0, 1.0)

    def r(self, t):
        s = self._s(t)
        return self.r_f * s**3 * (6 * s**2 - 15 * s + 10)

    def lambda_im(self, t):
        s = self._s(t)
        return (30 * self.r_f / self.tau_prot) * s**2 * (s - 1) ** 2

    def delta_c(self, t):
        return self.e_beta * np.cosh(2 * self.r(t))

    def lambda_re(self, t):
        return self.e_beta * np.sinh(2 * self.r(t))

    def delta_s(self, t):
        # The Sz term of -chi Sigma^dag Sigma is kept; no extra spin detuning in this frame.
        return np.zeros_like(np.asarray(t, dtype=float))

    def hamiltonian(
        self, space: SpinSpace, j: Optional[float] = None
    ) -> Callable[[float], Operator]:
        """t -> -chi Sigma^dag[r(t)] Sigma[r(t)] on one Dicke block."""
        ops = build_spin_operators(space, j)
        sx, sy, sz = ops.cartesian()
        transverse = ops.s2 - sz @ sz
        anisotropy = sx @ sx - sy @ sy
        chi = self.chi

        def at(t: float) -> Operator:
            two_r = 2 * float(self.r(t))
            return -chi * (math.cosh(two_r) * transverse + sz - math.sinh(two_r) * anisotropy)

        return at

    def pulse_table(self, n_points: int = 201) -> pd.DataFrame:
        """Drive parameters on a uniform grid; t is exported in units of 1/chi."""
        t = np.linspace(0.0, self.tau_prot, n_points)
        return pd.DataFrame(
            {
                "t": t * self.chi,
                "t_over_tau": t / self.tau_prot,
                "r": self.r(t),
                "lambda_im": self.lambda_im(t),
                "delta_c": self.delta_c(t),
                "lambda_re": self.lambda_re(t),
                "delta_s": self.delta_s(t),
            },
            columns=PULSE_COLUMNS,
        )


def instantaneous_gap(space: SpinSpace, r: float, chi: float = 1.0) -> float:
    """
    Gap between the top two levels of -chi Sigma^dag Sigma in the sector of |j,-j>.

    For even N the top level is the zero-energy dark state.
    """
    ops = build_spin_operators(space)
    sx, sy, sz = ops.cartesian()
    matrix = (
        -chi
        * (
            math.cosh(2 * r) * (ops.s2 - sz @ sz)
            + sz
            - math.sinh(2 * r) * (sx @ sx - sy @ sy)
        )
    ).matrix
    sector = matrix[0::2, 0::2]
    energies = linalg.eigvalsh(sector)
    if len(energies) < 2:
        return math.inf
    return float(energies[-1] - energies[-2])


def minimum_gap(schedule: RampSchedule, space: SpinSpace, n_points: int = 41) -> float:
    """Smallest instantaneous gap along the ramp (in units of chi)."""
    radii = schedule.r(np.linspace(0.0, schedule.tau_prot, n_points))
    return min(instantaneous_gap(space, float(r), chi=1.0) for r in radii)
