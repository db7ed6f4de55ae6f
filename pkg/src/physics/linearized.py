"""Small-fluctuation theory of dissipative two-axis twisting around a +x polarized state.

With <Sx> frozen at N/2 the variances (vyy, vzz, vyz) obey
``d/dt v = (2/3) chi_tilde [[0, 0, 2N], [0, 0, 2N], [N, N, 0]] v + b`` with
``b = (gamma_phi N / 2, exp(4r) Gamma N^2 / 4, 0)``. In the coordinates
``V_pm = (vyy + vzz)/2 pm vyz`` and ``w = (vyy - vzz)/2`` the system is diagonal,
which keeps the decaying (squeezed) branch free of cancellation.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np

from src.domain.exceptions import OptimumUnbounded, ValidationError
from src.domain.models import EffectiveParams
from src.physics.model_builder import ITAT_RATIO, bogoliubov_from_drive, drive_for_ratio

logger = logging.getLogger(__name__)

SQUEEZED_ANGLE = -math.pi / 4


@dataclass(frozen=True, eq=False)
class MomentState:
    """<Sy^2>, <Sz^2> and <(SySz + SzSy)/2> on a time grid."""

    times: np.ndarray
    vyy: np.ndarray
    vzz: np.ndarray
    vyz: np.ndarray
    n_spins: int

    def variance_at(self, theta: float) -> np.ndarray:
        """Variance of cos(theta) Sy + sin(theta) Sz."""
        c, s = math.cos(theta), math.sin(theta)
        return c**2 * self.vyy + s**2 * self.vzz + 2 * s * c * self.vyz

    @property
    def squeezed_variance(self) -> np.ndarray:
        return self.variance_at(SQUEEZED_ANGLE)

    @property
    def xi2(self) -> np.ndarray:
        return 4.0 * self.squeezed_variance / self.n_spins


def _check_itat(params: EffectiveParams) -> None:
    if abs(params.tanh_2r - ITAT_RATIO) > 1e-9:
        raise ValidationError(
            f"Linearized theory assumes tanh(2r) = 1/3, got {params.tanh_2r:.6g}"
        )
    if params.chi_tilde <= 0:
        raise ValidationError(f"chi_tilde must be positive, got {params.chi_tilde}")


def moment_matrix(params: EffectiveParams) -> np.ndarray:
    n = params.n_spins
    return (2.0 / 3.0) * params.chi_tilde * np.array(
        [[0.0, 0.0, 2 * n], [0.0, 0.0, 2 * n], [n, n, 0.0]]
    )


def drive_vector(params: EffectiveParams) -> np.ndarray:
    n = params.n_spins
    return np.array(
        [
            params.gamma_phi * n / 2,
            math.exp(4 * params.r) * params.gamma_big * n**2 / 4,
            0.0,
        ]
    )


def moment_ode_solve(params: EffectiveParams, t_grid: np.ndarray) -> MomentState:
    """
    Exact solution of the affine variance equations from the +x coherent state.

    Args:
        params: Effective parameters at the ITAT point tanh(2r) = 1/3
        t_grid: Times (units of 1/g) at which to report the variances

    Returns:
        MomentState: vyy, vzz, vyz on t_grid
    """
    _check_itat(params)
    t = np.asarray(t_grid, dtype=float)
    n = params.n_spins
    rate = (4.0 / 3.0) * n * params.chi_tilde
    b = drive_vector(params)
    source = 0.5 * (b[0] + b[1])
    floor = source / rate

    v_minus = floor + (n / 4 - floor) * np.exp(-rate * t)
    v_plus = (n / 4 + floor) * np.exp(rate * t) - floor
    w = 0.5 * (b[0] - b[1]) * t

    u = 0.5 * (v_plus + v_minus)
    vyz = 0.5 * (v_plus - v_minus)
    return MomentState(times=t, vyy=u + w, vzz=u - w, vyz=vyz, n_spins=n)


def steady_state_min_variance(params: EffectiveParams) -> float:
    """Long-time squeezed variance, (3/16)(gamma_phi + N Gamma)/chi_tilde at the ITAT point."""
    _check_itat(params)
    b = drive_vector(params)
    return 0.5 * (b[0] + b[1]) / ((4.0 / 3.0) * params.n_spins * params.chi_tilde)


def _check_optimum_inputs(kappa: float, gamma_phi: float) -> None:
    if gamma_phi <= 0 or kappa <= 0:
        raise OptimumUnbounded(
            f"No finite optimum for kappa={kappa}, gamma_phi={gamma_phi}: both must be positive"
        )


def optimal_e_beta(n_spins: int, g: float, kappa: float, gamma_phi: float) -> float:
    """E_beta* = sqrt(N) sqrt(g^2 kappa / gamma_phi)."""
    _check_optimum_inputs(kappa, gamma_phi)
    return math.sqrt(n_spins) * math.sqrt(g**2 * kappa / gamma_phi)


def min_xi2(n_spins: int, g: float, kappa: float, gamma_phi: float) -> float:
    """sqrt(2 / C) with C = N g^2 / (kappa gamma_phi)."""
    _check_optimum_inputs(kappa, gamma_phi)
    cooperativity = n_spins * g**2 / (kappa * gamma_phi)
    return math.sqrt(2.0 / cooperativity)


def itat_params(
    e_beta: float, n_spins: int, g: float = 1.0, kappa: float = 0.0, gamma_phi: float = 0.0
) -> EffectiveParams:
    """Effective parameters at lambda = delta_c / 3 with the linear Sz term cancelled."""
    delta_c, lam = drive_for_ratio(e_beta, ITAT_RATIO)
    chi = g**2 / e_beta
    return bogoliubov_from_drive(
        delta_c, lam, delta_s=chi, g=g, kappa=kappa, gamma_phi=gamma_phi, n_spins=n_spins
    )


def linearized_xi2(e_beta, n_spins: int, g: float, kappa: float, gamma_phi: float):
    """Steady-state xi^2 as a function of E_beta (scalar or array)."""
    e = np.asarray(e_beta, dtype=float)
    value = math.sqrt(2.0) / (2 * n_spins * g**2) * (gamma_phi * e + n_spins * kappa * g**2 / e)
    return float(value) if value.ndim == 0 else value
