"""Adapter over the scipy ODE solvers and matrix-exponential propagators."""

import logging
from dataclasses import dataclass, field
from typing import Callable, Dict, Tuple

import numpy as np
from scipy import linalg, sparse
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import expm_multiply

from src.domain.exceptions import IntegrationFailure, ValidationError
from src.domain.models import IntegratorOptions

logger = logging.getLogger(__name__)


@dataclass
class IntegratorStats:
    """Counters accumulated over one or more integration segments."""

    method: str = ""
    segments: int = 0
    rhs_evaluations: int = 0
    substeps: int = 0
    extra: Dict[str, float] = field(default_factory=dict)

    def merge(self, other: "IntegratorStats") -> None:
        self.method = self.method or other.method
        self.segments += other.segments
        self.rhs_evaluations += other.rhs_evaluations
        self.substeps += other.substeps
        self.extra.update(other.extra)

    def to_dict(self) -> Dict[str, object]:
        return {
            "method": self.method,
            "segments": self.segments,
            "rhs_evaluations": self.rhs_evaluations,
            "substeps": self.substeps,
            **self.extra,
        }


def check_time_grid(times: np.ndarray) -> np.ndarray:
    times = np.asarray(times, dtype=float)
    if times.ndim != 1 or len(times) == 0:
        raise ValidationError("Time grid must be a non-empty 1-D array")
    if np.any(np.diff(times) <= 0):
        raise ValidationError("Time grid must be strictly increasing")
    return times


def integrate_ode(
    rhs: Callable[[float, np.ndarray], np.ndarray],
    y0: np.ndarray,
    times: np.ndarray,
    opts: IntegratorOptions,
) -> Tuple[np.ndarray, IntegratorStats]:
    """
    Integrate a complex ODE with an embedded Runge-Kutta scheme.

    Args:
        rhs: Right-hand side f(t, y)
        y0: Initial value at times[0]
        times: Strictly increasing output times
        opts: Tolerances and step limits

    Returns:
        tuple: (array of shape (len(times), len(y0)), IntegratorStats)

    Raises:
        IntegrationFailure: If the solver does not reach the final time
    """
    times = check_time_grid(times)
    stats = IntegratorStats(method=opts.rk_scheme, segments=1)
    if len(times) == 1:
        return np.asarray(y0, dtype=complex)[None, :], stats

    solution = solve_ivp(
        rhs,
        (times[0], times[-1]),
        np.asarray(y0, dtype=complex),
        method=opts.rk_scheme,
        t_eval=times,
        rtol=opts.rtol,
        atol=opts.atol,
        max_step=opts.max_step,
    )
    if not solution.success:
        worst = float(solution.t[-1]) if len(solution.t) else float(times[0])
        raise IntegrationFailure(f"ODE solver failed: {solution.message}", worst_time=worst)
    stats.rhs_evaluations = int(solution.nfev)
    return solution.y.T, stats


def propagate_eigh(
    hamiltonian: np.ndarray, psi0: np.ndarray, times: np.ndarray
) -> Tuple[np.ndarray, IntegratorStats]:
    """Exact propagation under a static Hermitian matrix via its eigendecomposition."""
    times = check_time_grid(times)
    energies, vectors = linalg.eigh(hamiltonian)
    coefficients = vectors.conj().T @ psi0
    phases = np.exp(-1j * np.outer(times - times[0], energies))
    states = (phases * coefficients[None, :]) @ vectors.T
    return states, IntegratorStats(method="eigh", segments=1)


def propagate_piecewise(
    hamiltonian_at: Callable[[float], np.ndarray],
    psi0: np.ndarray,
    times: np.ndarray,
    max_step: float,
) -> Tuple[np.ndarray, IntegratorStats]:
    """
    Exponential-midpoint propagation under a time-dependent Hermitian matrix.

    Each output interval is split into equal substeps no longer than max_step; the
    propagator of every substep is exp(-i H(t_mid) dt), evaluated by eigendecomposition.
    """
    times = check_time_grid(times)
    if not np.isfinite(max_step):
        raise ValidationError("Piecewise propagation needs a finite max_step")
    states = np.empty((len(times), len(psi0)), dtype=complex)
    states[0] = psi0
    psi = np.asarray(psi0, dtype=complex)
    stats = IntegratorStats(method="exponential_midpoint", segments=len(times) - 1)
    for k in range(1, len(times)):
        t0, t1 = times[k - 1], times[k]
        n_sub = max(1, int(np.ceil((t1 - t0) / max_step - 1e-12)))
        dt = (t1 - t0) / n_sub
        for i in range(n_sub):
            energies, vectors = linalg.eigh(hamiltonian_at(t0 + (i + 0.5) * dt))
            psi = vectors @ (np.exp(-1j * energies * dt) * (vectors.conj().T @ psi))
        stats.substeps += n_sub
        states[k] = psi
    return states, stats


def propagate_expm_multiply(
    generator: sparse.spmatrix, y0: np.ndarray, times: np.ndarray
) -> Tuple[np.ndarray, IntegratorStats]:
    """Propagate dy/dt = A y with Krylov-type action of the matrix exponential."""
    times = check_time_grid(times)
    generator = sparse.csr_matrix(generator)
    states = np.empty((len(times), len(y0)), dtype=complex)
    states[0] = y0
    y = np.asarray(y0, dtype=complex)
    for k in range(1, len(times)):
        y = expm_multiply(generator * (times[k] - times[k - 1]), y)
        states[k] = y
    return states, IntegratorStats(method="expm_multiply", segments=len(times) - 1)
