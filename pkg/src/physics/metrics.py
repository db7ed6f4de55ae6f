"""Spin moments, minimal perpendicular variance and the Ramsey squeezing parameter."""

import logging
import math
from functools import lru_cache
from typing import Iterable, Optional, Tuple, Union

import numpy as np

from src.domain.exceptions import MeanSpinVanished, ValidationError
from src.domain.states import (
    Basis,
    BlockDensityMatrix,
    PureState,
    SpinMoments,
    SpinOperators,
    SpinSpace,
    SqueezingTrace,
)
from src.physics.collective_spin import build_product_operators, build_spin_operators
from src.physics.model_builder import embed_spin_operators

logger = logging.getLogger(__name__)

StateLike = Union[PureState, BlockDensityMatrix, np.ndarray, SpinMoments]


@lru_cache(maxsize=128)
def _operators_for(basis: Basis) -> SpinOperators:
    if basis.kind == "product":
        return build_product_operators(basis.n_spins)
    ops = build_spin_operators(SpinSpace(basis.n_spins), basis.j2 / 2)
    if basis.kind == "spin_fock":
        return embed_spin_operators(ops, basis.cutoff)
    return ops


def _stack(ops: SpinOperators) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    return ops.sx.matrix, ops.sy.matrix, ops.sz.matrix


def _pure_moments(state: PureState) -> SpinMoments:
    vectors = np.stack([m @ state.vector for m in _stack(_operators_for(state.basis))], axis=1)
    mean = np.real(state.vector.conj() @ vectors)
    second = np.real(vectors.conj().T @ vectors)
    return SpinMoments(mean=mean, second_moments=second, n_spins=state.basis.n_spins)


def _density_moments(rho: np.ndarray, ops: SpinOperators, weight: float = 1.0):
    mats = _stack(ops)
    mean = np.array([weight * np.real(np.trace(rho @ m)) for m in mats])
    second = np.empty((3, 3))
    for a in range(3):
        for b in range(a, 3):
            value = weight * np.real(np.trace(rho @ (mats[a] @ mats[b] + mats[b] @ mats[a]))) / 2
            second[a, b] = second[b, a] = value
    return mean, second


def _block_moments(rho: BlockDensityMatrix) -> SpinMoments:
    mean = np.zeros(3)
    second = np.zeros((3, 3))
    for j2, block in rho.blocks.items():
        ops = _operators_for(Basis.dicke(rho.space.n_spins, j2))
        m, s = _density_moments(block, ops, rho.space.degeneracy(j2))
        mean += m
        second += s
    return SpinMoments(mean=mean, second_moments=second, n_spins=rho.space.n_spins)


def spin_moments(state: StateLike) -> SpinMoments:
    """
    First and symmetrized second moments of (Sx, Sy, Sz).

    Accepts a pure state in any basis, a block density matrix, or a dense
    product-basis density matrix (N is inferred from its dimension).
    """
    if isinstance(state, SpinMoments):
        return state
    if isinstance(state, PureState):
        return _pure_moments(state)
    if isinstance(state, BlockDensityMatrix):
        return _block_moments(state)
    rho = np.asarray(state)
    n_spins = int(round(math.log2(rho.shape[0])))
    if rho.ndim != 2 or rho.shape[0] != 2**n_spins:
        raise ValidationError(f"Cannot infer a product basis from shape {rho.shape}")
    mean, second = _density_moments(rho, _operators_for(Basis.product(n_spins)))
    return SpinMoments(mean=mean, second_moments=second, n_spins=n_spins)


def perpendicular_basis(mean: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Orthonormal (e1, e2) perpendicular to mean, e2 = n x e1.

    e1 is Gram-Schmidt of the unit axis along the smallest |component| of n, so a
    mean along +x yields (y, z).
    """
    n = mean / np.linalg.norm(mean)
    axis = np.zeros(3)
    axis[int(np.argmin(np.abs(n)))] = 1.0
    e1 = axis - np.dot(axis, n) * n
    e1 /= np.linalg.norm(e1)
    return e1, np.cross(n, e1)


def min_perpendicular_variance(moments: SpinMoments) -> Tuple[float, float]:
    """
    Smallest spin variance perpendicular to the mean and the angle attaining it.

    The angle theta is measured from e1 towards e2 (see perpendicular_basis) and
    wrapped into (-pi/2, pi/2]; a degenerate 2x2 covariance returns 0.

    Raises:
        MeanSpinVanished: If |<S>| < 1e-12 N
    """
    if moments.mean_length < 1e-12 * moments.n_spins:
        raise MeanSpinVanished(f"Mean spin length {moments.mean_length:.3g} is zero")
    e1, e2 = perpendicular_basis(moments.mean)
    cov = moments.covariance
    a = float(e1 @ cov @ e1)
    c = float(e2 @ cov @ e2)
    b = float(e1 @ cov @ e2)
    half_diff = 0.5 * (a - c)
    radius = math.hypot(half_diff, b)
    var_min = 0.5 * (a + c) - radius
    if radius <= 1e-12 * max(abs(a), abs(c), 1.0):
        return var_min, 0.0
    theta = 0.5 * math.atan2(b, half_diff) + math.pi / 2
    if theta > math.pi / 2:
        theta -= math.pi
    return var_min, theta


def to_db(xi2: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Squeezing in decibels, negative when squeezed."""
    return 10.0 * np.log10(xi2)


def xi_r2(state: StateLike, n_spins: Optional[int] = None) -> float:
    """N * var_min / |<S>|^2."""
    moments = spin_moments(state)
    n = moments.n_spins if n_spins is None else n_spins
    var_min, _ = min_perpendicular_variance(moments)
    return n * var_min / moments.mean_length**2


def squeezing_trace(
    times: np.ndarray, states: Iterable[StateLike], time_scale: float = 1.0
) -> SqueezingTrace:
    """
    Squeezing metrics along a trajectory.

    Points where the mean spin vanishes report the smallest covariance eigenvalue as
    var_min with NaN angle and xi^2.
    """
    moments = tuple(spin_moments(s) for s in states)
    var_min = np.empty(len(moments))
    theta = np.empty(len(moments))
    xi2 = np.empty(len(moments))
    for k, m in enumerate(moments):
        try:
            var_min[k], theta[k] = min_perpendicular_variance(m)
            xi2[k] = m.n_spins * var_min[k] / m.mean_length**2
        except MeanSpinVanished:
            logger.debug(f"Mean spin vanished at t={times[k]:.6g}; reporting raw variance")
            var_min[k] = float(np.linalg.eigvalsh(m.covariance)[0])
            theta[k] = math.nan
            xi2[k] = math.nan
    return SqueezingTrace(
        times=np.asarray(times, dtype=float),
        moments=moments,
        var_min=var_min,
        theta_opt=theta,
        xi2=xi2,
        time_scale=time_scale,
    )
