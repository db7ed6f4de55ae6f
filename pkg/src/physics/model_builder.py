"""Drive-to-effective-parameter mapping and Hamiltonian/jump-operator builders.

Frequencies are in units of g and hbar = 1. The full models act on
``spin block (x) truncated Fock space`` with the spin as the left tensor factor.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import List, NamedTuple, Optional, Tuple

import numpy as np

from src.domain.exceptions import TruncationWarning, UnstableDrive, ValidationError
from src.domain.models import DriveParams, EffectiveParams, PresetKind
from src.domain.states import Basis, Operator, PureState, SpinOperators, SpinSpace, to_doubled
from src.physics.collective_spin import (
    build_product_operators,
    build_spin_operators,
    sigma_operator,
)

logger = logging.getLogger(__name__)

ITAT_RATIO = 1.0 / 3.0
MIN_FULL_MODEL_CUTOFF = 8


def bogoliubov_from_drive(
    delta_c: float,
    lam: float,
    *,
    delta_s: float = 0.0,
    g: float = 1.0,
    kappa: float = 0.0,
    gamma_phi: float = 0.0,
    n_spins: int = 1,
) -> EffectiveParams:
    """
    Diagonalize the driven cavity and derive the effective spin couplings.

    Args:
        delta_c: Cavity detuning from half the drive frequency
        lam: Real parametric drive amplitude
        delta_s: Spin detuning
        g: Single-spin coupling
        kappa: Cavity decay rate
        gamma_phi: Single-spin dephasing rate
        n_spins: Number of spins (enters the cooperativity)

    Returns:
        EffectiveParams: r, E_beta, chi, chi_tilde, delta_tilde, Gamma and C

    Raises:
        UnstableDrive: If |lam| >= |delta_c|
    """
    if abs(lam) >= abs(delta_c):
        raise UnstableDrive(f"Drive |lambda|={abs(lam)} must stay below |delta_c|={abs(delta_c)}")

    ratio = lam / delta_c
    r = 0.5 * math.atanh(ratio)
    e_beta = math.copysign(math.sqrt(delta_c**2 - lam**2), delta_c)
    chi = g**2 / e_beta
    if kappa > 0 and gamma_phi > 0:
        cooperativity = n_spins * g**2 / (kappa * gamma_phi)
    else:
        cooperativity = math.inf

    return EffectiveParams(
        r=r,
        e_beta=e_beta,
        chi=chi,
        chi_tilde=chi * math.cosh(2 * r),
        delta_tilde=delta_s - chi,
        gamma_big=kappa * chi / e_beta,
        cooperativity=cooperativity,
        delta_c=delta_c,
        lambda_re=lam,
        delta_s=delta_s,
        g=g,
        kappa=kappa,
        gamma_phi=gamma_phi,
        n_spins=n_spins,
    )


def effective_params(drive: DriveParams) -> EffectiveParams:
    return bogoliubov_from_drive(
        drive.delta_c,
        drive.lambda_re,
        delta_s=drive.delta_s,
        g=drive.g,
        kappa=drive.kappa,
        gamma_phi=drive.gamma_phi,
        n_spins=drive.n_spins,
    )


def drive_from_target(e_beta: float, r: float) -> Tuple[float, float]:
    """Cavity detuning and drive amplitude realizing a Bogoliubov energy and squeeze parameter."""
    if e_beta <= 0:
        raise ValidationError(f"Bogoliubov energy must be positive, got {e_beta}")
    return e_beta * math.cosh(2 * r), e_beta * math.sinh(2 * r)


def drive_for_ratio(e_beta: float, ratio: float) -> Tuple[float, float]:
    """(delta_c, lambda) with lambda = ratio * delta_c at fixed E_beta."""
    if abs(ratio) >= 1:
        raise UnstableDrive(f"lambda/delta_c={ratio} must lie strictly inside (-1, 1)")
    return drive_from_target(e_beta, 0.5 * math.atanh(ratio))


def _ops(space: SpinSpace, j: Optional[float]) -> SpinOperators:
    return build_spin_operators(space, j)


def effective_hamiltonian_from(ops: SpinOperators, params: EffectiveParams) -> Operator:
    """Delta_tilde Sz - chi_tilde [(S^2 - Sz^2) - tanh(2r)(Sx^2 - Sy^2)] in the basis of ops."""
    sx, sy, sz = ops.cartesian()
    twist = (ops.s2 - sz @ sz) - params.tanh_2r * (sx @ sx - sy @ sy)
    return params.delta_tilde * sz - params.chi_tilde * twist


def build_effective_hamiltonian(
    space: SpinSpace, params: EffectiveParams, j: Optional[float] = None
) -> Operator:
    """Effective twisting Hamiltonian on one Dicke block (j = N/2 by default)."""
    return effective_hamiltonian_from(_ops(space, j), params)


def build_product_hamiltonian(n_spins: int, params: EffectiveParams) -> Operator:
    """Effective twisting Hamiltonian on the full 2^N product basis."""
    return effective_hamiltonian_from(build_product_operators(n_spins), params)


def build_sigma_hamiltonian(
    space: SpinSpace, params: EffectiveParams, j: Optional[float] = None
) -> Operator:
    """The same Hamiltonian written as -chi Sigma^dag Sigma + Delta_s Sz."""
    ops = _ops(space, j)
    sigma = sigma_operator(ops, params.r)
    return -params.chi * (sigma.dag() @ sigma) + params.delta_s * ops.sz


class Preset(NamedTuple):
    hamiltonian: Operator
    params: EffectiveParams
    warnings: List[str]


def build_preset(
    space: SpinSpace,
    kind: PresetKind,
    base: DriveParams,
    *,
    r: Optional[float] = None,
    lambda_sign: int = 1,
    shift_dispersive_mean: bool = False,
    oat_y_warn_threshold: float = 0.1,
) -> Preset:
    """
    Resolve a named drive configuration and build its effective Hamiltonian.

    Args:
        space: Collective-spin space
        kind: oat_z, itat, oat_y, twist_and_turn or custom
        base: Supplies delta_c, g, kappa, gamma_phi (and lambda, delta_s for custom)
        r: Squeeze parameter, required by oat_y and twist_and_turn
        lambda_sign: -1 selects lambda = -delta_c/3 for itat (z-x plane twist)
        shift_dispersive_mean: itat uses delta_s = chi (1 + sinh^2 r0) instead of chi
        oat_y_warn_threshold: Warn when exp(-2r) exceeds this for oat_y

    Returns:
        Preset: Hamiltonian, resolved parameters and approximation warnings

    Raises:
        ValidationError: If a preset needs r and none was given
        UnstableDrive: If the resolved drive is unstable
    """
    warnings: List[str] = []
    delta_c = base.delta_c

    def resolve(lam: float, delta_s_of) -> EffectiveParams:
        bare = bogoliubov_from_drive(delta_c, lam, g=base.g)
        return bogoliubov_from_drive(
            delta_c,
            lam,
            delta_s=delta_s_of(bare),
            g=base.g,
            kappa=base.kappa,
            gamma_phi=base.gamma_phi,
            n_spins=base.n_spins,
        )

    if kind == "oat_z":
        params = resolve(0.0, lambda p: p.chi)
    elif kind == "itat":
        lam = lambda_sign * ITAT_RATIO * delta_c
        if shift_dispersive_mean:
            params = resolve(lam, lambda p: p.chi * (1 + math.sinh(p.r) ** 2))
        else:
            params = resolve(lam, lambda p: p.chi)
    elif kind in ("oat_y", "twist_and_turn"):
        if r is None:
            raise ValidationError(f"Preset {kind} requires a squeeze parameter r")
        lam = delta_c * math.tanh(2 * r)
        if kind == "oat_y":
            params = resolve(lam, lambda p: 0.0)
            if math.exp(-2 * r) > oat_y_warn_threshold:
                message = (
                    f"oat_y approximation is loose at r={r}: exp(-2r)={math.exp(-2 * r):.3g} "
                    f"exceeds {oat_y_warn_threshold}"
                )
                logger.warning(message)
                warnings.append(message)
        else:
            params = resolve(lam, lambda p: base.delta_s)
    elif kind == "custom":
        params = effective_params(base)
    else:
        raise ValidationError(f"Unknown preset: {kind}")

    logger.debug(
        f"Preset {kind}: r={params.r:.6g}, E_beta={params.e_beta:.6g}, chi={params.chi:.6g}"
    )
    return Preset(build_effective_hamiltonian(space, params), params, warnings)


@dataclass(frozen=True, eq=False)
class JumpOperators:
    """Collective jump sqrt(Gamma) z[r] plus the local dephasing rate."""

    collective: Operator
    z_operator: Operator
    collective_rate: float
    local_dephasing_rate: float

    @property
    def has_local_dephasing(self) -> bool:
        return self.local_dephasing_rate > 0


def build_jump_operators(
    space: SpinSpace, params: EffectiveParams, j: Optional[float] = None
) -> JumpOperators:
    """Collective jump z[r] = exp(-2r) Sx - i exp(2r) Sy with rate Gamma."""
    return jump_operators_from(_ops(space, j), params)


def jump_operators_from(ops: SpinOperators, params: EffectiveParams) -> JumpOperators:
    z_op = math.exp(-2 * params.r) * ops.sx - 1j * math.exp(2 * params.r) * ops.sy
    return JumpOperators(
        collective=math.sqrt(params.gamma_big) * z_op,
        z_operator=z_op,
        collective_rate=params.gamma_big,
        local_dephasing_rate=params.gamma_phi,
    )


def default_fock_cutoff(r: float) -> int:
    return max(12, math.ceil(6 * math.sinh(r) ** 2 + 6))


def fock_annihilation(cutoff: int) -> np.ndarray:
    return np.diag(np.sqrt(np.arange(1, cutoff)), k=1).astype(complex)


def _spin_fock_basis(space: SpinSpace, j: Optional[float], cutoff: int) -> Basis:
    j2 = space.top_j2 if j is None else to_doubled(j)
    space.block(j2)
    return Basis.spin_fock(space.n_spins, j2, cutoff)


def _on_spin(op: Operator, basis: Basis) -> Operator:
    return Operator(basis, np.kron(op.matrix, np.eye(basis.cutoff)))


def _on_fock(matrix: np.ndarray, basis: Basis) -> Operator:
    return Operator(basis, np.kron(np.eye(basis.spin_dim), matrix))


def embed_spin_operators(ops: SpinOperators, cutoff: int) -> SpinOperators:
    """Lift block spin operators to the spin (x) Fock space."""
    spin_basis = ops.basis
    basis = Basis.spin_fock(spin_basis.n_spins, spin_basis.j2, cutoff)
    return SpinOperators(
        **{
            name: _on_spin(getattr(ops, name), basis)
            for name in ("sx", "sy", "sz", "sp", "sm", "s2")
        }
    )


@dataclass(frozen=True, eq=False)
class CavitySpinModel:
    """Hamiltonian on spin (x) Fock plus the bosonic and spin operators it was built from."""

    hamiltonian: Operator
    mode: Operator
    spin: SpinOperators
    cutoff: int

    @property
    def basis(self) -> Basis:
        return self.hamiltonian.basis

    def number_operator(self) -> Operator:
        return self.mode.dag() @ self.mode


def _check_cutoff(cutoff: int, minimum: int) -> None:
    if cutoff < minimum:
        raise ValidationError(f"Fock cutoff {cutoff} is below the minimum of {minimum}")


def build_full_rot_model(
    space: SpinSpace, cutoff: int, drive: DriveParams, j: Optional[float] = None
) -> CavitySpinModel:
    """
    Rotating-frame spin-cavity Hamiltonian with the parametric drive.

    H = delta_c c^dag c + delta_s Sz + g (c^dag S- + c S+) + (lambda/2) c^2 + (lambda*/2) c^dag^2

    Args:
        space: Collective-spin space
        cutoff: Fock-space dimension of the cavity
        drive: Physical drive parameters
        j: Spin block (defaults to N/2)

    Returns:
        CavitySpinModel: Hamiltonian and cavity annihilation operator c

    Raises:
        ValidationError: If the cutoff is below 8
        UnstableDrive: If the drive is unstable
    """
    _check_cutoff(cutoff, MIN_FULL_MODEL_CUTOFF)
    basis = _spin_fock_basis(space, j, cutoff)
    spin = embed_spin_operators(_ops(space, j), cutoff)
    c = _on_fock(fock_annihilation(cutoff), basis)
    cd = c.dag()
    lam = drive.lam
    hamiltonian = (
        drive.delta_c * (cd @ c)
        + drive.delta_s * spin.sz
        + drive.g * (cd @ spin.sm + c @ spin.sp)
        + 0.5 * lam * (c @ c)
        + 0.5 * lam.conjugate() * (cd @ cd)
    )
    return CavitySpinModel(hamiltonian=hamiltonian, mode=c, spin=spin, cutoff=cutoff)


def build_squeezed_frame_hamiltonian(
    space: SpinSpace, cutoff: int, drive: DriveParams, j: Optional[float] = None
) -> CavitySpinModel:
    """E_beta b^dag b + g (b^dag Sigma + b Sigma^dag) + delta_s Sz on the Bogoliubov mode."""
    _check_cutoff(cutoff, 2)
    params = effective_params(drive)
    basis = _spin_fock_basis(space, j, cutoff)
    ops = _ops(space, j)
    spin = embed_spin_operators(ops, cutoff)
    sigma = _on_spin(sigma_operator(ops, params.r), basis)
    b = _on_fock(fock_annihilation(cutoff), basis)
    hamiltonian = (
        params.e_beta * (b.dag() @ b)
        + drive.g * (b.dag() @ sigma + b @ sigma.dag())
        + drive.delta_s * spin.sz
    )
    return CavitySpinModel(hamiltonian=hamiltonian, mode=b, spin=spin, cutoff=cutoff)


def build_lab_hamiltonian(
    space: SpinSpace,
    cutoff: int,
    drive: DriveParams,
    omega_p: float,
    t: float = 0.0,
    j: Optional[float] = None,
) -> Operator:
    """
    Lab-frame Hamiltonian at time t.

    Uses omega_c = delta_c + omega_p and omega_s = delta_s + omega_p.

    Built for consistency checks against the rotating frame; never integrated.
    """
    _check_cutoff(cutoff, MIN_FULL_MODEL_CUTOFF)
    rotating = build_full_rot_model(space, cutoff, drive, j)
    c, spin = rotating.mode, rotating.spin
    cd = c.dag()
    drive_phase = np.exp(2j * omega_p * t)
    return (
        (drive.delta_c + omega_p) * (cd @ c)
        + (drive.delta_s + omega_p) * spin.sz
        + drive.g * (cd @ spin.sm + c @ spin.sp)
        + 0.5 * drive.lam * drive_phase * (c @ c)
        + 0.5 * (drive.lam * drive_phase).conjugate() * (cd @ cd)
    )


def build_dispersive_term(
    space: SpinSpace, cutoff: int, params: EffectiveParams, j: Optional[float] = None
) -> Operator:
    """-chi Sz b^dag b on spin (x) Bogoliubov-mode Fock space."""
    _check_cutoff(cutoff, 2)
    basis = _spin_fock_basis(space, j, cutoff)
    sz = _on_spin(_ops(space, j).sz, basis)
    number = _on_fock(np.diag(np.arange(cutoff, dtype=float)), basis)
    return -params.chi * (sz @ number)


def squeezed_vacuum(r: float, cutoff: int) -> np.ndarray:
    """
    Bare-cavity vacuum expressed in the Bogoliubov-mode Fock basis.

    Only even photon numbers are populated: c_{n+1} = tanh(r) sqrt(n/(n+1)) c_{n-1}.
    Untruncated, the photon number has mean sinh^2 r and variance 2 sinh^2 r cosh^2 r.
    """
    _check_cutoff(cutoff, 1)
    amplitudes = np.zeros(cutoff, dtype=complex)
    amplitudes[0] = 1.0
    t = math.tanh(r)
    for n in range(1, cutoff - 1, 2):
        amplitudes[n + 1] = t * math.sqrt(n / (n + 1)) * amplitudes[n - 1]
    return amplitudes / np.linalg.norm(amplitudes)


def spin_fock_product(spin_state: PureState, fock_amplitudes: np.ndarray) -> PureState:
    """Product state |spin> (x) |fock> in the spin-Fock basis."""
    basis = Basis.spin_fock(
        spin_state.basis.n_spins, spin_state.basis.j2, len(fock_amplitudes)
    )
    return PureState(basis, np.kron(spin_state.vector, fock_amplitudes))


def fock_populations(state: PureState) -> np.ndarray:
    """Photon-number distribution of a spin-Fock pure state."""
    basis = state.basis
    amplitudes = state.vector.reshape(basis.spin_dim, basis.cutoff)
    return np.sum(np.abs(amplitudes) ** 2, axis=0)


def check_fock_truncation(populations: np.ndarray, tol: float = 1e-6) -> Optional[str]:
    """Return a warning message when the two highest Fock levels hold more than tol."""
    top = float(np.sum(populations[-2:]))
    if top > tol:
        message = f"Fock truncation: top-two levels hold population {top:.3g} > {tol:g}"
        warnings.warn(message, TruncationWarning, stacklevel=2)
        return message
    return None
