"""Tests for the drive mapping and Hamiltonian builders."""

import math

import numpy as np
import pytest

from src.domain.exceptions import TruncationWarning, UnstableDrive, ValidationError
from src.domain.models import DriveParams
from src.domain.states import SpinSpace
from src.physics.dynamics import rotation_x
from src.physics.collective_spin import (
    build_product_operators,
    build_spin_operators,
    coherent_spin_state,
    symmetric_isometry,
)
from src.physics.model_builder import (
    build_dispersive_term,
    build_effective_hamiltonian,
    build_full_rot_model,
    build_jump_operators,
    build_lab_hamiltonian,
    build_preset,
    build_product_hamiltonian,
    build_sigma_hamiltonian,
    build_squeezed_frame_hamiltonian,
    bogoliubov_from_drive,
    check_fock_truncation,
    default_fock_cutoff,
    drive_for_ratio,
    drive_from_target,
    fock_populations,
    spin_fock_product,
    squeezed_vacuum,
)


def test_bogoliubov_itat_ratio():
    """Test lambda = delta_c/3: tanh 2r = 1/3, exp(2r) = sqrt 2, E_beta = (2 sqrt 2/3) delta_c."""
    params = bogoliubov_from_drive(30.0, 10.0)

    assert params.tanh_2r == pytest.approx(1 / 3)
    assert math.exp(2 * params.r) == pytest.approx(math.sqrt(2))
    assert params.e_beta == pytest.approx(2 * math.sqrt(2) / 3 * 30.0)
    assert math.sinh(params.r) ** 2 == pytest.approx(0.0303, abs=1e-4)
    assert params.chi_tilde == pytest.approx(params.chi * math.cosh(2 * params.r))


def test_bogoliubov_rates():
    """Test Gamma = kappa chi / E_beta and C = N g^2/(kappa gamma_phi)."""
    params = bogoliubov_from_drive(20.0, 0.0, kappa=10.0, gamma_phi=0.02, n_spins=1)

    assert params.chi == pytest.approx(0.05)
    assert params.gamma_big == pytest.approx(0.025)
    assert params.cooperativity == pytest.approx(5.0)
    assert params.delta_tilde == pytest.approx(-0.05)


def test_bogoliubov_cooperativity_without_loss_is_infinite():
    assert bogoliubov_from_drive(20.0, 0.0).cooperativity == math.inf


@pytest.mark.parametrize("lam", [20.0, -25.0])
def test_unstable_drive(lam):
    with pytest.raises(UnstableDrive):
        bogoliubov_from_drive(20.0, lam)


def test_drive_from_target_round_trip():
    delta_c, lam = drive_from_target(15.0, 0.7)
    params = bogoliubov_from_drive(delta_c, lam)
    assert params.e_beta == pytest.approx(15.0)
    assert params.r == pytest.approx(0.7)


def test_drive_from_target_rejects_non_positive_energy():
    with pytest.raises(ValidationError):
        drive_from_target(0.0, 0.5)


def test_drive_for_ratio_rejects_unit_ratio():
    with pytest.raises(UnstableDrive):
        drive_for_ratio(20.0, 1.0)


def test_oat_form_without_squeezing():
    """Test r=0, delta_s=0 gives -chi (S^2 - Sz^2 + Sz)."""
    space = SpinSpace(6)
    ops = build_spin_operators(space)
    params = bogoliubov_from_drive(20.0, 0.0)

    hamiltonian = build_effective_hamiltonian(space, params)
    expected = -params.chi * (ops.s2 - ops.sz @ ops.sz + ops.sz)

    assert np.allclose(hamiltonian.matrix, expected.matrix)


def test_itat_form_with_cancelled_detuning(itat_params):
    """Test the ITAT Hamiltonian with delta_tilde=0 equals -(2 chi_tilde/3)(S^2 - Sz^2 + Sy^2)."""
    space = SpinSpace(6)
    ops = build_spin_operators(space)
    base = itat_params(n_spins=6)
    params = base.model_copy(update={"delta_tilde": 0.0})

    hamiltonian = build_effective_hamiltonian(space, params)
    expected = -(2 * params.chi_tilde / 3) * (ops.s2 - ops.sz @ ops.sz + ops.sy @ ops.sy)

    assert np.allclose(hamiltonian.matrix, expected.matrix)


@pytest.mark.parametrize("r", [0.0, 0.3, 1.2])
def test_sigma_form_matches_effective_hamiltonian(r):
    """Test -chi Sigma^dag Sigma + delta_s Sz equals the expanded effective Hamiltonian."""
    space = SpinSpace(5)
    delta_c, lam = drive_from_target(20.0, r)
    params = bogoliubov_from_drive(delta_c, lam, delta_s=0.37)

    expanded = build_effective_hamiltonian(space, params)
    factored = build_sigma_hamiltonian(space, params)

    assert np.allclose(expanded.matrix, factored.matrix, atol=1e-12)


def test_single_spin_hamiltonian_is_trivial():
    """Test that N=1 reduces to delta_tilde Sz plus a constant."""
    space = SpinSpace(1)
    params = bogoliubov_from_drive(30.0, 10.0, delta_s=0.0)
    hamiltonian = build_effective_hamiltonian(space, params).matrix

    off_diagonal = hamiltonian - np.diag(np.diag(hamiltonian))
    splitting = hamiltonian[1, 1] - hamiltonian[0, 0]
    assert np.allclose(off_diagonal, 0)
    assert splitting.real == pytest.approx(params.delta_tilde)


def test_effective_hamiltonian_conserves_total_spin():
    params = bogoliubov_from_drive(30.0, 10.0, delta_s=0.2)
    hamiltonian = build_product_hamiltonian(3, params)
    total_spin = build_product_operators(3).s2

    assert np.allclose(hamiltonian.commutator(total_spin).matrix, 0, atol=1e-10)


@pytest.mark.parametrize("delta_tilde", [0.0, 0.3])
def test_x_pi_rotation_only_flips_the_linear_term(itat_params, delta_tilde):
    """Test that e^(-i pi Sx) leaves the twist invariant and reverses delta_tilde Sz."""
    space = SpinSpace(6)
    base = itat_params(n_spins=6)
    params = base.model_copy(update={"delta_tilde": delta_tilde})
    hamiltonian = build_effective_hamiltonian(space, params)
    sz = build_spin_operators(space).sz
    rotation = rotation_x(hamiltonian.basis)

    rotated = rotation @ hamiltonian.matrix @ rotation.conj().T

    expected = hamiltonian.matrix - 2 * delta_tilde * sz.matrix
    assert np.allclose(rotated, expected, atol=1e-10)


def test_product_hamiltonian_restricts_to_block(itat_params):
    """Test that the product-basis Hamiltonian restricts to the block one."""
    params = itat_params(n_spins=3)
    block = build_effective_hamiltonian(SpinSpace(3), params).matrix
    product = build_product_hamiltonian(3, params).matrix
    isometry = symmetric_isometry(3)

    assert np.allclose(isometry.conj().T @ product @ isometry, block, atol=1e-12)


def test_preset_oat_z_cancels_linear_term():
    base = DriveParams(delta_c=20.0, n_spins=4)
    preset = build_preset(SpinSpace(4), "oat_z", base)
    assert preset.params.r == 0.0
    assert preset.params.delta_tilde == pytest.approx(0.0, abs=1e-15)
    assert preset.warnings == []


def test_preset_itat_sign_selects_twist_plane():
    base = DriveParams(delta_c=30.0, n_spins=4)
    plus = build_preset(SpinSpace(4), "itat", base)
    minus = build_preset(SpinSpace(4), "itat", base, lambda_sign=-1)
    assert plus.params.lambda_re == pytest.approx(10.0)
    assert minus.params.lambda_re == pytest.approx(-10.0)
    assert minus.params.r == pytest.approx(-plus.params.r)


def test_preset_itat_dispersive_mean_shift():
    base = DriveParams(delta_c=30.0, n_spins=4)
    preset = build_preset(SpinSpace(4), "itat", base, shift_dispersive_mean=True)
    shift = preset.params.chi * (1 + math.sinh(preset.params.r) ** 2)
    assert preset.params.delta_s == pytest.approx(shift)


def test_preset_oat_y_requires_r():
    with pytest.raises(ValidationError, match="requires"):
        build_preset(SpinSpace(4), "oat_y", DriveParams(delta_c=20.0))


def test_preset_oat_y_approaches_y_twist():
    """Test that oat_y at r=3 is -chi e^(2r) Sy^2 up to O(e^(-2r))."""
    space = SpinSpace(10)
    ops = build_spin_operators(space)
    delta_c, _ = drive_from_target(20.0, 3.0)
    preset = build_preset(space, "oat_y", DriveParams(delta_c=delta_c, n_spins=10), r=3.0)

    target = -(preset.params.chi * math.exp(6.0)) * (ops.sy @ ops.sy)
    residual = np.linalg.norm(preset.hamiltonian.matrix - target.matrix, 2)

    assert residual / np.linalg.norm(preset.hamiltonian.matrix, 2) < math.exp(-6.0)


def test_preset_twist_and_turn_adds_turning_term():
    """Test that twist_and_turn is oat_y plus delta_s Sz."""
    space = SpinSpace(4)
    sz = build_spin_operators(space).sz
    delta_c, _ = drive_from_target(20.0, 3.0)
    base = DriveParams(delta_c=delta_c, delta_s=0.5, n_spins=4)

    turned = build_preset(space, "twist_and_turn", base, r=3.0)
    twisted = build_preset(space, "oat_y", base, r=3.0)

    assert turned.params.delta_s == 0.5
    assert twisted.params.delta_s == 0.0
    difference = turned.hamiltonian.matrix - twisted.hamiltonian.matrix
    assert not np.allclose(difference, 0)
    assert np.allclose(difference, 0.5 * sz.matrix, atol=1e-12)


def test_preset_oat_y_warns_at_small_r():
    preset = build_preset(SpinSpace(4), "oat_y", DriveParams(delta_c=20.0), r=0.2)
    assert len(preset.warnings) == 1
    assert "oat_y" in preset.warnings[0]

    quiet = build_preset(SpinSpace(4), "oat_y", DriveParams(delta_c=20.0), r=2.0)
    assert quiet.warnings == []


def test_jump_operator_at_zero_squeezing_is_lowering(space4):
    """Test z[0] = Sx - i Sy = S-."""
    params = bogoliubov_from_drive(20.0, 0.0, kappa=2.0)
    ops = build_spin_operators(space4)

    jumps = build_jump_operators(space4, params)

    assert np.allclose(jumps.z_operator.matrix, ops.sm.matrix)
    assert jumps.collective_rate == pytest.approx(params.gamma_big)
    assert not jumps.has_local_dephasing


def test_default_fock_cutoff_grows_with_r():
    assert default_fock_cutoff(0.0) == 12
    assert default_fock_cutoff(2.0) > default_fock_cutoff(1.0)


def test_full_model_jaynes_cummings_ladder():
    """Test the resonant single-spin spectrum: 0 twice and +/- sqrt(n) g."""
    drive = DriveParams(delta_c=0.0, g=1.0)
    model = build_full_rot_model(SpinSpace(1), 8, drive)

    assert model.hamiltonian.is_hermitian()
    eigenvalues = np.sort(np.linalg.eigvalsh(model.hamiltonian.matrix))
    ladder = np.sqrt(np.arange(1, 8))
    expected = np.sort(np.concatenate([-ladder, [0.0, 0.0], ladder]))
    assert np.allclose(eigenvalues, expected, atol=1e-12)


def test_full_model_rejects_small_cutoff():
    with pytest.raises(ValidationError, match="cutoff"):
        build_full_rot_model(SpinSpace(2), 4, DriveParams(delta_c=20.0))


def test_lab_frame_differs_by_pump_frequency():
    """Test H_lab(t=0) - H_rot = omega_p (c^dag c + Sz)."""
    space = SpinSpace(2)
    drive = DriveParams(delta_c=20.0, lambda_re=5.0, delta_s=0.1)
    rotating = build_full_rot_model(space, 8, drive)

    lab = build_lab_hamiltonian(space, 8, drive, omega_p=3.0)

    expected = 3.0 * (rotating.number_operator() + rotating.spin.sz)
    assert np.allclose((lab - rotating.hamiltonian).matrix, expected.matrix)


def test_squeezed_frame_has_the_rotating_spectrum():
    """Test that both frames share the low-lying spectrum up to the Bogoliubov zero-point shift."""
    space = SpinSpace(2)
    drive = DriveParams(delta_c=20.0, lambda_re=5.0, delta_s=0.1, g=1.0)
    rotating = build_full_rot_model(space, 40, drive).hamiltonian
    squeezed = build_squeezed_frame_hamiltonian(space, 40, drive).hamiltonian

    low_rot = np.sort(np.linalg.eigvalsh(rotating.matrix))[:8]
    low_sq = np.sort(np.linalg.eigvalsh(squeezed.matrix))[:8]

    assert np.allclose(low_rot - low_rot[0], low_sq - low_sq[0], atol=1e-8)
    e_beta = math.sqrt(20.0**2 - 5.0**2)
    assert low_rot[0] - low_sq[0] == pytest.approx((e_beta - 20.0) / 2, abs=1e-8)


def test_squeezed_vacuum_photon_statistics():
    r = 0.5
    populations = np.abs(squeezed_vacuum(r, 60)) ** 2
    n = np.arange(60)

    assert populations[1::2].sum() == 0
    assert populations @ n == pytest.approx(math.sinh(r) ** 2, rel=1e-10)


def test_dispersive_term_vanishes_on_vacuum(space4):
    params = bogoliubov_from_drive(20.0, 0.0)
    vacuum = np.zeros(6)
    vacuum[0] = 1.0
    state = spin_fock_product(coherent_spin_state(space4), vacuum)

    term = build_dispersive_term(space4, 6, params)

    assert term.apply(state).norm() == pytest.approx(0.0, abs=1e-15)
    assert np.allclose(fock_populations(state), vacuum)


def test_truncation_check():
    assert check_fock_truncation(np.array([0.99, 0.01, 0.0, 0.0])) is None
    with pytest.warns(TruncationWarning):
        message = check_fock_truncation(np.array([0.9, 0.05, 0.03, 0.02]))
    assert message is not None and "truncation" in message
