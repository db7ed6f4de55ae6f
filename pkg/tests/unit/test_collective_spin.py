"""Tests for collective spin algebra and reference states."""

import numpy as np
import pytest

from src.domain.exceptions import NoDarkState, ValidationError
from src.domain.states import SpinSpace
from src.physics.collective_spin import (
    build_product_operators,
    build_spin_operators,
    coherent_spin_state,
    dark_state,
    embed_symmetric,
    local_sigma_z,
    sigma_operator,
    symmetric_isometry,
)


@pytest.mark.parametrize("n_spins,j", [(4, 2.0), (4, 1.0), (5, 1.5), (1, 0.5)])
def test_angular_momentum_commutators(n_spins, j):
    """Test [Sx, Sy] = i Sz and S^2 = j(j+1)."""
    ops = build_spin_operators(SpinSpace(n_spins), j)
    sx, sy, sz = ops.cartesian()

    assert np.allclose(sx.commutator(sy).matrix, 1j * sz.matrix)
    assert np.allclose(sy.commutator(sz).matrix, 1j * sx.matrix)
    casimir = sx @ sx + sy @ sy + sz @ sz
    assert np.allclose(casimir.matrix, ops.s2.matrix)
    assert np.allclose(ops.s2.matrix, j * (j + 1) * np.eye(int(2 * j + 1)))


def test_ladder_acts_upward(space4):
    """Test that S+ raises m by one (ascending-m ordering)."""
    ops = build_spin_operators(space4)
    bottom = np.zeros(5)
    bottom[0] = 1.0
    raised = ops.sp.matrix @ bottom
    assert raised[1] == pytest.approx(2.0)  # sqrt(j(j+1) - m(m+1)) at j=2, m=-2


def test_coherent_state_along_x():
    """Test that the default coherent state has <Sx> = N/2 and Var(Sy) = N/4."""
    space = SpinSpace(10)
    ops = build_spin_operators(space)
    psi = coherent_spin_state(space)

    assert ops.sx.expectation(psi).real == pytest.approx(5.0)
    assert ops.sz.expectation(psi).real == pytest.approx(0.0, abs=1e-12)
    assert (ops.sy @ ops.sy).expectation(psi).real == pytest.approx(2.5)


def test_coherent_state_large_block_is_finite():
    psi = coherent_spin_state(SpinSpace(2000))
    assert np.all(np.isfinite(psi.vector))
    assert psi.norm() == pytest.approx(1.0)


@pytest.mark.parametrize("n_spins,r", [(2, 0.5), (10, 1.0), (20, 4.0), (40, 4.0)])
def test_dark_state_is_annihilated(n_spins, r):
    """Test ||Sigma psi|| stays at round-off level, including large r."""
    space = SpinSpace(n_spins)
    ops = build_spin_operators(space)
    psi = dark_state(space, r)

    residual = sigma_operator(ops, r).apply(psi).norm()

    assert psi.norm() == pytest.approx(1.0)
    assert residual < 1e-10


def test_dark_state_recursion_directions_agree():
    space = SpinSpace(20)
    up = dark_state(space, 2.5, direction="up")
    down = dark_state(space, 2.5, direction="down")
    assert np.allclose(up.vector, down.vector, atol=1e-12)


def test_dark_state_at_zero_squeezing_is_spin_down():
    psi = dark_state(SpinSpace(6), 0.0)
    assert psi.vector[0] == 1.0
    assert np.count_nonzero(psi.vector) == 1


def test_dark_state_odd_n_raises():
    with pytest.raises(NoDarkState, match="odd"):
        dark_state(SpinSpace(5), 1.0)


def test_dark_state_negative_r_raises():
    with pytest.raises(ValidationError):
        dark_state(SpinSpace(4), -0.1)


def test_product_operators_spectrum_for_three_spins():
    """Test collective product operators and their spectrum for N=3."""
    ops = build_product_operators(3)
    sx, sy, sz = ops.cartesian()

    assert np.allclose(sx.commutator(sy).matrix, 1j * sz.matrix)
    eigenvalues = np.sort(np.linalg.eigvalsh(ops.s2.matrix))
    # one j=3/2 quartet and two j=1/2 doublets
    assert np.allclose(eigenvalues, [0.75] * 4 + [3.75] * 4)
    assert np.allclose(sum(z.matrix for z in local_sigma_z(3)), 2 * sz.matrix)


def test_symmetric_isometry_is_orthonormal():
    isometry = symmetric_isometry(4)
    assert np.allclose(isometry.conj().T @ isometry, np.eye(5))


def test_embed_symmetric_intertwines_operators(space4):
    """Test that block operators and product operators agree on embedded states."""
    block_ops = build_spin_operators(space4)
    product_ops = build_product_operators(4)
    psi = coherent_spin_state(space4, theta=1.1, phi=0.4)

    embedded = embed_symmetric(psi)

    for name in ("sx", "sy", "sz"):
        block_value = getattr(block_ops, name).expectation(psi)
        product_value = getattr(product_ops, name).expectation(embedded)
        assert product_value == pytest.approx(block_value, abs=1e-12)


def test_embed_symmetric_rejects_lower_block(space4):
    psi = coherent_spin_state(space4, j=1.0)
    with pytest.raises(ValidationError):
        embed_symmetric(psi)
