"""Tests for the small-fluctuation theory of dissipative two-axis twisting."""

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from src.domain.exceptions import OptimumUnbounded, ValidationError
from src.physics.linearized import (
    SQUEEZED_ANGLE,
    drive_vector,
    itat_params,
    linearized_xi2,
    min_xi2,
    moment_matrix,
    moment_ode_solve,
    optimal_e_beta,
    steady_state_min_variance,
)
from src.physics.model_builder import bogoliubov_from_drive


def test_min_xi2_closed_form():
    """Test min xi^2 = sqrt(2/C) at kappa=10, gamma_phi=0.02, N=1 (C=5)."""
    assert min_xi2(1, 1.0, 10.0, 0.02) == pytest.approx(math.sqrt(0.4), rel=1e-12)


def test_optimal_e_beta_closed_form():
    assert optimal_e_beta(1, 1.0, 10.0, 0.02) == pytest.approx(math.sqrt(500.0), rel=1e-12)
    assert optimal_e_beta(30, 1.0, 10.0, 0.02) == pytest.approx(
        math.sqrt(30) * math.sqrt(500.0), rel=1e-12
    )


@pytest.mark.parametrize("n_spins", [1, 10, 30, 400])
def test_steady_state_at_optimum_equals_minimum(n_spins):
    e_star = optimal_e_beta(n_spins, 1.0, 10.0, 0.02)
    value = linearized_xi2(e_star, n_spins, 1.0, 10.0, 0.02)
    assert value == pytest.approx(min_xi2(n_spins, 1.0, 10.0, 0.02), rel=1e-12)


def test_optimum_is_a_minimum():
    e_star = optimal_e_beta(20, 1.0, 10.0, 0.02)
    curve = linearized_xi2(e_star * np.array([0.5, 1.0, 2.0]), 20, 1.0, 10.0, 0.02)
    assert curve[1] < curve[0]
    assert curve[1] < curve[2]


@pytest.mark.parametrize("kappa,gamma_phi", [(0.0, 0.02), (10.0, 0.0)])
def test_optimum_needs_both_loss_channels(kappa, gamma_phi):
    with pytest.raises(OptimumUnbounded):
        optimal_e_beta(10, 1.0, kappa, gamma_phi)
    with pytest.raises(OptimumUnbounded):
        min_xi2(10, 1.0, kappa, gamma_phi)


def test_steady_variance_matches_steady_xi2():
    params = itat_params(50.0, 20, kappa=10.0, gamma_phi=0.02)
    xi2 = 4 * steady_state_min_variance(params) / 20
    assert xi2 == pytest.approx(linearized_xi2(50.0, 20, 1.0, 10.0, 0.02), rel=1e-12)


def test_moment_solution_starts_coherent():
    params = itat_params(30.0, 12, kappa=10.0, gamma_phi=0.02)
    moments = moment_ode_solve(params, np.array([0.0]))

    assert moments.vyy[0] == pytest.approx(3.0)
    assert moments.vzz[0] == pytest.approx(3.0)
    assert moments.vyz[0] == pytest.approx(0.0)
    assert moments.xi2[0] == pytest.approx(1.0)


def test_moment_solution_solves_the_ode():
    """Test the closed form against a direct integration of dv/dt = M v + b."""
    params = itat_params(30.0, 12, kappa=10.0, gamma_phi=0.02)
    matrix, b = moment_matrix(params), drive_vector(params)
    t_grid = np.linspace(0.0, 2.0 / (12 * params.chi_tilde), 9)

    reference = solve_ivp(
        lambda t, v: matrix @ v + b,
        (0.0, t_grid[-1]),
        np.array([3.0, 3.0, 0.0]),
        t_eval=t_grid,
        rtol=1e-12,
        atol=1e-12,
    )
    moments = moment_ode_solve(params, t_grid)

    assert np.allclose(moments.vyy, reference.y[0], rtol=1e-8)
    assert np.allclose(moments.vzz, reference.y[1], rtol=1e-8)
    assert np.allclose(moments.vyz, reference.y[2], rtol=1e-8, atol=1e-10)


def test_squeezed_variance_relaxes_to_floor():
    params = itat_params(30.0, 12, kappa=10.0, gamma_phi=0.02)
    late = 15.0 / (12 * params.chi_tilde)
    moments = moment_ode_solve(params, np.array([late]))
    assert moments.variance_at(SQUEEZED_ANGLE)[0] == pytest.approx(
        steady_state_min_variance(params), rel=1e-6
    )


def test_non_itat_parameters_rejected():
    params = bogoliubov_from_drive(20.0, 0.0, n_spins=10)
    with pytest.raises(ValidationError, match="tanh"):
        moment_ode_solve(params, np.array([0.0, 1.0]))
