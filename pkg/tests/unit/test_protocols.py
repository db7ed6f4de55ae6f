"""Tests for the protocol service."""

import logging
import math
from unittest.mock import patch

import numpy as np
import pytest

from src.domain.exceptions import ApplicationError, ConfigError
from src.domain.models import ModelSection, ProtocolSection, RunConfig
from src.domain.states import SpinSpace
from src.physics.collective_spin import build_spin_operators
from src.physics.model_builder import build_effective_hamiltonian
from src.physics.schedules import RampSchedule
from src.services.protocols import (
    ProtocolService,
    base_drive,
    constant_drive_times,
    dispersive_components,
    initial_state,
)


@pytest.fixture
def protocol_service(test_settings):
    return ProtocolService(test_settings)


def test_base_drive_oat_z():
    drive = base_drive(ModelSection(n_spins=4, e_beta=20.0), ProtocolSection(preset="oat_z"))
    assert drive.delta_c == 20.0
    assert drive.lambda_re == 0.0
    assert drive.delta_s == pytest.approx(0.05)


def test_base_drive_itat_keeps_bogoliubov_energy():
    drive = base_drive(ModelSection(n_spins=4, e_beta=20.0), ProtocolSection(preset="itat"))
    assert drive.lambda_re / drive.delta_c == pytest.approx(1 / 3)
    assert math.sqrt(drive.delta_c**2 - drive.lambda_re**2) == pytest.approx(20.0)


def test_base_drive_custom_ratio():
    drive = base_drive(
        ModelSection(n_spins=4, e_beta=20.0, lambda_ratio=0.92), ProtocolSection(preset="custom")
    )
    assert drive.lambda_re / drive.delta_c == pytest.approx(0.92)


def test_base_drive_oat_y_needs_r():
    with pytest.raises(ConfigError, match="protocol.r"):
        base_drive(ModelSection(n_spins=4), ProtocolSection(preset="oat_y"))


def test_base_drive_twist_and_turn_needs_delta_s():
    protocol = ProtocolSection(preset="twist_and_turn", r=3.0)
    with pytest.raises(ConfigError, match="model.delta_s"):
        base_drive(ModelSection(n_spins=4), protocol)

    drive = base_drive(ModelSection(n_spins=4, delta_s=0.4), protocol)
    assert drive.delta_s == 0.4
    assert math.tanh(2 * 3.0) == pytest.approx(drive.lambda_re / drive.delta_c)


def test_base_drive_delta_s_override_warns(caplog):
    with caplog.at_level(logging.WARNING):
        drive = base_drive(
            ModelSection(n_spins=4, delta_s=0.3), ProtocolSection(preset="itat")
        )
    assert drive.delta_s == 0.3
    assert "ignored" in caplog.text


def test_initial_states():
    space = SpinSpace(4)
    sz = build_spin_operators(space).sz
    assert sz.expectation(initial_state(space, None, "down_z")).real == pytest.approx(-2.0)
    assert sz.expectation(initial_state(space, "plus_x", "down_z")).real == pytest.approx(0.0)


def test_constant_drive_times_are_scaled(itat_params):
    params = itat_params(n_spins=10)
    times = constant_drive_times(params, 4.0, 5)
    assert times[-1] * 10 * params.chi_tilde == pytest.approx(4.0)
    assert len(times) == 5


def test_dispersive_components_cover_even_photon_numbers(itat_params):
    params = itat_params(n_spins=10)
    components, cutoff, warning = dispersive_components(params, None)

    assert cutoff == 12
    assert warning is None
    assert sum(w for w, _ in components) == pytest.approx(1.0)
    assert all(n % 2 == 0 for _, n in components)
    mean = sum(w * n for w, n in components)
    assert mean == pytest.approx(math.sinh(params.r) ** 2, rel=1e-5)


def test_coherent_itat_run(protocol_service, constant_config):
    config = constant_config(n_spins=10)

    result = protocol_service.run(config)

    frame = result.to_frame()
    assert len(frame) == 41
    assert frame["xi2"].iloc[0] == pytest.approx(1.0)
    assert result.summary["min_xi2"] < 1.0
    assert result.summary["t_best_scaled"] <= 4.0 + 1e-12
    chi, chi_tilde = result.params.chi, result.params.chi_tilde
    assert result.summary["t_best_chi"] == pytest.approx(result.summary["t_best"] * chi)
    assert frame["t"].iloc[-1] == pytest.approx(4.0 / (10 * chi_tilde) * chi)
    assert result.kind == "constant"
    assert result.warnings == []


def test_zero_lambda_custom_matches_oat(protocol_service, constant_config):
    oat = protocol_service.run(constant_config(n_spins=8, preset="oat_z"))
    custom = protocol_service.run(constant_config(n_spins=8, preset="custom"))
    assert np.allclose(oat.trace.xi2, custom.trace.xi2, atol=1e-12)


def test_echo_does_not_change_coherent_squeezing(protocol_service, constant_config):
    echoed = protocol_service.run(constant_config(n_spins=10, echo=True))
    plain = protocol_service.run(constant_config(n_spins=10, echo=False))
    assert echoed.summary["final_xi2"] == pytest.approx(plain.summary["final_xi2"], abs=1e-8)


def test_dissipative_run(protocol_service):
    config = RunConfig(
        model=ModelSection(n_spins=4, e_beta=10.0, kappa=10.0, gamma_phi=0.02),
        protocol=ProtocolSection(dissipation=True, t_final=3.0, n_times=16),
    )

    result = protocol_service.run(config)

    assert result.summary["dissipation"] is True
    assert 0 < result.summary["min_xi2"] < 1.0
    assert result.stats["method"] == "adaptive_rk"


def test_dispersive_run_mixes_photon_numbers(protocol_service, constant_config):
    result = protocol_service.run(constant_config(n_spins=10, dispersive=True))

    assert result.stats["components"] > 1
    assert result.summary["fock_cutoff"] == 12
    assert result.summary["min_xi2"] < 1.0


def test_adiabatic_ramp_follows_dark_state(protocol_service):
    config = RunConfig(
        model=ModelSection(n_spins=6, e_beta=20.0),
        protocol=ProtocolSection(
            kind="adiabatic", r_f=1.5, tau_prot=60.0, n_times=31, n_steps=3000
        ),
    )

    result = protocol_service.run(config)

    frame = result.to_frame()
    assert {"r", "xi2_dark"} <= set(frame.columns)
    assert frame["r"].iloc[-1] == pytest.approx(1.5)
    assert result.summary["final_fidelity"] > 0.99
    assert result.summary["final_xi2"] < 1.0
    assert result.summary["adiabaticity"] > 0


def test_adiabatic_odd_n_skips_reference(protocol_service):
    config = RunConfig(
        model=ModelSection(n_spins=5, e_beta=20.0),
        protocol=ProtocolSection(
            kind="adiabatic", r_f=1.0, tau_prot=20.0, n_times=11, n_steps=500
        ),
    )

    result = protocol_service.run(config)

    assert "xi2_dark" not in result.to_frame().columns
    assert "final_fidelity" not in result.summary
    assert any("odd N=5" in w for w in result.warnings)


def test_adiabatic_params_reproduce_final_ramp_hamiltonian(protocol_service):
    config = RunConfig(
        model=ModelSection(n_spins=5, e_beta=20.0),
        protocol=ProtocolSection(
            kind="adiabatic", r_f=1.0, tau_prot=20.0, n_times=11, n_steps=500
        ),
    )
    space = SpinSpace(5)
    schedule = RampSchedule.in_chi_units(1.0, 20.0, 20.0)

    params = protocol_service.run(config).params

    assert params.delta_s == 0.0
    assert params.delta_tilde == pytest.approx(-params.chi)
    reported = build_effective_hamiltonian(space, params).matrix
    ramp = schedule.hamiltonian(space)(schedule.tau_prot).matrix
    assert np.allclose(reported, ramp, atol=1e-9)


def test_adiabatic_rejects_dissipation(protocol_service):
    config = RunConfig(
        model=ModelSection(n_spins=6),
        protocol=ProtocolSection(kind="adiabatic", dissipation=True),
    )
    with pytest.raises(ConfigError):
        protocol_service.run(config)


def test_unexpected_failure_is_wrapped(protocol_service, constant_config):
    with patch("src.services.protocols.build_preset", side_effect=RuntimeError("boom")):
        with pytest.raises(ApplicationError, match="Constant-drive run failed: boom"):
            protocol_service.run(constant_config(n_spins=4))
