"""Protocol runs: constant-drive twisting and the adiabatic dark-state ramp."""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd

from src.config import Settings, settings
from src.domain.exceptions import ApplicationError, ConfigError, NoDarkState, ValidationError
from src.domain.models import (
    DriveParams,
    EffectiveParams,
    IntegratorOptions,
    ModelSection,
    ProtocolSection,
    RunConfig,
)
from src.domain.states import BlockDensityMatrix, PureState, SpinMoments, SpinSpace, SqueezingTrace
from src.physics.collective_spin import build_spin_operators, coherent_spin_state, dark_state
from src.physics.dynamics import (
    BlockModel,
    apply_hahn_echo,
    effective_block_model,
    evolve_lindblad,
    evolve_pure,
)
from src.physics.metrics import spin_moments, squeezing_trace, xi_r2
from src.physics.model_builder import (
    ITAT_RATIO,
    build_preset,
    check_fock_truncation,
    default_fock_cutoff,
    drive_for_ratio,
    drive_from_target,
    squeezed_vacuum,
)
from src.physics.schedules import RampSchedule, minimum_gap

logger = logging.getLogger(__name__)

DISPERSIVE_WEIGHT_FLOOR = 1e-14


@dataclass
class RunResult:
    """A squeezing trace with the parameters and diagnostics that produced it."""

    kind: str
    trace: SqueezingTrace
    params: EffectiveParams
    summary: Dict[str, Any] = field(default_factory=dict)
    warnings: List[str] = field(default_factory=list)
    stats: Dict[str, Any] = field(default_factory=dict)
    extra_columns: Dict[str, np.ndarray] = field(default_factory=dict)

    def to_frame(self) -> pd.DataFrame:
        frame = self.trace.to_frame()
        for name, values in self.extra_columns.items():
            frame[name] = values
        return frame


def base_drive(model: ModelSection, protocol: ProtocolSection) -> DriveParams:
    """
    Physical drive realizing the configured Bogoliubov energy for a preset.

    Args:
        model: [model] section (E_beta, g, rates, optional lambda/delta_c and delta_s)
        protocol: [protocol] section (preset, sign, r)

    Returns:
        DriveParams: Drive whose Bogoliubov energy equals model.e_beta

    Raises:
        ConfigError: If a preset that needs r has none, or twist_and_turn has no delta_s
    """
    e_beta, kind = model.e_beta, protocol.preset
    if kind == "oat_z":
        delta_c, lam = e_beta, 0.0
    elif kind == "itat":
        delta_c, lam = drive_for_ratio(e_beta, protocol.lambda_sign * ITAT_RATIO)
    elif kind in ("oat_y", "twist_and_turn"):
        if protocol.r is None:
            raise ConfigError(f"protocol.r: required for preset {kind}")
        delta_c, lam = drive_from_target(e_beta, protocol.r)
    else:
        delta_c, lam = drive_for_ratio(e_beta, model.lambda_ratio or 0.0)

    chi = model.g**2 / e_beta
    if kind == "twist_and_turn" and model.delta_s is None:
        raise ConfigError("model.delta_s: required for preset twist_and_turn")
    if model.delta_s is not None:
        if kind in ("oat_z", "itat", "oat_y"):
            logger.warning(f"model.delta_s is ignored by preset {kind}")
        delta_s = model.delta_s
    else:
        delta_s = 0.0 if kind == "oat_y" else chi

    return DriveParams(
        delta_c=delta_c,
        delta_s=delta_s,
        lambda_re=lam,
        g=model.g,
        kappa=model.kappa,
        gamma_phi=model.gamma_phi,
        n_spins=model.n_spins,
    )


def initial_state(space: SpinSpace, label: Optional[str], default: str) -> PureState:
    kind = label or default
    theta = math.pi if kind == "down_z" else math.pi / 2
    return coherent_spin_state(space, theta=theta, phi=0.0)


def constant_drive_times(params: EffectiveParams, t_final: float, n_times: int) -> np.ndarray:
    """Uniform grid with t_final in units of 1/(N chi_tilde), returned in units of 1/g."""
    if params.chi_tilde <= 0:
        raise ValidationError(f"chi_tilde must be positive, got {params.chi_tilde}")
    return np.linspace(0.0, t_final, n_times) / (params.n_spins * params.chi_tilde)


def dispersive_components(
    params: EffectiveParams, cutoff: Optional[int]
) -> Tuple[List[Tuple[float, int]], int, Optional[str]]:
    """
    Photon-number weights of the Bogoliubov mode prepared from the cavity vacuum.

    The dispersive term conserves the photon number, so the spin evolves as a mixture
    over n of trajectories under H - chi n Sz.
    """
    cutoff = cutoff or default_fock_cutoff(params.r)
    populations = np.abs(squeezed_vacuum(params.r, cutoff)) ** 2
    warning = check_fock_truncation(populations)
    components = [
        (float(p), n) for n, p in enumerate(populations) if p > DISPERSIVE_WEIGHT_FLOOR
    ]
    return components, cutoff, warning


class ProtocolService:
    """Service running constant-drive and adiabatic protocols."""

    def __init__(self, app_settings: Optional[Settings] = None):
        """
        Initialize protocol service.

        Args:
            app_settings: Settings instance (defaults to the global settings)
        """
        self.settings = app_settings or settings

    def run(self, config: RunConfig) -> RunResult:
        """Dispatch a validated configuration to its protocol."""
        if config.protocol.kind == "adiabatic":
            return self.run_adiabatic(config)
        return self.run_constant_drive(config)

    def run_constant_drive(self, config: RunConfig) -> RunResult:
        """
        Constant parametric drive from a coherent state.

        Coherent runs evolve the j=N/2 block; dissipative runs evolve the block
        density matrix with the collective jump and local dephasing. With echo on, a
        pi pulse about x is applied at half the final time.

        Args:
            config: Run configuration with protocol.kind == "constant"

        Returns:
            RunResult: Trace with t exported in units of 1/chi

        Raises:
            ApplicationError: If the run fails
        """
        model, protocol = config.model, config.protocol
        try:
            logger.info(
                f"Constant drive: N={model.n_spins}, preset={protocol.preset}, "
                f"E_beta={model.e_beta}, dissipation={protocol.dissipation}, echo={protocol.echo}"
            )
            space = SpinSpace(model.n_spins)
            preset = build_preset(
                space,
                protocol.preset,
                base_drive(model, protocol),
                r=protocol.r,
                lambda_sign=protocol.lambda_sign,
                shift_dispersive_mean=protocol.shift_dispersive_mean,
                oat_y_warn_threshold=self.settings.oat_y_warn_threshold,
            )
            params = preset.params
            warnings = list(preset.warnings)
            times = constant_drive_times(params, protocol.t_final, protocol.n_times)
            psi0 = initial_state(space, protocol.initial_state, "plus_x")

            components: List[Tuple[float, int]] = [(1.0, 0)]
            cutoff = None
            if protocol.dispersive:
                components, cutoff, warning = dispersive_components(params, model.fock_cutoff)
                if warning:
                    logger.warning(warning)
                    warnings.append(warning)

            default_opts = (
                IntegratorOptions.for_lindblad()
                if protocol.dissipation
                else IntegratorOptions.for_pure(method="expm_krylov")
            )
            opts = config.integrator.resolve(default_opts)

            moments, stats, run_warnings = self._evolve_mixture(
                space, preset.hamiltonian, params, psi0, times, components, opts, protocol
            )
            warnings.extend(run_warnings)

            trace = squeezing_trace(times, moments, time_scale=params.chi)
            summary = self._summarize(trace, params, scale=params.n_spins * params.chi_tilde)
            summary.update(
                {
                    "preset": protocol.preset,
                    "echo": protocol.echo,
                    "dissipation": protocol.dissipation,
                    "dispersive": protocol.dispersive,
                    "fock_cutoff": cutoff,
                }
            )
            logger.info(
                f"Constant drive finished: min xi^2={summary['min_xi2']:.6g} "
                f"({summary['min_xi2_db']:.3f} dB) at chi t={summary['t_best_chi']:.6g}"
            )
            return RunResult(
                kind="constant",
                trace=trace,
                params=params,
                summary=summary,
                warnings=warnings,
                stats=stats,
            )
        except ApplicationError:
            raise
        except Exception as e:
            logger.error(f"Constant-drive run failed: {str(e)}")
            raise ApplicationError(f"Constant-drive run failed: {str(e)}") from e

    def _evolve_mixture(
        self,
        space: SpinSpace,
        hamiltonian,
        params: EffectiveParams,
        psi0: PureState,
        times: np.ndarray,
        components: List[Tuple[float, int]],
        opts: IntegratorOptions,
        protocol: ProtocolSection,
    ) -> Tuple[List[SpinMoments], Dict[str, Any], List[str]]:
        block_model = effective_block_model(space, params) if protocol.dissipation else None
        weights, per_component, warnings = [], [], []
        stats: Dict[str, Any] = {"components": len(components)}

        for weight, photons in components:
            evolve = self._component_evolver(space, hamiltonian, params, block_model, photons, opts)
            start = BlockDensityMatrix.from_pure(space, psi0) if block_model else psi0
            if protocol.echo:
                trajectory = apply_hahn_echo(evolve, start, times, t_pulse=times[-1] / 2)
            else:
                trajectory = evolve(start, times)
            weights.append(weight)
            per_component.append([spin_moments(s) for s in trajectory.states])
            warnings.extend(trajectory.warnings)
            for key, value in trajectory.stats.to_dict().items():
                if isinstance(value, (int, float)) and not isinstance(value, bool):
                    stats[key] = stats.get(key, 0) + value
                else:
                    stats[key] = value

        if len(per_component) == 1:
            return per_component[0], stats, warnings
        total = sum(weights)
        normalized = [w / total for w in weights]
        moments = [
            SpinMoments.mixture(normalized, [series[k] for series in per_component])
            for k in range(len(times))
        ]
        return moments, stats, warnings

    @staticmethod
    def _component_evolver(
        space: SpinSpace,
        hamiltonian,
        params: EffectiveParams,
        block_model: Optional[BlockModel],
        photons: int,
        opts: IntegratorOptions,
    ) -> Callable:
        shift = params.chi * photons
        if block_model is None:
            h = hamiltonian
            if photons:
                h = hamiltonian - shift * build_spin_operators(space).sz
            return lambda state, ts: evolve_pure(h, state, ts, opts)

        model = block_model
        if photons:
            shifted = {
                j2: op - shift * build_spin_operators(space, j2 / 2).sz
                for j2, op in block_model.hamiltonians.items()
            }
            model = BlockModel(space, shifted, block_model.jumps, block_model.dephasing)
        return lambda state, ts: evolve_lindblad(model, rho0=state, times=ts, opts=opts)

    @staticmethod
    def _summarize(trace: SqueezingTrace, params: EffectiveParams, scale: float) -> Dict[str, Any]:
        summary: Dict[str, Any] = {"effective_params": params.model_dump()}
        if np.all(np.isnan(trace.xi2)):
            summary.update({"min_xi2": math.nan, "min_xi2_db": math.nan})
            return summary
        best = trace.best_index()
        summary.update(
            {
                "min_xi2": float(trace.xi2[best]),
                "min_xi2_db": float(10 * np.log10(trace.xi2[best])),
                "t_best": float(trace.times[best]),
                "t_best_chi": float(trace.times[best] * params.chi),
                "t_best_scaled": float(trace.times[best] * scale),
                "theta_best": float(trace.theta_opt[best]),
                "final_xi2": float(trace.xi2[-1]),
            }
        )
        return summary

    def run_adiabatic(self, config: RunConfig) -> RunResult:
        """
        Ramp r(t) from 0 to r_f at constant E_beta starting from |N/2, -N/2>.

        The Hamiltonian at each instant is -chi Sigma^dag[r(t)] Sigma[r(t)]. For even N
        the trace carries the instantaneous dark-state reference and the summary the
        final overlap with the target dark state.

        Args:
            config: Run configuration with protocol.kind == "adiabatic"

        Returns:
            RunResult: Trace with extra columns r and xi2_dark

        Raises:
            ConfigError: If dissipation or the dispersive term is requested
            ApplicationError: If the run fails
        """
        model, protocol = config.model, config.protocol
        if protocol.dissipation or protocol.dispersive:
            raise ConfigError(
                "protocol.dissipation/dispersive: not supported for the adiabatic ramp"
            )
        try:
            logger.info(
                f"Adiabatic ramp: N={model.n_spins}, r_f={protocol.r_f}, "
                f"chi tau={protocol.tau_prot}"
            )
            space = SpinSpace(model.n_spins)
            schedule = RampSchedule.in_chi_units(
                protocol.r_f, protocol.tau_prot, model.e_beta, model.g
            )
            params = EffectiveParams(
                r=protocol.r_f,
                e_beta=model.e_beta,
                chi=schedule.chi,
                chi_tilde=schedule.chi * math.cosh(2 * protocol.r_f),
                delta_tilde=float(schedule.delta_s(schedule.tau_prot)) - schedule.chi,
                gamma_big=0.0,
                cooperativity=math.inf,
                delta_c=float(schedule.delta_c(schedule.tau_prot)),
                lambda_re=float(schedule.lambda_re(schedule.tau_prot)),
                delta_s=float(schedule.delta_s(schedule.tau_prot)),
                g=model.g,
                kappa=0.0,
                gamma_phi=0.0,
                n_spins=model.n_spins,
            )
            times = np.linspace(0.0, schedule.tau_prot, protocol.n_times)
            psi0 = initial_state(space, protocol.initial_state, "down_z")
            opts = config.integrator.resolve(
                IntegratorOptions.for_pure(
                    method="expm_krylov", max_step=schedule.tau_prot / protocol.n_steps
                )
            )
            trajectory = evolve_pure(schedule.hamiltonian(space), psi0, times, opts)
            trace = squeezing_trace(times, trajectory.states, time_scale=schedule.chi)

            radii = schedule.r(times)
            summary = self._summarize(trace, params, scale=schedule.chi)
            summary.update(
                {
                    "r_f": protocol.r_f,
                    "tau_chi": protocol.tau_prot,
                    "adiabaticity": protocol.tau_prot * minimum_gap(schedule, space),
                    "final_xi2_db": float(10 * np.log10(trace.xi2[-1])),
                }
            )
            extra = {"r": radii}
            warnings: List[str] = []
            try:
                references = [dark_state(space, float(r)) for r in radii]
                extra["xi2_dark"] = np.array([xi_r2(state) for state in references])
                summary["final_fidelity"] = trajectory.final.fidelity(references[-1])
            except NoDarkState:
                message = f"No dark-state reference for odd N={model.n_spins}"
                logger.info(message)
                warnings.append(message)

            logger.info(
                f"Adiabatic ramp finished: final xi^2={summary['final_xi2']:.6g}, "
                f"fidelity={summary.get('final_fidelity', 'n/a')}"
            )
            return RunResult(
                kind="adiabatic",
                trace=trace,
                params=params,
                summary=summary,
                warnings=warnings,
                stats=trajectory.stats.to_dict(),
                extra_columns=extra,
            )
        except ApplicationError:
            raise
        except Exception as e:
            logger.error(f"Adiabatic run failed: {str(e)}")
            raise ApplicationError(f"Adiabatic run failed: {str(e)}") from e


def run_constant_drive(config: RunConfig) -> RunResult:
    return ProtocolService().run_constant_drive(config)


def run_adiabatic(config: RunConfig) -> RunResult:
    return ProtocolService().run_adiabatic(config)
