"""Internal validation gates run by ``spinsq verify``."""

import logging
import math
from typing import Callable, List, Literal, Optional, Sequence, Tuple

import numpy as np

from src.config import Settings, settings
from src.domain.models import DriveParams, EffectiveParams, GateResult, IntegratorOptions
from src.domain.states import Basis, BlockDensityMatrix, PureState, SpinSpace
from src.physics.collective_spin import (
    build_spin_operators,
    coherent_spin_state,
    dark_state,
    embed_symmetric,
    sigma_operator,
)
from src.physics.dephasing import local_dephasing_superoperator
from src.physics.dynamics import (
    apply_hahn_echo,
    effective_block_model,
    evolve_bruteforce,
    evolve_lindblad,
    evolve_pure,
    product_jump_operators,
)
from src.physics.metrics import spin_moments, xi_r2
from src.physics.model_builder import (
    ITAT_RATIO,
    bogoliubov_from_drive,
    build_effective_hamiltonian,
    build_full_rot_model,
    build_product_hamiltonian,
    check_fock_truncation,
    drive_for_ratio,
    fock_populations,
    spin_fock_product,
)
from src.physics.schedules import RampSchedule

logger = logging.getLogger(__name__)

Level = Literal["quick", "full"]

ORACLE_TOL = 1e-7
FULL_MODEL_TOL = 0.05
RAMP_TOL = 1e-8
DEPHASING_TOL = 1e-12
DARK_STATE_TOL = 1e-10
CONVERGENCE_TOL = 0.005

TIGHT = IntegratorOptions(rtol=1e-10, atol=1e-12)


def _random_params(rng: np.random.Generator, n_spins: int) -> EffectiveParams:
    e_beta = rng.uniform(5.0, 20.0)
    delta_c, lam = drive_for_ratio(e_beta, rng.uniform(-0.5, 0.5))
    chi = 1.0 / e_beta
    return bogoliubov_from_drive(
        delta_c,
        lam,
        delta_s=chi * rng.uniform(0.0, 2.0),
        g=1.0,
        kappa=rng.uniform(0.5, 10.0),
        gamma_phi=rng.uniform(0.01, 0.5),
        n_spins=n_spins,
    )


def _random_dicke_state(rng: np.random.Generator, space: SpinSpace) -> PureState:
    dim = space.top_j2 + 1
    vector = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return PureState(Basis.dicke(space.n_spins, space.top_j2), vector).normalized()


def oracle_error(params: EffectiveParams, psi0: PureState, n_times: int = 11) -> float:
    """
    Largest moment discrepancy between block and brute-force evolution.

    The window is t chi in [0, 5/N].
    """
    n = params.n_spins
    space = SpinSpace(n)
    times = np.linspace(0.0, 5.0 / (n * params.chi), n_times)

    block = evolve_lindblad(
        effective_block_model(space, params),
        rho0=BlockDensityMatrix.from_pure(space, psi0),
        times=times,
        opts=TIGHT,
    )
    brute = evolve_bruteforce(
        build_product_hamiltonian(n, params),
        product_jump_operators(n, params),
        embed_symmetric(psi0),
        times,
        opts=TIGHT,
    )
    worst = 0.0
    for a, b in zip(block.states, brute.states, strict=True):
        ma, mb = spin_moments(a), spin_moments(b)
        worst = max(
            worst,
            float(np.max(np.abs(ma.mean - mb.mean))),
            float(np.max(np.abs(ma.second_moments - mb.second_moments))),
        )
    return worst


def full_model_xi2(
    n_spins: int = 4, e_beta: float = 20.0, cutoff: int = 16, t_window: float = 4.0
) -> Tuple[float, float, Optional[str]]:
    """
    xi^2 at the effective optimum from the effective and the full cavity model.

    Both runs start from +x (cavity vacuum for the full model) and carry an echo
    at half the optimal time.

    Returns:
        (effective xi^2, full xi^2, truncation warning or None)
    """
    space = SpinSpace(n_spins)
    delta_c, lam = drive_for_ratio(e_beta, ITAT_RATIO)
    chi = 1.0 / e_beta
    drive = DriveParams(delta_c=delta_c, delta_s=chi, lambda_re=lam, g=1.0, n_spins=n_spins)
    params = bogoliubov_from_drive(delta_c, lam, delta_s=chi, g=1.0, n_spins=n_spins)
    opts = IntegratorOptions.for_pure(method="expm_krylov")

    psi0 = coherent_spin_state(space)
    h_eff = build_effective_hamiltonian(space, params)
    scan = np.linspace(0.0, t_window / (n_spins * params.chi_tilde), 401)
    scan_traj = evolve_pure(h_eff, psi0, scan, opts)
    values = [xi_r2(s) for s in scan_traj.states[1:]]
    t_best = float(scan[1 + int(np.argmin(values))])

    times = np.linspace(0.0, t_best, 81)
    effective = apply_hahn_echo(
        lambda s, ts: evolve_pure(h_eff, s, ts, opts), psi0, times, t_pulse=t_best / 2
    )

    model = build_full_rot_model(space, cutoff, drive)
    vacuum = np.zeros(cutoff, dtype=complex)
    vacuum[0] = 1.0
    full = apply_hahn_echo(
        lambda s, ts: evolve_pure(model.hamiltonian, s, ts, opts),
        spin_fock_product(psi0, vacuum),
        times,
        t_pulse=t_best / 2,
    )
    worst = max(full.states, key=lambda s: fock_populations(s)[-2:].sum())
    warning = check_fock_truncation(fock_populations(worst))
    return xi_r2(effective.final), xi_r2(full.final), warning


def ramp_error(r_f: float = 4.0, tau_chi: float = 60.0, e_beta: float = 20.0) -> float:
    """Max of |dr/dt - Im lambda| on a dense grid plus the endpoint conditions."""
    schedule = RampSchedule.in_chi_units(r_f, tau_chi, e_beta)
    tau = schedule.tau_prot
    h = tau * 1e-5
    t = np.linspace(h, tau - h, 2001)
    derivative = (schedule.r(t + h) - schedule.r(t - h)) / (2 * h)
    scale = 30 * r_f / tau
    worst = float(np.max(np.abs(derivative - schedule.lambda_im(t)))) / scale
    endpoints = [
        float(schedule.r(0.0)),
        float(schedule.r(tau)) - r_f,
        float(schedule.lambda_im(0.0)),
        float(schedule.lambda_im(tau)),
    ]
    return max(worst, max(abs(e) for e in endpoints))


def dark_state_residual(n_spins: int, r: float) -> float:
    """||Sigma[r] psi_dark|| for even N."""
    space = SpinSpace(n_spins)
    sigma = sigma_operator(build_spin_operators(space), r)
    return sigma.apply(dark_state(space, r)).norm()


class VerificationService:
    """Service running the oracle and consistency gates."""

    def __init__(self, app_settings: Optional[Settings] = None, seed: int = 20240917):
        """
        Initialize verification service.

        Args:
            app_settings: Settings instance (defaults to the global settings)
            seed: Seed for the random oracle draws
        """
        self.settings = app_settings or settings
        self.seed = seed

    def run(self, level: Level = "quick") -> List[GateResult]:
        """
        Run every gate of a level; a gate that raises is reported as failed.

        Args:
            level: quick (N=4 oracle, model and ramp checks) or full (adds N=2,3 draws,
                the closed-system limit and the tolerance convergence gate)

        Returns:
            List of GateResult objects
        """
        if level == "quick":
            oracle_sizes, draws = [4], 2
        else:
            oracle_sizes, draws = [2, 3, 4], 10
        gates: List[Tuple[str, Callable[[], GateResult]]] = [
            ("oracle", lambda: self.oracle_gate(oracle_sizes, draws)),
            ("full_vs_effective", self.full_model_gate),
            ("ramp", self.ramp_gate),
            ("dephasing", self.dephasing_gate),
            ("dark_state", self.dark_state_gate),
        ]
        if level == "full":
            gates += [
                ("closed_system", self.closed_system_gate),
                ("convergence", self.convergence_gate),
            ]

        results = []
        for name, gate in gates:
            try:
                result = gate()
            except Exception as e:
                logger.error(f"Gate {name} raised: {str(e)}")
                result = GateResult(name=name, passed=False, detail=str(e))
            status = "PASS" if result.passed else "FAIL"
            logger.info(
                f"[{status}] {result.name}: max_error={result.max_error} tol={result.tolerance}"
            )
            results.append(result)
        return results

    def oracle_gate(self, n_values: Sequence[int], draws: int) -> GateResult:
        """Block Lindblad evolution against the 4^N brute force on random drives and states."""
        rng = np.random.default_rng(self.seed)
        worst = 0.0
        for n in n_values:
            space = SpinSpace(n)
            for k in range(draws):
                params = _random_params(rng, n)
                psi0 = coherent_spin_state(space) if k == 0 else _random_dicke_state(rng, space)
                worst = max(worst, oracle_error(params, psi0))
        return GateResult(
            name="oracle",
            passed=worst < ORACLE_TOL,
            max_error=worst,
            tolerance=ORACLE_TOL,
            detail=f"N in {list(n_values)}, {draws} draws each",
        )

    def full_model_gate(self) -> GateResult:
        effective, full, warning = full_model_xi2()
        error = abs(full - effective) / effective
        detail = f"xi2 effective={effective:.6g}, full={full:.6g}"
        if warning:
            detail += f"; {warning}"
        return GateResult(
            name="full_vs_effective",
            passed=error < FULL_MODEL_TOL,
            max_error=error,
            tolerance=FULL_MODEL_TOL,
            detail=detail,
        )

    def ramp_gate(self) -> GateResult:
        error = ramp_error()
        return GateResult(name="ramp", passed=error < RAMP_TOL, max_error=error, tolerance=RAMP_TOL)

    def dephasing_gate(self) -> GateResult:
        """Trace preservation of the block dephasing map and stationarity of the mixed state."""
        worst = 0.0
        for n in range(1, 9):
            space = SpinSpace(n)
            dephasing = local_dephasing_superoperator(space, 1.0)
            worst = max(worst, dephasing.trace_defect())
            mixed = BlockDensityMatrix.maximally_mixed(space)
            rates = dephasing.apply(mixed.blocks)
            worst = max(worst, max(float(np.max(np.abs(v))) for v in rates.values()))
        return GateResult(
            name="dephasing", passed=worst < DEPHASING_TOL, max_error=worst, tolerance=DEPHASING_TOL
        )

    def dark_state_gate(self) -> GateResult:
        worst = max(dark_state_residual(n, 4.0) for n in (10, 20, 40))
        return GateResult(
            name="dark_state",
            passed=worst < DARK_STATE_TOL,
            max_error=worst,
            tolerance=DARK_STATE_TOL,
        )

    def closed_system_gate(self) -> GateResult:
        """Lindblad evolution without dissipation against Schroedinger evolution."""
        n = 6
        space = SpinSpace(n)
        delta_c, lam = drive_for_ratio(20.0, ITAT_RATIO)
        params = bogoliubov_from_drive(delta_c, lam, delta_s=0.05, g=1.0, n_spins=n)
        times = np.linspace(0.0, 3.0 / (n * params.chi_tilde), 21)
        psi0 = coherent_spin_state(space)
        pure = evolve_pure(build_effective_hamiltonian(space, params), psi0, times, TIGHT)
        mixed = evolve_lindblad(
            effective_block_model(space, params, dissipation=False),
            rho0=BlockDensityMatrix.from_pure(space, psi0),
            times=times,
            opts=TIGHT,
        )
        worst = max(
            float(np.max(np.abs(spin_moments(a).second_moments - spin_moments(b).second_moments)))
            for a, b in zip(pure.states, mixed.states, strict=True)
        )
        tolerance = 10 * TIGHT.rtol * n**2
        return GateResult(
            name="closed_system", passed=worst < tolerance, max_error=worst, tolerance=tolerance
        )

    def convergence_gate(self) -> GateResult:
        """Tightening the Lindblad tolerances tenfold moves min xi^2 by under 0.5%."""
        n = 10
        space = SpinSpace(n)
        e_beta = 3.0 * math.sqrt(n)
        delta_c, lam = drive_for_ratio(e_beta, ITAT_RATIO)
        params = bogoliubov_from_drive(
            delta_c, lam, delta_s=1.0 / e_beta, g=1.0, kappa=10.0, gamma_phi=0.02, n_spins=n
        )
        model = effective_block_model(space, params)
        times = np.linspace(0.0, 5.0 / (n * params.chi_tilde), 101)
        rho0 = BlockDensityMatrix.from_pure(space, coherent_spin_state(space))

        def best(opts: IntegratorOptions) -> float:
            trajectory = evolve_lindblad(model, rho0=rho0, times=times, opts=opts)
            return min(xi_r2(s) for s in trajectory.states[1:])

        default = IntegratorOptions.for_lindblad()
        coarse, fine = best(default), best(default.tightened(10.0))
        error = abs(coarse - fine) / fine
        return GateResult(
            name="convergence",
            passed=error < CONVERGENCE_TOL,
            max_error=error,
            tolerance=CONVERGENCE_TOL,
            detail=f"min xi2 {coarse:.8g} vs {fine:.8g}",
        )


def all_passed(results: Sequence[GateResult]) -> bool:
    return all(r.passed for r in results)
