"""Time evolution: pure states, permutation-invariant Lindblad blocks and a product-basis oracle."""

import logging
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Dict, List, Mapping, Optional, Sequence, Union

import numpy as np
from scipy import linalg, sparse

from src.adapters.integrators import (
    IntegratorStats,
    check_time_grid,
    integrate_ode,
    propagate_eigh,
    propagate_expm_multiply,
    propagate_piecewise,
)
from src.config import settings
from src.domain.exceptions import (
    IntegrationFailure,
    PositivityFailure,
    RefusedSize,
    ValidationError,
)
from src.domain.models import EffectiveParams, IntegratorOptions
from src.domain.states import (
    Basis,
    BlockDensityMatrix,
    Operator,
    PureState,
    SpinSpace,
    _check_same_basis,
)
from src.physics.collective_spin import (
    build_product_operators,
    build_spin_operators,
    local_sigma_z,
)
from src.physics.dephasing import LocalDephasing, local_dephasing_superoperator
from src.physics.model_builder import (
    build_effective_hamiltonian,
    build_jump_operators,
    jump_operators_from,
)

logger = logging.getLogger(__name__)

HamiltonianLike = Union[Operator, Callable[[float], Operator]]


@dataclass(eq=False)
class Trajectory:
    """States on an output grid plus integrator bookkeeping."""

    times: np.ndarray
    states: list
    stats: IntegratorStats = field(default_factory=IntegratorStats)
    warnings: List[str] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.states)

    def __getitem__(self, index):
        return self.states[index]

    def __iter__(self):
        return iter(self.states)

    @property
    def final(self):
        return self.states[-1]


class PureTrajectory(Trajectory):
    pass


class LindbladTrajectory(Trajectory):
    pass


class BruteForceTrajectory(Trajectory):
    pass


def _check_norms(states: np.ndarray, times: np.ndarray, reference: float, tol: float) -> None:
    drift = np.abs(np.linalg.norm(states, axis=1) - reference)
    worst = int(np.argmax(drift))
    if drift[worst] > tol:
        raise IntegrationFailure(
            f"Norm drift {drift[worst]:.3g} exceeds {tol:g} at t={times[worst]:.6g}",
            worst_time=float(times[worst]),
        )


def evolve_pure(
    hamiltonian: HamiltonianLike,
    psi0: PureState,
    times: np.ndarray,
    opts: Optional[IntegratorOptions] = None,
    norm_tol: Optional[float] = None,
) -> PureTrajectory:
    """
    Schroedinger evolution under a static or time-dependent Hamiltonian.

    ``psi0`` is the state at ``times[0]``. With ``adaptive_rk`` a time-dependent
    Hamiltonian is sampled at every solver stage; with ``expm_krylov`` static problems
    are propagated exactly and time-dependent ones by exponential-midpoint substeps no
    longer than ``opts.max_step``.

    Args:
        hamiltonian: Operator, or a callable t -> Operator
        psi0: Initial state (basis must match the Hamiltonian)
        times: Strictly increasing output times
        opts: Integrator options (pure-state defaults when omitted)
        norm_tol: Allowed norm drift (defaults to settings.norm_drift_tol)

    Returns:
        PureTrajectory: One PureState per output time

    Raises:
        IntegrationFailure: If the norm drifts beyond tolerance
    """
    opts = opts or IntegratorOptions.for_pure()
    norm_tol = settings.norm_drift_tol if norm_tol is None else norm_tol
    times = check_time_grid(times)
    basis = psi0.basis

    if isinstance(hamiltonian, Operator):
        _check_same_basis(hamiltonian.basis, basis)
        matrix = hamiltonian.matrix
        if opts.method == "expm_krylov":
            states, stats = propagate_eigh(matrix, psi0.vector, times)
        else:
            states, stats = integrate_ode(lambda t, y: -1j * (matrix @ y), psi0.vector, times, opts)
    else:
        _check_same_basis(hamiltonian(float(times[0])).basis, basis)
        if opts.method == "expm_krylov":
            states, stats = propagate_piecewise(
                lambda t: hamiltonian(t).matrix, psi0.vector, times, opts.max_step
            )
        else:
            states, stats = integrate_ode(
                lambda t, y: -1j * (hamiltonian(t).matrix @ y), psi0.vector, times, opts
            )

    _check_norms(states, times, psi0.norm(), norm_tol)
    return PureTrajectory(times=times, states=[PureState(basis, s) for s in states], stats=stats)


@dataclass(frozen=True, eq=False)
class BlockModel:
    """Per-block Hamiltonians and collective jumps plus the cross-block dephasing."""

    space: SpinSpace
    hamiltonians: Mapping[int, Operator]
    jumps: Sequence[Mapping[int, Operator]] = ()
    dephasing: Optional[LocalDephasing] = None


def effective_block_model(
    space: SpinSpace,
    params: EffectiveParams,
    dissipation: bool = True,
) -> BlockModel:
    """Effective Hamiltonian, collective jump and local dephasing on every block."""
    hamiltonians = {b.j2: build_effective_hamiltonian(space, params, b.j) for b in space}
    if not dissipation:
        return BlockModel(space, hamiltonians)
    jumps = []
    if params.gamma_big > 0:
        jumps.append({b.j2: build_jump_operators(space, params, b.j).collective for b in space})
    dephasing = (
        local_dephasing_superoperator(space, params.gamma_phi) if params.gamma_phi > 0 else None
    )
    return BlockModel(space, hamiltonians, jumps, dephasing)


class BlockLindbladGenerator:
    """Lindblad generator acting on the stacked, row-major vectorized blocks."""

    def __init__(self, model: BlockModel):
        self.model = model
        self.space = model.space
        self._h = {j2: op.matrix for j2, op in model.hamiltonians.items()}
        self._jumps = []
        for jump in model.jumps:
            matrices = {j2: op.matrix for j2, op in jump.items()}
            products = {j2: m.conj().T @ m for j2, m in matrices.items()}
            self._jumps.append((matrices, products))

    def layout(self, active: Sequence[int]) -> Dict[int, slice]:
        offsets, start = {}, 0
        for j2 in active:
            size = (j2 + 1) ** 2
            offsets[j2] = slice(start, start + size)
            start += size
        return offsets

    def pack(self, blocks: Mapping[int, np.ndarray], active: Sequence[int]) -> np.ndarray:
        return np.concatenate([np.asarray(blocks[j2], dtype=complex).ravel() for j2 in active])

    def unpack(self, y: np.ndarray, active: Sequence[int]) -> Dict[int, np.ndarray]:
        layout = self.layout(active)
        return {j2: y[layout[j2]].reshape(j2 + 1, j2 + 1) for j2 in active}

    def apply(self, blocks: Mapping[int, np.ndarray]) -> Dict[int, np.ndarray]:
        """Generator action on the given blocks; transfers into absent blocks are dropped."""
        out = {}
        for j2, rho in blocks.items():
            h = self._h[j2]
            value = -1j * (h @ rho - rho @ h)
            for matrices, products in self._jumps:
                jump, ldl = matrices[j2], products[j2]
                value += jump @ rho @ jump.conj().T - 0.5 * (ldl @ rho + rho @ ldl)
            out[j2] = value
        if self.model.dephasing is not None:
            dephased = self.model.dephasing.apply(blocks)
            for j2 in out:
                out[j2] += dephased[j2]
        return out

    def rhs(self, active: Sequence[int]) -> Callable[[float, np.ndarray], np.ndarray]:
        def f(t: float, y: np.ndarray) -> np.ndarray:
            return self.pack(self.apply(self.unpack(y, active)), active)

        return f

    def to_sparse(self, active: Optional[Sequence[int]] = None) -> sparse.csr_matrix:
        """Assemble the generator as a sparse matrix on the stacked vector of ``active`` blocks."""
        active = list(active) if active is not None else [b.j2 for b in self.space]
        layout = self.layout(active)
        total = layout[active[-1]].stop
        diagonal = []
        rows, cols, vals = [], [], []

        for j2 in active:
            dim = j2 + 1
            eye = sparse.identity(dim, dtype=complex, format="csr")
            h = sparse.csr_matrix(self._h[j2])
            local = -1j * (sparse.kron(h, eye) - sparse.kron(eye, h.T))
            for matrices, products in self._jumps:
                jump = sparse.csr_matrix(matrices[j2])
                ldl = sparse.csr_matrix(products[j2])
                local = local + sparse.kron(jump, jump.conj())
                local = local - 0.5 * (sparse.kron(ldl, eye) + sparse.kron(eye, ldl.T))
            if self.model.dephasing is not None:
                n = self.space.n_spins
                local = local - self.model.dephasing.prefactor * n * sparse.identity(
                    dim * dim, dtype=complex
                )
            diagonal.append(local)

        if self.model.dephasing is not None:
            prefactor = self.model.dephasing.prefactor
            for t in self.model.dephasing.transfers:
                if t.src_j2 not in layout or t.dst_j2 not in layout:
                    continue
                src, dst = layout[t.src_j2], layout[t.dst_j2]
                d_src, d_dst = t.src_j2 + 1, t.dst_j2 + 1
                a, b = np.meshgrid(np.arange(t.lo, t.hi), np.arange(t.lo, t.hi), indexing="ij")
                shift = t.offset - t.lo
                rows.append(dst.start + (a + shift) * d_dst + (b + shift))
                cols.append(src.start + a * d_src + b)
                vals.append(prefactor * t.coefficients)

        matrix = sparse.block_diag(diagonal, format="csr", dtype=complex)
        if rows:
            transfers = sparse.coo_matrix(
                (
                    np.concatenate([v.ravel() for v in vals]),
                    (
                        np.concatenate([r.ravel() for r in rows]),
                        np.concatenate([c.ravel() for c in cols]),
                    ),
                ),
                shape=(total, total),
            ).tocsr()
            matrix = matrix + transfers
        return matrix


def _active_blocks(space: SpinSpace, rho: BlockDensityMatrix, floor: Optional[float]) -> List[int]:
    all_blocks = [b.j2 for b in space]
    if floor is None:
        return all_blocks
    populations = rho.populations()
    kept = {j2 for j2, p in populations.items() if p >= floor}
    grown = set(kept)
    for j2 in kept:
        grown.update(k for k in (j2 - 2, j2 + 2) if 0 <= k <= space.top_j2)
    return [j2 for j2 in all_blocks if j2 in grown]


def _integrate_blocks(
    generator: BlockLindbladGenerator,
    rho0: BlockDensityMatrix,
    times: np.ndarray,
    active: List[int],
    opts: IntegratorOptions,
):
    y0 = generator.pack({j2: rho0.block(j2) for j2 in active}, active)
    if opts.method == "expm_krylov":
        return propagate_expm_multiply(generator.to_sparse(active), y0, times)
    return integrate_ode(generator.rhs(active), y0, times, opts)


def evolve_lindblad(
    hamiltonian: Union[BlockModel, Mapping[int, Operator]],
    jumps: Sequence[Mapping[int, Operator]] = (),
    rho0: Optional[BlockDensityMatrix] = None,
    times: Optional[np.ndarray] = None,
    opts: Optional[IntegratorOptions] = None,
    dephasing: Optional[LocalDephasing] = None,
) -> LindbladTrajectory:
    """
    Permutation-invariant master-equation evolution on the block representation.

    Args:
        hamiltonian: A BlockModel, or per-block Hamiltonians keyed by 2j
        jumps: Collective jump operators per block (rates folded in)
        rho0: Initial block density matrix at times[0]
        times: Strictly increasing output times
        opts: Integrator options (Lindblad defaults when omitted)
        dephasing: Local dephasing superoperator, if any

    Returns:
        LindbladTrajectory: One BlockDensityMatrix per output time

    Raises:
        IntegrationFailure: If the trace drifts by more than 1e-8
        PositivityFailure: If a block eigenvalue drops below -positivity_fail_tol
    """
    if rho0 is None or times is None:
        raise ValidationError("evolve_lindblad needs an initial state and a time grid")
    opts = opts or IntegratorOptions.for_lindblad()
    times = check_time_grid(times)
    model = (
        hamiltonian
        if isinstance(hamiltonian, BlockModel)
        else BlockModel(rho0.space, dict(hamiltonian), list(jumps), dephasing)
    )
    space = model.space
    generator = BlockLindbladGenerator(model)

    states: List[BlockDensityMatrix] = [rho0]
    stats = IntegratorStats(method=opts.method)
    if opts.block_floor is None:
        active = _active_blocks(space, rho0, None)
        values, segment = _integrate_blocks(generator, rho0, times, active, opts)
        stats.merge(segment)
        states = [BlockDensityMatrix(space, generator.unpack(y, active)) for y in values]
    else:
        current = rho0
        for k in range(1, len(times)):
            active = _active_blocks(space, current, opts.block_floor)
            values, segment = _integrate_blocks(
                generator, current, times[k - 1 : k + 1], active, opts
            )
            stats.merge(segment)
            current = BlockDensityMatrix(space, generator.unpack(values[-1], active))
            states.append(current)

    warnings = _check_block_trajectory(states, times, rho0.trace())
    return LindbladTrajectory(times=times, states=states, stats=stats, warnings=warnings)


def _check_block_trajectory(
    states: List[BlockDensityMatrix], times: np.ndarray, reference_trace: float
) -> List[str]:
    warnings: List[str] = []
    traces = np.array([s.trace() for s in states])
    drift = np.abs(traces - reference_trace)
    worst = int(np.argmax(drift))
    if drift[worst] > 1e-8:
        raise IntegrationFailure(
            f"Trace drift {drift[worst]:.3g} at t={times[worst]:.6g}",
            worst_time=float(times[worst]),
        )

    eigenvalues = np.array([s.min_eigenvalue() for s in states])
    worst = int(np.argmin(eigenvalues))
    if eigenvalues[worst] < -settings.positivity_fail_tol:
        raise PositivityFailure(
            f"Block eigenvalue {eigenvalues[worst]:.3g} at t={times[worst]:.6g}",
            worst_time=float(times[worst]),
        )
    if eigenvalues[worst] < -settings.positivity_warn_tol:
        message = f"Positivity drift {eigenvalues[worst]:.3g} at t={times[worst]:.6g}"
        logger.warning(message)
        warnings.append(message)
    return warnings


def product_jump_operators(n_spins: int, params: EffectiveParams) -> List[Operator]:
    """Collective sqrt(Gamma) z[r] and per-spin sqrt(gamma_phi/2) sigma_z on the product basis."""
    jumps: List[Operator] = []
    if params.gamma_big > 0:
        jumps.append(jump_operators_from(build_product_operators(n_spins), params).collective)
    if params.gamma_phi > 0:
        rate = np.sqrt(0.5 * params.gamma_phi)
        jumps.extend(rate * sz for sz in local_sigma_z(n_spins))
    return jumps


def evolve_bruteforce(
    hamiltonian: Operator,
    jumps: Sequence[Operator],
    rho0: Union[PureState, np.ndarray],
    times: np.ndarray,
    opts: Optional[IntegratorOptions] = None,
    max_spins: Optional[int] = None,
) -> BruteForceTrajectory:
    """
    Dense master equation on the full 2^N product basis, used as ground truth.

    Raises:
        RefusedSize: If N exceeds max_spins (settings.max_bruteforce_spins by default)
    """
    basis = hamiltonian.basis
    if basis.kind != "product":
        raise ValidationError("Brute-force evolution needs a product-basis Hamiltonian")
    limit = settings.max_bruteforce_spins if max_spins is None else max_spins
    if basis.n_spins > limit:
        raise RefusedSize(f"Brute force refused for N={basis.n_spins} > {limit}")
    for jump in jumps:
        _check_same_basis(jump.basis, basis)

    if isinstance(rho0, PureState):
        _check_same_basis(rho0.basis, basis)
        rho0 = np.outer(rho0.vector, rho0.vector.conj())
    dim = basis.dim
    opts = opts or IntegratorOptions(rtol=1e-10, atol=1e-12)
    h = hamiltonian.matrix
    jump_mats = [j.matrix for j in jumps]
    products = [j.conj().T @ j for j in jump_mats]

    def rhs(t: float, y: np.ndarray) -> np.ndarray:
        rho = y.reshape(dim, dim)
        out = -1j * (h @ rho - rho @ h)
        for jump, ldl in zip(jump_mats, products):
            out += jump @ rho @ jump.conj().T - 0.5 * (ldl @ rho + rho @ ldl)
        return out.ravel()

    values, stats = integrate_ode(rhs, np.asarray(rho0, dtype=complex).ravel(), times, opts)
    logger.debug(f"Brute-force N={basis.n_spins}: {stats.rhs_evaluations} RHS evaluations")
    return BruteForceTrajectory(
        times=check_time_grid(times), states=[v.reshape(dim, dim) for v in values], stats=stats
    )


@lru_cache(maxsize=64)
def rotation_x(basis: Basis, angle: float = np.pi) -> np.ndarray:
    """exp(-i angle Sx) in the given basis."""
    if basis.kind == "product":
        sx = build_product_operators(basis.n_spins).sx.matrix
        return linalg.expm(-1j * angle * sx)
    sx = build_spin_operators(SpinSpace(basis.n_spins), basis.j2 / 2).sx.matrix
    unitary = linalg.expm(-1j * angle * sx)
    if basis.kind == "spin_fock":
        return np.kron(unitary, np.eye(basis.cutoff))
    return unitary


def pi_pulse_x(state):
    """Instantaneous pi rotation about x of a pure or block state."""
    if isinstance(state, PureState):
        return PureState(state.basis, rotation_x(state.basis) @ state.vector)
    if isinstance(state, BlockDensityMatrix):
        rotated = {}
        for j2, block in state.blocks.items():
            u = rotation_x(Basis.dicke(state.space.n_spins, j2))
            rotated[j2] = u @ block @ u.conj().T
        return BlockDensityMatrix(state.space, rotated)
    raise ValidationError(f"Cannot apply a pulse to {type(state).__name__}")


def apply_hahn_echo(
    evolve: Callable[[object, np.ndarray], Trajectory],
    initial,
    times: np.ndarray,
    t_pulse: float,
    pulse: Callable[[object], object] = pi_pulse_x,
) -> Trajectory:
    """
    Evolve with an instantaneous pulse at t_pulse.

    The state reported at t_pulse (when it is an output time) is the post-pulse state.

    Args:
        evolve: Callable (state, times) -> Trajectory starting at times[0]
        initial: State at times[0]
        times: Output grid
        t_pulse: Pulse time, inside (times[0], times[-1]]
        pulse: State map applied at t_pulse

    Returns:
        Trajectory: Same type as ``evolve`` returns, on the original grid
    """
    times = check_time_grid(times)
    if not times[0] < t_pulse <= times[-1]:
        raise ValidationError(f"Pulse time {t_pulse} lies outside ({times[0]}, {times[-1]}]")

    before = times[times < t_pulse]
    after = times[times > t_pulse]
    first = evolve(initial, np.append(before, t_pulse))
    pulsed = pulse(first.states[-1])
    states = list(first.states[:-1])
    if np.any(times == t_pulse):
        states.append(pulsed)
    stats = IntegratorStats(method=first.stats.method)
    stats.merge(first.stats)
    warnings = list(first.warnings)
    if len(after):
        second = evolve(pulsed, np.insert(after, 0, t_pulse))
        states.extend(second.states[1:])
        stats.merge(second.stats)
        warnings.extend(second.warnings)
    return type(first)(times=times, states=states, stats=stats, warnings=warnings)
