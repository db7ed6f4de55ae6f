"""Collective spin algebra in the Dicke basis and reference states."""

import logging
from itertools import combinations
from typing import List, Literal, Optional

import numpy as np
from scipy import sparse
from scipy.special import gammaln, logsumexp, xlogy

from src.domain.exceptions import NoDarkState, ValidationError
from src.domain.states import Basis, Operator, PureState, SpinOperators, SpinSpace, to_doubled

logger = logging.getLogger(__name__)

_SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
_SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)


def _resolve_block(space: SpinSpace, j: Optional[float]) -> int:
    j2 = space.top_j2 if j is None else to_doubled(j)
    space.block(j2)
    return j2


def magnetizations(j2: int) -> np.ndarray:
    """m values of a block in ascending order."""
    return (np.arange(j2 + 1) - j2 / 2).astype(float)


def ladder_matrix(j2: int) -> np.ndarray:
    """Raising operator S+ of a spin-j block (ascending m)."""
    j = j2 / 2
    m = magnetizations(j2)[:-1]
    return np.diag(np.sqrt(j * (j + 1) - m * (m + 1)), k=-1).astype(complex)


def build_spin_operators(space: SpinSpace, j: Optional[float] = None) -> SpinOperators:
    """
    Angular-momentum matrices of one Dicke block.

    Args:
        space: Collective-spin space
        j: Total spin of the block (defaults to N/2)

    Returns:
        SpinOperators: Sx, Sy, Sz, S+, S-, S^2 in the basis |j, m>, m ascending

    Raises:
        BlockNotInSpace: If j is not a block of the space
    """
    j2 = _resolve_block(space, j)
    basis = Basis.dicke(space.n_spins, j2)
    sp = ladder_matrix(j2)
    sm = sp.conj().T
    jj = j2 / 2
    return SpinOperators(
        sx=Operator(basis, 0.5 * (sp + sm)),
        sy=Operator(basis, -0.5j * (sp - sm)),
        sz=Operator(basis, np.diag(magnetizations(j2))),
        sp=Operator(basis, sp),
        sm=Operator(basis, sm),
        s2=Operator(basis, jj * (jj + 1) * np.eye(j2 + 1)),
    )


def sigma_operator(ops: SpinOperators, r: float) -> Operator:
    """Spin Bogoliubov mode cosh(r) S- - sinh(r) S+."""
    return np.cosh(r) * ops.sm - np.sinh(r) * ops.sp


def coherent_spin_state(
    space: SpinSpace, j: Optional[float] = None, theta: float = np.pi / 2, phi: float = 0.0
) -> PureState:
    """
    Spin coherent state pointing along (theta, phi).

    Amplitudes are evaluated in log space so large blocks do not underflow.
    """
    j2 = _resolve_block(space, j)
    up = np.arange(j2 + 1)  # j + m
    down = j2 - up  # j - m
    cos_half, sin_half = np.cos(theta / 2), np.sin(theta / 2)
    log_binom = 0.5 * (gammaln(j2 + 1) - gammaln(up + 1) - gammaln(down + 1))
    log_amp = log_binom + xlogy(up, abs(cos_half)) + xlogy(down, abs(sin_half))
    sign = np.sign(cos_half or 1.0) ** up * np.sign(sin_half or 1.0) ** down
    vector = sign * np.exp(log_amp) * np.exp(1j * down * phi)
    return PureState(Basis.dicke(space.n_spins, j2), vector).normalized()


def dark_state(
    space: SpinSpace, r: float, direction: Literal["up", "down"] = "up"
) -> PureState:
    """
    The state of the j=N/2 block annihilated by the spin Bogoliubov mode.

    The kernel lives on the even (j - m) sector. Neighbouring amplitudes obey
    c_{m+2} = tanh(r) c_m sqrt((j-m)(j+m+1) / ((j+m+2)(j-m-1))); the recursion is
    accumulated in log magnitude from either end of the ladder and normalized with
    logsumexp.

    Args:
        space: Collective-spin space with even N
        r: Squeeze parameter, r >= 0
        direction: Accumulate the recursion from m=-j ("up") or from m=+j ("down")

    Returns:
        PureState: Normalized dark state on the j=N/2 block

    Raises:
        NoDarkState: If N is odd
        ValidationError: If r is negative
    """
    if space.n_spins % 2:
        raise NoDarkState(f"No dark state exists for odd N={space.n_spins}")
    if r < 0:
        raise ValidationError(f"Squeeze parameter must be non-negative, got {r}")

    j2 = space.top_j2
    basis = Basis.dicke(space.n_spins, j2)
    vector = np.zeros(j2 + 1, dtype=complex)
    if r == 0:
        vector[0] = 1.0
        return PureState(basis, vector)

    j = j2 / 2
    m = magnetizations(j2)[0:-1:2]  # m = -j, -j+2, ..., j-2
    increments = np.log(np.tanh(r)) + 0.5 * (
        np.log(j - m) + np.log(j + m + 1) - np.log(j + m + 2) - np.log(j - m - 1)
    )
    if direction == "up":
        log_mag = np.concatenate([[0.0], np.cumsum(increments)])
    else:
        log_mag = np.concatenate([-np.cumsum(increments[::-1])[::-1], [0.0]])
    log_mag -= 0.5 * logsumexp(2 * log_mag)
    vector[0::2] = np.exp(log_mag)
    return PureState(basis, vector)


def build_product_operators(n_spins: int) -> SpinOperators:
    """Collective spin operators on the full 2^N product basis (spin up is index 0)."""
    basis = Basis.product(n_spins)
    sp = sparse.csr_matrix((2**n_spins, 2**n_spins), dtype=complex)
    sz = sparse.csr_matrix((2**n_spins, 2**n_spins), dtype=complex)
    for site in range(n_spins):
        sp = sp + _embed_site(_SIGMA_PLUS, site, n_spins)
        sz = sz + 0.5 * _embed_site(_SIGMA_Z, site, n_spins)
    sp_dense = sp.toarray()
    sm_dense = sp_dense.conj().T
    sx = 0.5 * (sp_dense + sm_dense)
    sy = -0.5j * (sp_dense - sm_dense)
    szd = sz.toarray()
    return SpinOperators(
        sx=Operator(basis, sx),
        sy=Operator(basis, sy),
        sz=Operator(basis, szd),
        sp=Operator(basis, sp_dense),
        sm=Operator(basis, sm_dense),
        s2=Operator(basis, sx @ sx + sy @ sy + szd @ szd),
    )


def _embed_site(single: np.ndarray, site: int, n_spins: int) -> sparse.csr_matrix:
    left = sparse.identity(2**site, dtype=complex, format="csr")
    right = sparse.identity(2 ** (n_spins - site - 1), dtype=complex, format="csr")
    return sparse.kron(sparse.kron(left, single), right, format="csr")


def local_sigma_z(n_spins: int) -> List[Operator]:
    """Single-site sigma_z operators on the product basis."""
    basis = Basis.product(n_spins)
    return [
        Operator(basis, _embed_site(_SIGMA_Z, site, n_spins).toarray()) for site in range(n_spins)
    ]


def symmetric_isometry(n_spins: int) -> np.ndarray:
    """Columns are the j=N/2 Dicke states |N/2, m> (m ascending) in the product basis."""
    dim = 2**n_spins
    isometry = np.zeros((dim, n_spins + 1), dtype=complex)
    for n_up in range(n_spins + 1):
        column = np.zeros(dim)
        for ups in combinations(range(n_spins), n_up):
            index = sum(1 << (n_spins - 1 - site) for site in range(n_spins) if site not in ups)
            column[index] = 1.0
        isometry[:, n_up] = column / np.linalg.norm(column)
    return isometry


def embed_symmetric(state: PureState) -> PureState:
    """Map a j=N/2 Dicke-block state into the product basis."""
    n_spins = state.basis.n_spins
    if state.basis.kind != "dicke" or state.basis.j2 != n_spins:
        raise ValidationError("Only states of the j=N/2 block embed symmetrically")
    return PureState(Basis.product(n_spins), symmetric_isometry(n_spins) @ state.vector)
