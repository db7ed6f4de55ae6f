"""Uniform local dephasing projected onto the permutation-symmetric block structure.

For ``rho = (+)_J rho^(J) (x) 1_{d_J}`` the map ``Phi(rho) = sum_n sz_n rho sz_n`` keeps
the magnetization labels (M, M') and connects block J only to J and J +/- 1::

    J -> J+1 : (N - 2J) (d_J / d_{J+1}) sqrt(((J+1)^2 - M^2)((J+1)^2 - M'^2)) / ((2J+1)(J+1))
    J -> J   : (N + 2) M M' / (J (J+1))                 (0 for J = 0)
    J -> J-1 : (N + 2J + 2) (d_J / d_{J-1}) sqrt((J^2 - M^2)(J^2 - M'^2)) / (J (2J+1))

The dephasing generator is ``(gamma_phi / 2) (Phi(rho) - N rho)``.
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Mapping

import numpy as np

from src.domain.exceptions import ValidationError
from src.domain.states import SpinSpace
from src.physics.collective_spin import magnetizations

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class Transfer:
    """Coefficients moving the window ``[lo:hi, lo:hi]`` of block src into block dst at offset."""

    src_j2: int
    dst_j2: int
    lo: int
    hi: int
    offset: int
    coefficients: np.ndarray

    def apply(self, source: np.ndarray, target: np.ndarray) -> None:
        size = self.hi - self.lo
        target[self.offset : self.offset + size, self.offset : self.offset + size] += (
            self.coefficients * source[self.lo : self.hi, self.lo : self.hi]
        )


def _transfers(space: SpinSpace) -> List[Transfer]:
    n = space.n_spins
    out: List[Transfer] = []
    for block in space:
        j2, d_j = block.j2, block.degeneracy
        jj = j2 / 2
        m = magnetizations(j2)

        if j2 > 0:
            same = (n + 2) * np.outer(m, m) / (jj * (jj + 1))
            out.append(Transfer(j2, j2, 0, j2 + 1, 0, same))

        if j2 + 2 <= n:
            d_up = space.degeneracy(j2 + 2)
            w = np.sqrt((jj + 1) ** 2 - m**2)
            up = (n - j2) * (d_j / d_up) * np.outer(w, w) / ((2 * jj + 1) * (jj + 1))
            out.append(Transfer(j2, j2 + 2, 0, j2 + 1, 1, up))

        if j2 >= 2:
            d_down = space.degeneracy(j2 - 2)
            inner = m[1:-1]
            w = np.sqrt(jj**2 - inner**2)
            down = (n + j2 + 2) * (d_j / d_down) * np.outer(w, w) / (jj * (2 * jj + 1))
            out.append(Transfer(j2, j2 - 2, 1, j2, 0, down))
    return out


class LocalDephasing:
    """Block superoperator for (gamma_phi/2) sum_n D[sz_n] with a uniform rate."""

    def __init__(self, space: SpinSpace, gamma_phi: float):
        if gamma_phi < 0:
            raise ValidationError(f"Dephasing rate must be non-negative, got {gamma_phi}")
        self.space = space
        self.gamma_phi = gamma_phi
        self.transfers = _transfers(space)

    @property
    def prefactor(self) -> float:
        return 0.5 * self.gamma_phi

    def phi(self, blocks: Mapping[int, np.ndarray]) -> Dict[int, np.ndarray]:
        """sum_n sz_n rho sz_n on the block representation (no rate)."""
        out = {b.j2: np.zeros((b.dim, b.dim), dtype=complex) for b in self.space}
        for transfer in self.transfers:
            source = blocks.get(transfer.src_j2)
            if source is not None:
                transfer.apply(source, out[transfer.dst_j2])
        return out

    def apply(self, blocks: Mapping[int, np.ndarray]) -> Dict[int, np.ndarray]:
        """Generator action (gamma_phi/2)(Phi(rho) - N rho); returns every block."""
        mapped = self.phi(blocks)
        n = self.space.n_spins
        for j2, block in blocks.items():
            mapped[j2] -= n * block
        return {j2: self.prefactor * value for j2, value in mapped.items()}

    def trace_defect(self) -> float:
        """Largest column sum of the population rate matrix; zero for a trace-preserving map."""
        n = self.space.n_spins
        sums = {b.j2: -n * b.degeneracy * np.ones(b.dim) for b in self.space}
        for t in self.transfers:
            d_dst = self.space.degeneracy(t.dst_j2)
            sums[t.src_j2][t.lo : t.hi] += d_dst * np.diag(t.coefficients)
        defect = max(
            float(np.max(np.abs(s)) / self.space.degeneracy(j2)) for j2, s in sums.items()
        )
        return self.prefactor * defect


def local_dephasing_superoperator(space: SpinSpace, gamma_phi: float) -> LocalDephasing:
    """Build the permutation-symmetric local dephasing superoperator."""
    dephasing = LocalDephasing(space, gamma_phi)
    logger.debug(
        f"Local dephasing for N={space.n_spins}: {len(dephasing.transfers)} block transfers"
    )
    return dephasing
