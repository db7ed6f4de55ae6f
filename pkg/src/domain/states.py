"""Array-backed domain types: Hilbert structure, operators, states and spin moments.

Half-integers (total spin j, magnetization m) are carried as doubled integers
``j2 = 2j`` and ``m2 = 2m`` so block keys are exact. Dicke-block vectors are ordered
by ascending m, i.e. index ``k`` holds ``m = -j + k``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Dict, Iterator, Literal, Mapping, Optional, Tuple

import numpy as np
import pandas as pd
from scipy.special import comb

from src.domain.exceptions import BlockNotInSpace, ValidationError

BasisKind = Literal["dicke", "product", "spin_fock"]


def to_doubled(value: float) -> int:
    """Convert a half-integer to its doubled integer representation."""
    doubled = round(2 * value)
    if abs(2 * value - doubled) > 1e-9:
        raise ValidationError(f"{value} is not a half-integer")
    return int(doubled)


@dataclass(frozen=True)
class SpinBlock:
    """One total-spin block of N spin-1/2 particles."""

    j2: int
    degeneracy: int

    @property
    def j(self) -> float:
        return self.j2 / 2

    @property
    def dim(self) -> int:
        return self.j2 + 1


@dataclass(frozen=True)
class SpinSpace:
    """Collective-spin Hilbert structure for ``n_spins`` spin-1/2 particles."""

    n_spins: int

    def __post_init__(self):
        if int(self.n_spins) != self.n_spins or self.n_spins < 1:
            raise ValidationError(f"n_spins must be a positive integer, got {self.n_spins}")

    @cached_property
    def blocks(self) -> Tuple[SpinBlock, ...]:
        """Blocks from j = N/2 downwards, with degeneracies C(N, N/2-j) - C(N, N/2-j-1)."""
        n = self.n_spins
        out = []
        for j2 in range(n, -1, -2):
            k = (n - j2) // 2
            degeneracy = int(comb(n, k, exact=True)) - (
                int(comb(n, k - 1, exact=True)) if k >= 1 else 0
            )
            out.append(SpinBlock(j2=j2, degeneracy=degeneracy))
        return tuple(out)

    @property
    def top_j2(self) -> int:
        return self.n_spins

    @property
    def hilbert_dim(self) -> int:
        return 2**self.n_spins

    def block(self, j2: int) -> SpinBlock:
        for candidate in self.blocks:
            if candidate.j2 == j2:
                return candidate
        raise BlockNotInSpace(f"j={j2 / 2} is not a block of N={self.n_spins} spins")

    def degeneracy(self, j2: int) -> int:
        return self.block(j2).degeneracy

    def __iter__(self) -> Iterator[SpinBlock]:
        return iter(self.blocks)


@dataclass(frozen=True)
class Basis:
    """Basis tag attached to every operator and state."""

    kind: BasisKind
    n_spins: int
    j2: Optional[int] = None
    cutoff: Optional[int] = None

    @classmethod
    def dicke(cls, n_spins: int, j2: int) -> "Basis":
        return cls(kind="dicke", n_spins=n_spins, j2=j2)

    @classmethod
    def product(cls, n_spins: int) -> "Basis":
        return cls(kind="product", n_spins=n_spins)

    @classmethod
    def spin_fock(cls, n_spins: int, j2: int, cutoff: int) -> "Basis":
        return cls(kind="spin_fock", n_spins=n_spins, j2=j2, cutoff=cutoff)

    @property
    def spin_dim(self) -> int:
        if self.kind == "product":
            return 2**self.n_spins
        return self.j2 + 1

    @property
    def dim(self) -> int:
        if self.kind == "spin_fock":
            return self.spin_dim * self.cutoff
        return self.spin_dim


def _check_same_basis(a: Basis, b: Basis) -> None:
    if a != b:
        raise ValidationError(f"Basis mismatch: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class Operator:
    """Dense complex matrix in a declared basis."""

    basis: Basis
    matrix: np.ndarray

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=complex)
        if matrix.shape != (self.basis.dim, self.basis.dim):
            raise ValidationError(
                f"Matrix shape {matrix.shape} does not match basis dimension {self.basis.dim}"
            )
        object.__setattr__(self, "matrix", matrix)

    def __add__(self, other: "Operator") -> "Operator":
        _check_same_basis(self.basis, other.basis)
        return Operator(self.basis, self.matrix + other.matrix)

    def __sub__(self, other: "Operator") -> "Operator":
        _check_same_basis(self.basis, other.basis)
        return Operator(self.basis, self.matrix - other.matrix)

    def __neg__(self) -> "Operator":
        return Operator(self.basis, -self.matrix)

    def __mul__(self, scalar: complex) -> "Operator":
        return Operator(self.basis, scalar * self.matrix)

    __rmul__ = __mul__

    def __matmul__(self, other: "Operator") -> "Operator":
        _check_same_basis(self.basis, other.basis)
        return Operator(self.basis, self.matrix @ other.matrix)

    def dag(self) -> "Operator":
        return Operator(self.basis, self.matrix.conj().T)

    def commutator(self, other: "Operator") -> "Operator":
        return self @ other - other @ self

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T), initial=0.0))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return self.hermiticity_error() < tol

    def apply(self, state: "PureState") -> "PureState":
        _check_same_basis(self.basis, state.basis)
        return PureState(self.basis, self.matrix @ state.vector)

    def expectation(self, state: "PureState") -> complex:
        _check_same_basis(self.basis, state.basis)
        return complex(np.vdot(state.vector, self.matrix @ state.vector))

    @classmethod
    def identity(cls, basis: Basis) -> "Operator":
        return cls(basis, np.eye(basis.dim, dtype=complex))


@dataclass(frozen=True, eq=False)
class PureState:
    """Complex amplitude vector in a declared basis."""

    basis: Basis
    vector: np.ndarray

    def __post_init__(self):
        vector = np.asarray(self.vector, dtype=complex)
        if vector.shape != (self.basis.dim,):
            raise ValidationError(
                f"Vector shape {vector.shape} does not match basis dimension {self.basis.dim}"
            )
        object.__setattr__(self, "vector", vector)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def normalized(self) -> "PureState":
        return PureState(self.basis, self.vector / self.norm())

    def overlap(self, other: "PureState") -> complex:
        _check_same_basis(self.basis, other.basis)
        return complex(np.vdot(self.vector, other.vector))

    def fidelity(self, other: "PureState") -> float:
        return abs(self.overlap(other)) ** 2


@dataclass(frozen=True, eq=False)
class SpinOperators:
    """Angular-momentum matrices of a single Dicke block."""

    sx: Operator
    sy: Operator
    sz: Operator
    sp: Operator
    sm: Operator
    s2: Operator

    @property
    def basis(self) -> Basis:
        return self.sz.basis

    def cartesian(self) -> Tuple[Operator, Operator, Operator]:
        return self.sx, self.sy, self.sz


@dataclass(frozen=True, eq=False)
class BlockDensityMatrix:
    """Permutation-invariant density matrix stored as j-indexed blocks.

    The physical state is ``rho = (+)_j rho^(j) (x) 1_{d_j}``; its trace is
    ``sum_j d_j tr rho^(j)``.
    """

    space: SpinSpace
    blocks: Mapping[int, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        normalized: Dict[int, np.ndarray] = {}
        for j2, block in self.blocks.items():
            self.space.block(j2)
            array = np.asarray(block, dtype=complex)
            if array.shape != (j2 + 1, j2 + 1):
                raise ValidationError(f"Block j={j2 / 2} has shape {array.shape}")
            normalized[j2] = array
        object.__setattr__(self, "blocks", normalized)

    @classmethod
    def from_pure(cls, space: SpinSpace, state: PureState) -> "BlockDensityMatrix":
        if state.basis.kind != "dicke":
            raise ValidationError("Only Dicke-block states embed into a block density matrix")
        if space.degeneracy(state.basis.j2) != 1:
            raise ValidationError(
                "A pure state in a degenerate block is not permutation invariant"
            )
        vector = state.vector
        return cls(space, {state.basis.j2: np.outer(vector, vector.conj())})

    @classmethod
    def maximally_mixed(cls, space: SpinSpace) -> "BlockDensityMatrix":
        weight = 1.0 / space.hilbert_dim
        return cls(space, {b.j2: weight * np.eye(b.dim, dtype=complex) for b in space})

    def block(self, j2: int) -> np.ndarray:
        if j2 in self.blocks:
            return self.blocks[j2]
        self.space.block(j2)
        return np.zeros((j2 + 1, j2 + 1), dtype=complex)

    def populations(self) -> Dict[int, float]:
        return {
            j2: float(self.space.degeneracy(j2) * np.real(np.trace(block)))
            for j2, block in self.blocks.items()
        }

    def trace(self) -> float:
        return float(sum(self.populations().values()))

    def hermiticity_error(self) -> float:
        return max(
            (float(np.max(np.abs(b - b.conj().T))) for b in self.blocks.values()), default=0.0
        )

    def min_eigenvalue(self) -> float:
        return min(
            (float(np.linalg.eigvalsh(0.5 * (b + b.conj().T))[0]) for b in self.blocks.values()),
            default=0.0,
        )


@dataclass(frozen=True, eq=False)
class SpinMoments:
    """First and symmetrized second moments of the collective spin."""

    mean: np.ndarray
    second_moments: np.ndarray
    n_spins: int

    @property
    def covariance(self) -> np.ndarray:
        return self.second_moments - np.outer(self.mean, self.mean)

    @property
    def variances(self) -> np.ndarray:
        return np.diag(self.covariance)

    @property
    def mean_length(self) -> float:
        return float(np.linalg.norm(self.mean))

    @classmethod
    def mixture(cls, weights, moments) -> "SpinMoments":
        """Convex combination of moments (moments are linear in the state)."""
        weights = np.asarray(list(weights), dtype=float)
        moments = list(moments)
        mean = sum(w * m.mean for w, m in zip(weights, moments, strict=True))
        second = sum(w * m.second_moments for w, m in zip(weights, moments, strict=True))
        return cls(mean=mean, second_moments=second, n_spins=moments[0].n_spins)


TRACE_COLUMNS = ["t", "sx", "sy", "sz", "var_min", "theta_opt", "xi2", "xi2_db"]


@dataclass(frozen=True, eq=False)
class SqueezingTrace:
    """Time series of spin moments and the Ramsey squeezing parameter."""

    times: np.ndarray
    moments: Tuple[SpinMoments, ...]
    var_min: np.ndarray
    theta_opt: np.ndarray
    xi2: np.ndarray
    time_scale: float = 1.0

    @property
    def n_spins(self) -> int:
        return self.moments[0].n_spins

    @property
    def xi2_db(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return 10.0 * np.log10(self.xi2)

    def best_index(self) -> int:
        """Index of the minimal xi^2 (NaN points are ignored)."""
        return int(np.nanargmin(self.xi2))

    @property
    def min_xi2(self) -> float:
        return float(self.xi2[self.best_index()])

    @property
    def t_best(self) -> float:
        return float(self.times[self.best_index()])

    def to_frame(self) -> pd.DataFrame:
        """Tabulate the trace; ``t`` is exported multiplied by ``time_scale``."""
        means = np.array([m.mean for m in self.moments])
        return pd.DataFrame(
            {
                "t": self.times * self.time_scale,
                "sx": means[:, 0],
                "sy": means[:, 1],
                "sz": means[:, 2],
                "var_min": self.var_min,
                "theta_opt": self.theta_opt,
                "xi2": self.xi2,
                "xi2_db": self.xi2_db,
            },
            columns=TRACE_COLUMNS,
        )
