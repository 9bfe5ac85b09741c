"""Truncated Fock-space and qubit operator algebra.

Spaces are ordered tensor products of bosonic modes (truncated at a photon
cutoff) and two-level systems. The canonical order used throughout the
package is ``(qubit 1, qubit 2, mode 1, mode 2)``.

Qubit basis convention: index 0 is the ground state ``|g>`` and index 1 the
excited state ``|e>``, so the joint index of ``|g, g, 0, 0>`` is 0.

Operators keep a CSR matrix internally; ``Operator.matrix`` gives the dense
view on demand.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

G, E = 0, 1  # qubit basis labels

QUBIT = "qubit"
BOSONIC = "bosonic"


class SpaceMismatchError(ValueError):
    """Raised when objects living on different spaces are combined."""


@dataclass(frozen=True)
class ModeSpec:
    kind: str
    cutoff: int | None = None

    def __post_init__(self):
        if self.kind == QUBIT:
            if self.cutoff is not None:
                raise ValueError("qubit factors take no cutoff")
        elif self.kind == BOSONIC:
            if self.cutoff is None or int(self.cutoff) != self.cutoff or self.cutoff < 1:
                raise ValueError(f"bosonic cutoff must be an integer >= 1, got {self.cutoff!r}")
        else:
            raise ValueError(f"unknown factor kind {self.kind!r}")

    @property
    def dim(self) -> int:
        return 2 if self.kind == QUBIT else self.cutoff + 1


def qubit() -> ModeSpec:
    return ModeSpec(QUBIT)


def mode(cutoff: int) -> ModeSpec:
    return ModeSpec(BOSONIC, cutoff)


@dataclass(frozen=True)
class CompositeSpace:
    """Ordered tensor product of factors; owns flat-index arithmetic."""

    factors: tuple[ModeSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "factors", tuple(self.factors))
        if not self.factors:
            raise ValueError("a space needs at least one factor")

    @classmethod
    def canonical(cls, cutoff1: int, cutoff2: int | None = None) -> "CompositeSpace":
        """``(qubit, qubit, mode(cutoff1), mode(cutoff2))``."""
        if cutoff2 is None:
            cutoff2 = cutoff1
        return cls((qubit(), qubit(), mode(cutoff1), mode(cutoff2)))

    @classmethod
    def single(cls, spec: ModeSpec) -> "CompositeSpace":
        return cls((spec,))

    @property
    def dims(self) -> tuple[int, ...]:
        return tuple(f.dim for f in self.factors)

    @property
    def dim(self) -> int:
        return int(np.prod(self.dims))

    def __len__(self) -> int:
        return len(self.factors)

    def index(self, labels: Sequence[int]) -> int:
        """Flat index of a product basis state given one label per factor."""
        if len(labels) != len(self.factors):
            raise ValueError(f"need {len(self.factors)} labels, got {len(labels)}")
        for lab, d in zip(labels, self.dims):
            if not 0 <= lab < d:
                raise ValueError(f"label {lab} out of range for factor of dimension {d}")
        return int(np.ravel_multi_index(tuple(labels), self.dims))

    def labels(self, index: int) -> tuple[int, ...]:
        return tuple(int(x) for x in np.unravel_index(index, self.dims))

    def factor_diagonal(self, k: int, values: Iterable[float]) -> np.ndarray:
        """Broadcast a per-level array of factor ``k`` to the full flat basis."""
        values = np.asarray(list(values))
        if values.shape != (self.dims[k],):
            raise ValueError("values must have the factor's dimension")
        shape = [1] * len(self.dims)
        shape[k] = self.dims[k]
        return np.broadcast_to(values.reshape(shape), self.dims).reshape(-1)

    def subspace(self, keep: Sequence[int]) -> "CompositeSpace":
        return CompositeSpace(tuple(self.factors[k] for k in sorted(keep)))


def _check_same(a: CompositeSpace, b: CompositeSpace):
    if a != b:
        raise SpaceMismatchError(f"space mismatch: {a.dims} vs {b.dims}")


@dataclass(frozen=True, eq=False)
class Operator:
    space: CompositeSpace
    data: sp.csr_matrix = field(repr=False)

    def __post_init__(self):
        m = self.data
        if not sp.issparse(m):
            m = np.asarray(m)
        m = sp.csr_matrix(m, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix shape {m.shape} does not match space dimension {self.space.dim}")
        m.sum_duplicates()
        m.eliminate_zeros()
        object.__setattr__(self, "data", m)

    @cached_property
    def matrix(self) -> np.ndarray:
        out = self.data.toarray()
        out.flags.writeable = False
        return out

    @property
    def dim(self) -> int:
        return self.space.dim

    def dag(self) -> "Operator":
        return Operator(self.space, self.data.conj().T.tocsr())

    def hermiticity_error(self) -> float:
        diff = self.data - self.data.conj().T
        return float(abs(diff).max()) if diff.nnz else 0.0

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        return self.hermiticity_error() < tol

    def _other(self, other) -> sp.csr_matrix:
        if isinstance(other, Operator):
            _check_same(self.space, other.space)
            return other.data
        raise TypeError(f"cannot combine Operator with {type(other).__name__}")

    def __matmul__(self, other):
        if isinstance(other, Operator):
            return Operator(self.space, self.data @ self._other(other))
        return NotImplemented

    def __add__(self, other):
        if isinstance(other, Operator):
            return Operator(self.space, self.data + self._other(other))
        return NotImplemented

    def __sub__(self, other):
        if isinstance(other, Operator):
            return Operator(self.space, self.data - self._other(other))
        return NotImplemented

    def __neg__(self):
        return Operator(self.space, -self.data)

    def __mul__(self, scalar):
        if np.isscalar(scalar):
            return Operator(self.space, self.data * scalar)
        return NotImplemented

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return Operator(self.space, self.data / scalar)

    def commutator(self, other: "Operator") -> "Operator":
        return self @ other - other @ self

    def max_abs(self) -> float:
        return float(abs(self.data).max()) if self.data.nnz else 0.0

    def allclose(self, other: "Operator", atol: float = 1e-12) -> bool:
        return (self - other).max_abs() < atol


def zero(space: CompositeSpace) -> Operator:
    return Operator(space, sp.csr_matrix((space.dim, space.dim), dtype=complex))


def identity(space: CompositeSpace) -> Operator:
    return Operator(space, sp.identity(space.dim, dtype=complex, format="csr"))


def annihilation(cutoff: int) -> Operator:
    """Ladder operator on a single bosonic factor: ``<n-1|a|n> = sqrt(n)``."""
    if int(cutoff) != cutoff or cutoff < 1:
        raise ValueError(f"cutoff must be an integer >= 1, got {cutoff!r}")
    space = CompositeSpace.single(mode(cutoff))
    return Operator(space, sp.diags(np.sqrt(np.arange(1, cutoff + 1)), 1, format="csr"))


def number(cutoff: int) -> Operator:
    space = CompositeSpace.single(mode(cutoff))
    return Operator(space, sp.diags(np.arange(cutoff + 1, dtype=float), 0, format="csr"))


_PAULI = {
    "z": np.diag([-1.0, 1.0]),
    "plus": np.array([[0.0, 0.0], [1.0, 0.0]]),
    "minus": np.array([[0.0, 1.0], [0.0, 0.0]]),
    "x": np.array([[0.0, 1.0], [1.0, 0.0]]),
}


def pauli(which: str) -> Operator:
    """Single-qubit operator; ``which`` is one of ``z``, ``plus``, ``minus``, ``x``.

    With the basis ``(|g>, |e>)``: ``sigma_z = diag(-1, +1)`` and
    ``sigma_plus = |e><g|``.
    """
    try:
        m = _PAULI[which]
    except KeyError:
        raise ValueError(f"unknown Pauli operator {which!r}") from None
    return Operator(CompositeSpace.single(qubit()), m)


def embed(op: Operator, factor_index: int, space: CompositeSpace) -> Operator:
    """Kronecker-embed a single-factor operator at ``factor_index`` of ``space``."""
    if not 0 <= factor_index < len(space):
        raise ValueError(f"factor index {factor_index} out of range")
    if op.dim != space.dims[factor_index]:
        raise ValueError(
            f"operator dimension {op.dim} does not match factor {factor_index} "
            f"of dimension {space.dims[factor_index]}"
        )
    mats = [sp.identity(d, dtype=complex, format="csr") for d in space.dims]
    mats[factor_index] = op.data
    return Operator(space, reduce(lambda x, y: sp.kron(x, y, format="csr"), mats))


@dataclass(frozen=True, eq=False)
class Ket:
    space: CompositeSpace
    vector: np.ndarray = field(repr=False)

    def __post_init__(self):
        v = np.array(self.vector, dtype=complex).reshape(-1)
        if v.shape != (self.space.dim,):
            raise ValueError(f"vector length {v.size} does not match space dimension {self.space.dim}")
        v.flags.writeable = False
        object.__setattr__(self, "vector", v)

    def norm(self) -> float:
        return float(np.linalg.norm(self.vector))

    def normalized(self) -> "Ket":
        return Ket(self.space, self.vector / self.norm())

    def dm(self) -> "DensityMatrix":
        return DensityMatrix(self.space, np.outer(self.vector, self.vector.conj()))

    def overlap(self, other: "Ket") -> complex:
        _check_same(self.space, other.space)
        return complex(np.vdot(self.vector, other.vector))


def basis(space: CompositeSpace, labels: Sequence[int]) -> Ket:
    v = np.zeros(space.dim, dtype=complex)
    v[space.index(labels)] = 1.0
    return Ket(space, v)


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    space: CompositeSpace
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (self.space.dim, self.space.dim):
            raise ValueError(f"matrix shape {m.shape} does not match space dimension {self.space.dim}")
        m.flags.writeable = False
        object.__setattr__(self, "matrix", m)

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermiticity_error(self) -> float:
        return float(np.abs(self.matrix - self.matrix.conj().T).max())

    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(h)[0])

    def validate(self, herm_tol: float = 1e-9, trace_tol: float = 1e-8, pos_tol: float | None = None):
        """Raise ``ValueError`` if the matrix is not a valid state within tolerance."""
        if self.hermiticity_error() >= herm_tol:
            raise ValueError(f"not Hermitian: deviation {self.hermiticity_error():.3e}")
        if abs(self.trace() - 1) >= trace_tol:
            raise ValueError(f"trace {self.trace():.12g} differs from 1")
        if pos_tol is not None and self.min_eigenvalue() < -pos_tol:
            raise ValueError(f"negative eigenvalue {self.min_eigenvalue():.3e}")
        return self


def maximally_mixed(space: CompositeSpace) -> DensityMatrix:
    return DensityMatrix(space, np.eye(space.dim) / space.dim)


def expectation(op: Operator, state: Ket | DensityMatrix) -> complex:
    _check_same(op.space, state.space)
    if isinstance(state, Ket):
        return complex(np.vdot(state.vector, op.data @ state.vector))
    # Tr(A rho) = sum_ij A_ij rho_ji
    return complex(op.data.multiply(state.matrix.T).sum())


def variance(op: Operator, state: Ket | DensityMatrix, herm_tol: float = 1e-12) -> float:
    if not op.is_hermitian(herm_tol):
        raise ValueError("variance needs a Hermitian operator")
    mean = expectation(op, state).real
    return expectation(op @ op, state).real - mean**2


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep-set must not be empty")
    n = len(rho.space)
    if any(not 0 <= k < n for k in keep):
        raise ValueError(f"factor indices must lie in [0, {n})")
    dims = rho.space.dims
    t = rho.matrix.reshape(dims + dims)
    traced = [k for k in range(n) if k not in keep]
    # trace out from the highest index so remaining axis numbers stay valid
    for k in reversed(traced):
        m = t.ndim // 2
        t = np.trace(t, axis1=k, axis2=k + m)
    sub = rho.space.subspace(keep)
    return DensityMatrix(sub, t.reshape(sub.dim, sub.dim))


def tensor_kets(*kets: Ket) -> Ket:
    space = CompositeSpace(tuple(f for k in kets for f in k.space.factors))
    return Ket(space, reduce(np.kron, [k.vector for k in kets]))


def tensor_dms(*dms: DensityMatrix) -> DensityMatrix:
    space = CompositeSpace(tuple(f for d in dms for f in d.space.factors))
    return DensityMatrix(space, reduce(np.kron, [d.matrix for d in dms]))


def is_monomial(op: Operator) -> bool:
    """At most one nonzero per row and per column (ladder, Pauli and products)."""
    m = op.data
    if m.nnz == 0:
        return True
    rows = np.diff(m.indptr)
    cols = np.bincount(m.indices, minlength=m.shape[1])
    return bool(rows.max() <= 1 and cols.max() <= 1)
