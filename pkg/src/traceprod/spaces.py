"""Matrix spaces over the reals or complexes.

Space tags name the classical sets: all n x n matrices, Hermitian, symmetric,
positive (semi)definite, diagonal. Each tag carries a canonical ordered basis of
its linear span, coordinates with respect to that basis, a membership test, the
trace pairing tr(AB), and seeded random sampling. Everything downstream (linear
maps, preservation checks, decompositions) works in these coordinates.

Basis stacks are computed once per tag and cached read-only, so concurrent
readers share them safely.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatchError, InvalidParameterError

DEFAULT_TOL = 1e-9


class Field(str, enum.Enum):
    REAL = "real"
    COMPLEX = "complex"


class SpaceKind(str, enum.Enum):
    FULL = "FullMatrix"
    HERMITIAN = "Hermitian"
    SYMMETRIC = "Symmetric"
    POSDEF = "PosDef"
    POSSEMIDEF = "PosSemiDef"
    DIAGONAL = "Diagonal"


@dataclass(frozen=True)
class SpaceTag:
    """A named matrix space: structural kind, scalar field, and size."""

    kind: SpaceKind
    field: Field
    n: int

    def __post_init__(self):
        if not isinstance(self.kind, SpaceKind):
            object.__setattr__(self, "kind", SpaceKind(self.kind))
        if not isinstance(self.field, Field):
            object.__setattr__(self, "field", Field(self.field))
        if int(self.n) != self.n or self.n < 1:
            raise InvalidParameterError(f"space size must be a positive integer, got n={self.n!r}")
        object.__setattr__(self, "n", int(self.n))


def span_of(space: SpaceTag) -> SpaceTag:
    """The linear space spanned by `space`.

    Positive (semi)definite cones span the Hermitian matrices (complex field) or
    the real symmetric matrices (real field). Real Hermitian means real symmetric.
    """
    kind, field = space.kind, space.field
    if kind in (SpaceKind.POSDEF, SpaceKind.POSSEMIDEF):
        kind = SpaceKind.HERMITIAN if field is Field.COMPLEX else SpaceKind.SYMMETRIC
    if kind is SpaceKind.HERMITIAN and field is Field.REAL:
        kind = SpaceKind.SYMMETRIC
    return SpaceTag(kind, field, space.n)


def base_field(space: SpaceTag) -> Field:
    """Scalar field of the coordinates in the canonical basis.

    Hermitian matrices form a real vector space even though their entries are
    complex, so their coordinates are real.
    """
    s = span_of(space)
    if s.field is Field.REAL or s.kind is SpaceKind.HERMITIAN:
        return Field.REAL
    return Field.COMPLEX


def span_dim(space: SpaceTag) -> int:
    """Dimension of the span over its base field."""
    s = span_of(space)
    n = s.n
    if s.kind in (SpaceKind.FULL, SpaceKind.HERMITIAN):
        return n * n
    if s.kind is SpaceKind.SYMMETRIC:
        return n * (n + 1) // 2
    return n


@dataclass(frozen=True)
class Basis:
    """Ordered canonical basis of a space's span."""

    space: SpaceTag
    elements: tuple


@functools.lru_cache(maxsize=None)
def _basis_stack(space: SpaceTag) -> np.ndarray:
    s = span_of(space)
    n = s.n
    mats = []
    if s.kind is SpaceKind.FULL:
        for i in range(n):
            for j in range(n):
                E = np.zeros((n, n), dtype=np.complex128)
                E[i, j] = 1.0
                mats.append(E)
    elif s.kind in (SpaceKind.HERMITIAN, SpaceKind.SYMMETRIC):
        for i in range(n):
            E = np.zeros((n, n), dtype=np.complex128)
            E[i, i] = 1.0
            mats.append(E)
        for i in range(n):
            for j in range(i + 1, n):
                S = np.zeros((n, n), dtype=np.complex128)
                S[i, j] = 1.0
                S[j, i] = 1.0
                mats.append(S)
                if s.kind is SpaceKind.HERMITIAN:
                    K = np.zeros((n, n), dtype=np.complex128)
                    K[i, j] = 1.0j
                    K[j, i] = -1.0j
                    mats.append(K)
    elif s.kind is SpaceKind.DIAGONAL:
        for i in range(n):
            E = np.zeros((n, n), dtype=np.complex128)
            E[i, i] = 1.0
            mats.append(E)
    else:  # pragma: no cover - span_of removes cone kinds
        raise InvalidParameterError(f"no basis for kind {s.kind}")
    stack = np.stack(mats)
    stack.setflags(write=False)
    return stack


@functools.lru_cache(maxsize=None)
def _basis_norms2(space: SpaceTag) -> np.ndarray:
    st = _basis_stack(space)
    v = np.einsum("kij,kij->k", st.conj(), st).real
    v.setflags(write=False)
    return v


def space_basis(space: SpaceTag) -> Basis:
    """Canonical ordered basis of the span of `space`.

    Ordering: matrix units row-major for full spaces; diagonal units first for
    Hermitian/symmetric, then for each i<j pair (lexicographic) the symmetric
    element E_ij+E_ji immediately followed, in the Hermitian case, by the
    skew element i(E_ij-E_ji); diagonal units for diagonal spaces.
    """
    st = _basis_stack(space)
    return Basis(space=span_of(space), elements=tuple(st))


def coords(space: SpaceTag, A: np.ndarray) -> np.ndarray:
    """Coordinates of A in the canonical basis of the span of `space`.

    The canonical basis is orthogonal under tr(X* Y), so coordinates come from
    scaled inner products. No membership check; callers validate separately.
    """
    st = _basis_stack(space)
    A = np.asarray(A, dtype=np.complex128)
    if A.shape != st.shape[1:]:
        raise DimensionMismatchError(f"expected shape {st.shape[1:]}, got {A.shape}")
    x = np.einsum("kij,ij->k", st.conj(), A) / _basis_norms2(space)
    if base_field(space) is Field.REAL:
        return np.ascontiguousarray(x.real)
    return x


def coords_batch(space: SpaceTag, batch: np.ndarray) -> np.ndarray:
    """Coordinates of a (count, n, n) stack; returns (count, d)."""
    st = _basis_stack(space)
    x = np.einsum("kij,tij->tk", st.conj(), np.asarray(batch, dtype=np.complex128))
    x = x / _basis_norms2(space)[None, :]
    if base_field(space) is Field.REAL:
        return np.ascontiguousarray(x.real)
    return x


def reassemble(space: SpaceTag, x: np.ndarray) -> np.ndarray:
    """Matrix with coordinate vector x in the canonical basis."""
    st = _basis_stack(space)
    x = np.asarray(x)
    if x.shape != (st.shape[0],):
        raise DimensionMismatchError(f"expected {st.shape[0]} coordinates, got shape {x.shape}")
    return np.einsum("k,kij->ij", x, st)


def reassemble_batch(space: SpaceTag, x: np.ndarray) -> np.ndarray:
    st = _basis_stack(space)
    return np.einsum("tk,kij->tij", np.asarray(x), st)


def membership(space: SpaceTag, A: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """Whether A lies in the set named by `space`, within absolute deviation tol.

    Structural deviations (hermiticity, symmetry, off-diagonal mass, imaginary
    parts over the reals) are measured entrywise; definiteness by eigenvalue:
    strictly greater than tol for PosDef, at least -tol for PosSemiDef.
    """
    if tol < 0:
        raise InvalidParameterError("tol must be nonnegative")
    A = np.asarray(A)
    if A.shape != (space.n, space.n):
        return False
    A = A.astype(np.complex128, copy=False)
    if not np.all(np.isfinite(A)):
        return False
    if space.field is Field.REAL and np.max(np.abs(A.imag)) > tol:
        return False
    kind = space.kind
    if kind is SpaceKind.FULL:
        return True
    if kind is SpaceKind.DIAGONAL:
        off = A - np.diag(np.diag(A))
        return np.max(np.abs(off)) <= tol if off.size else True
    hermitian_dev = np.max(np.abs(A - A.conj().T))
    symmetric_dev = np.max(np.abs(A - A.T))
    if kind is SpaceKind.HERMITIAN:
        # real Hermitian == real symmetric; the imaginary check above covers it
        return hermitian_dev <= tol
    if kind is SpaceKind.SYMMETRIC:
        return symmetric_dev <= tol
    # definite cones: Hermitian structure first, then the spectrum
    if hermitian_dev > tol:
        return False
    eigs = np.linalg.eigvalsh((A + A.conj().T) / 2.0)
    if kind is SpaceKind.POSDEF:
        return bool(eigs.min() > tol)
    return bool(eigs.min() >= -tol)


def trace_pair(A: np.ndarray, B: np.ndarray) -> complex:
    """tr(AB) for A of shape (p, q) and B of shape (q, p). No conjugation."""
    A = np.asarray(A)
    B = np.asarray(B)
    if A.ndim != 2 or B.ndim != 2 or A.shape != B.shape[::-1]:
        raise DimensionMismatchError(f"trace pairing needs (p,q) x (q,p) shapes, got {A.shape} and {B.shape}")
    return complex(np.sum(A * B.T))


def gram_matrix(left, right=None) -> np.ndarray:
    """Matrix of trace pairings [tr(left_i right_j)].

    Arguments may be sequences of matrices or SpaceTags (standing for their
    canonical bases). With one argument, the Gram matrix of that basis.
    """
    if isinstance(left, SpaceTag):
        left = space_basis(left).elements
    if right is None:
        right = left
    elif isinstance(right, SpaceTag):
        right = space_basis(right).elements
    left = [np.asarray(A) for A in left]
    right = [np.asarray(B) for B in right]
    G = np.empty((len(left), len(right)), dtype=np.complex128)
    for i, A in enumerate(left):
        for j, B in enumerate(right):
            G[i, j] = trace_pair(A, B)
    return G


def random_batch(space: SpaceTag, count: int, rng=0) -> np.ndarray:
    """Seeded random elements of `space`, shape (count, n, n).

    `rng` may be an integer seed or a numpy Generator.

    Distributions by kind: Gaussian entries for full spaces (complex standard
    Gaussian over C), Gaussian-orthogonal/unitary-ensemble style (G+G*)/2 for
    Hermitian and symmetric, G G* + 0.1 I for PosDef (G G* for PosSemiDef),
    Gaussian diagonals for diagonal spaces.
    """
    rng = np.random.default_rng(rng) if not isinstance(rng, np.random.Generator) else rng
    n = space.n
    real = space.field is Field.REAL

    def ginibre() -> np.ndarray:
        if real:
            return rng.standard_normal((count, n, n)).astype(np.complex128)
        g = rng.standard_normal((count, n, n)) + 1j * rng.standard_normal((count, n, n))
        return g / np.sqrt(2.0)

    kind = span_of(space).kind if space.kind not in (SpaceKind.POSDEF, SpaceKind.POSSEMIDEF) else space.kind
    if kind is SpaceKind.FULL:
        return ginibre()
    if kind is SpaceKind.HERMITIAN:
        G = ginibre()
        return (G + G.conj().transpose(0, 2, 1)) / 2.0
    if kind is SpaceKind.SYMMETRIC:
        G = ginibre()
        return (G + G.transpose(0, 2, 1)) / 2.0
    if kind is SpaceKind.DIAGONAL:
        if real:
            vals = rng.standard_normal((count, n)).astype(np.complex128)
        else:
            vals = (rng.standard_normal((count, n)) + 1j * rng.standard_normal((count, n))) / np.sqrt(2.0)
        out = np.zeros((count, n, n), dtype=np.complex128)
        idx = np.arange(n)
        out[:, idx, idx] = vals
        return out
    G = ginibre()
    gram = G @ G.conj().transpose(0, 2, 1)
    if kind is SpaceKind.POSDEF:
        gram = gram + 0.1 * np.eye(n)[None, :, :]
    return gram


def random_element(space: SpaceTag, rng=0) -> np.ndarray:
    return random_batch(space, 1, rng)[0]
