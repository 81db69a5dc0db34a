"""Linear maps between matrix spaces, stored as transfer matrices.

A LinMap holds the matrix of the map with respect to the canonical bases of the
domain and codomain spans, over their common base field (real for Hermitian-kind
coordinates). Canonical parametrized families (conjugation chains, scaled
congruences, permutation-scaling chains, diagonal pairs, Hadamard multipliers,
rank-one frames, and the non-extendable corner triple) are realized through
`from_canonical`.
"""
from __future__ import annotations

import functools
import warnings
from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import (
    DimensionMismatchError,
    InvalidParameterError,
    MembershipError,
    SingularMatrixError,
)
from .spaces import (
    DEFAULT_TOL,
    Field,
    SpaceKind,
    SpaceTag,
    base_field,
    coords,
    coords_batch,
    membership,
    reassemble,
    reassemble_batch,
    span_dim,
    span_of,
    _basis_stack,
)

# parameter matrices this ill-conditioned are rejected outright
COND_LIMIT = 1e6


def _as_param(M, name: str, field: Field | None = None, tol: float = 1e-9) -> np.ndarray:
    M = np.asarray(M, dtype=np.complex128)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise InvalidParameterError(f"{name} must be a square matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise InvalidParameterError(f"{name} has non-finite entries")
    if field is Field.REAL and np.max(np.abs(M.imag)) > tol:
        raise InvalidParameterError(f"{name} must be real for a real-field space")
    return M


def _check_invertible(M: np.ndarray, name: str) -> None:
    c = np.linalg.cond(M)
    if not np.isfinite(c) or c > COND_LIMIT:
        raise SingularMatrixError(f"{name} is singular or has condition number above {COND_LIMIT:g} ({c:.3g})")


@dataclass(frozen=True)
class LinMap:
    """A linear map between matrix spaces in canonical coordinates."""

    domain: SpaceTag
    codomain: SpaceTag
    transfer: np.ndarray

    def __post_init__(self):
        bf_dom = base_field(self.domain)
        if bf_dom is not base_field(self.codomain):
            raise InvalidParameterError(
                f"domain and codomain must share a base field, got {bf_dom.value} vs "
                f"{base_field(self.codomain).value}"
            )
        T = np.asarray(self.transfer)
        shape = (span_dim(self.codomain), span_dim(self.domain))
        if T.shape != shape:
            raise DimensionMismatchError(f"transfer must have shape {shape}, got {T.shape}")
        if bf_dom is Field.REAL:
            if np.iscomplexobj(T):
                if T.size and np.max(np.abs(T.imag)) > 1e-12 * max(1.0, np.max(np.abs(T))):
                    raise InvalidParameterError("transfer for real-coordinate spaces must be real")
                T = T.real
            T = np.ascontiguousarray(T, dtype=np.float64)
        else:
            T = np.ascontiguousarray(T, dtype=np.complex128)
        if not np.all(np.isfinite(T)):
            raise InvalidParameterError("transfer has non-finite entries")
        T.setflags(write=False)
        object.__setattr__(self, "transfer", T)


def identity_map(space: SpaceTag) -> LinMap:
    d = span_dim(space)
    dt = np.float64 if base_field(space) is Field.REAL else np.complex128
    return LinMap(space, space, np.eye(d, dtype=dt))


def compose(f: LinMap, g: LinMap) -> LinMap:
    """The map f after g."""
    if f.domain != g.codomain:
        raise DimensionMismatchError(f"cannot compose: domain of f is {f.domain}, codomain of g is {g.codomain}")
    return LinMap(g.domain, f.codomain, f.transfer @ g.transfer)


def apply(map_: LinMap, A: np.ndarray, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Evaluate the map on A, checking that A lies in the span of the domain."""
    A = np.asarray(A, dtype=np.complex128)
    scale = max(1.0, float(np.max(np.abs(A))) if A.size else 1.0)
    if not membership(span_of(map_.domain), A, tol * scale):
        raise MembershipError(f"input is not in the span of {map_.domain} within tolerance")
    return reassemble(map_.codomain, map_.transfer @ coords(map_.domain, A))


def apply_batch(map_: LinMap, batch: np.ndarray) -> np.ndarray:
    """Evaluate the map on a (count, n, n) stack without membership checks."""
    x = coords_batch(map_.domain, batch)
    return reassemble_batch(map_.codomain, x @ map_.transfer.T)


def image_stack(map_: LinMap) -> np.ndarray:
    """(d, k, k) images of the domain's canonical basis elements."""
    cod = _basis_stack(map_.codomain)
    return np.einsum("lk,lij->kij", map_.transfer, cod)


def linmap_from_images(domain: SpaceTag, codomain: SpaceTag, images, tol: float = 1e-7) -> LinMap:
    """Build the map sending the k-th canonical basis element to images[k].

    Each image must lie in the span of the codomain within tol (relative to its
    own scale); that is what makes the transfer faithful.
    """
    d = span_dim(domain)
    if len(images) != d:
        raise DimensionMismatchError(f"need {d} images, got {len(images)}")
    cols = []
    cod_span = span_of(codomain)
    for k, img in enumerate(images):
        img = np.asarray(img, dtype=np.complex128)
        x = coords(codomain, img)
        back = reassemble(codomain, x)
        scale = max(1.0, float(np.max(np.abs(img))) if img.size else 1.0)
        if np.max(np.abs(back - img)) > tol * scale:
            raise MembershipError(
                f"image {k} is not in the span of {cod_span} within tolerance"
            )
        cols.append(x)
    T = np.stack(cols, axis=1)
    return LinMap(domain, codomain, T)


def _hermitian_spanning_stack(space: SpaceTag) -> np.ndarray:
    """Basis of the Hermitian part of the span, as a real vector space."""
    s = span_of(space)
    if s.kind is SpaceKind.FULL:
        kind = SpaceKind.HERMITIAN if s.field is Field.COMPLEX else SpaceKind.SYMMETRIC
        return _basis_stack(SpaceTag(kind, s.field, s.n))
    # Hermitian/symmetric/diagonal basis elements are themselves Hermitian and
    # real-span the Hermitian part
    return _basis_stack(s)


def is_hermitian_preserving(map_: LinMap, tol: float = DEFAULT_TOL) -> bool:
    """Whether the map sends Hermitian matrices to Hermitian matrices.

    Hermitian elements of the domain span are real combinations of a Hermitian
    spanning set, so checking that set suffices.
    """
    for H in _hermitian_spanning_stack(map_.domain):
        img = reassemble(map_.codomain, map_.transfer @ coords(map_.domain, H))
        if np.max(np.abs(img - img.conj().T)) > tol:
            return False
    return True


def restrict_map(map_: LinMap, subspace: SpaceTag, tol: float = DEFAULT_TOL) -> LinMap:
    """Restriction of a full-space map to an invariant subspace tag.

    Fails with MembershipError when some basis element of the subspace is not
    mapped back into the subspace within tol.
    """
    if span_of(map_.domain).kind is not SpaceKind.FULL or map_.domain != map_.codomain:
        raise InvalidParameterError("restriction requires an endomorphism of a full matrix space")
    if subspace.n != map_.domain.n:
        raise DimensionMismatchError("subspace size differs from the map's")
    images = []
    for B in _basis_stack(subspace):
        img = reassemble(map_.codomain, map_.transfer @ coords(map_.domain, B))
        if not membership(span_of(subspace), img, tol * max(1.0, float(np.max(np.abs(img))))):
            raise MembershipError(f"map does not preserve {span_of(subspace)}")
        images.append(img)
    return linmap_from_images(subspace, subspace, images, tol=max(tol, 1e-7))


@functools.lru_cache(maxsize=None)
def _herm_to_full_change(n: int) -> tuple[np.ndarray, np.ndarray]:
    """Change of basis: Hermitian canonical basis as a complex basis of M_n."""
    herm = SpaceTag(SpaceKind.HERMITIAN, Field.COMPLEX, n)
    S = np.stack([H.reshape(-1) for H in _basis_stack(herm)], axis=1)
    Sinv = np.linalg.inv(S)
    S.setflags(write=False)
    Sinv.setflags(write=False)
    return S, Sinv


def complexify(map_: LinMap) -> LinMap:
    """Complex-linear extension of a real-linear map on Hermitian matrices.

    A real-linear map on Hermitian n x n matrices extends uniquely to a
    complex-linear map on all of M_n via A+iB -> f(A)+i f(B); the Hermitian
    basis is also a complex basis of M_n, so this is a change of coordinates.
    """
    dom = span_of(map_.domain)
    cod = span_of(map_.codomain)
    if dom.kind is not SpaceKind.HERMITIAN or cod.kind is not SpaceKind.HERMITIAN:
        raise InvalidParameterError("complexify expects Hermitian-kind domain and codomain")
    S_dom, S_dom_inv = _herm_to_full_change(dom.n)
    S_cod, _ = _herm_to_full_change(cod.n)
    T_full = S_cod @ map_.transfer @ S_dom_inv
    full_dom = SpaceTag(SpaceKind.FULL, Field.COMPLEX, dom.n)
    full_cod = SpaceTag(SpaceKind.FULL, Field.COMPLEX, cod.n)
    return LinMap(full_dom, full_cod, T_full)


def transpose_map(space: SpaceTag) -> LinMap:
    """A -> A^t on a full matrix space."""
    if span_of(space).kind is not SpaceKind.FULL:
        raise InvalidParameterError("transpose_map expects a full matrix space")
    images = [B.T for B in _basis_stack(space)]
    return linmap_from_images(space, space, images)


# ---------------------------------------------------------------------------
# canonical forms
# ---------------------------------------------------------------------------


def _tuple_of_matrices(mats, name, field=None, tol=1e-9):
    out = tuple(_as_param(M, f"{name}[{i}]", field, tol) for i, M in enumerate(mats))
    if not out:
        raise InvalidParameterError(f"{name} must be nonempty")
    sizes = {M.shape[0] for M in out}
    if len(sizes) != 1:
        raise DimensionMismatchError(f"{name} entries must share one size, got {sorted(sizes)}")
    return out


@dataclass(frozen=True)
class MnChain:
    """phi_i(A) = N_i A N_{i+1}^{-1}, indices cyclic with N_{m+1} = N_1."""

    N: tuple

    def __post_init__(self):
        object.__setattr__(self, "N", _tuple_of_matrices(self.N, "N"))


@dataclass(frozen=True)
class HermOdd:
    """phi_i(A) = c_i U* A U with U unitary and real nonzero c_i, product 1."""

    U: np.ndarray
    c: tuple

    def __post_init__(self):
        object.__setattr__(self, "U", _as_param(self.U, "U"))
        object.__setattr__(self, "c", tuple(float(x) for x in self.c))


@dataclass(frozen=True)
class HermEven:
    """Alternating c_i M* A M (odd slots) and c_i M^{-1} A M^{-*} (even slots)."""

    M: np.ndarray
    c: tuple

    def __post_init__(self):
        object.__setattr__(self, "M", _as_param(self.M, "M"))
        object.__setattr__(self, "c", tuple(float(x) for x in self.c))


@dataclass(frozen=True)
class PnPair:
    """phi(A) = M* A M (or M* A^t M) with partner M^{-1} A M^{-*} (resp. with A^t)."""

    M: np.ndarray
    transpose: bool = False

    def __post_init__(self):
        object.__setattr__(self, "M", _as_param(self.M, "M"))
        object.__setattr__(self, "transpose", bool(self.transpose))


@dataclass(frozen=True)
class SymOdd:
    """phi_i(A) = c_i O^t A O with O (complex) orthogonal and nonzero c_i, product 1."""

    O: np.ndarray
    c: tuple

    def __post_init__(self):
        object.__setattr__(self, "O", _as_param(self.O, "O"))
        object.__setattr__(self, "c", tuple(complex(x) for x in self.c))


@dataclass(frozen=True)
class SymEven:
    """Alternating c_i M^t A M (odd slots) and c_i M^{-1} A M^{-t} (even slots)."""

    M: np.ndarray
    c: tuple

    def __post_init__(self):
        object.__setattr__(self, "M", _as_param(self.M, "M"))
        object.__setattr__(self, "c", tuple(complex(x) for x in self.c))


@dataclass(frozen=True)
class DiagPair:
    """On diagonals: phi_1 acts as N on the diagonal vector, phi_2 as N^{-t}."""

    N: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "N", _as_param(self.N, "N"))


@dataclass(frozen=True)
class DiagChain:
    """phi_i(A) = C_i P^t A P with a shared permutation P and diagonal C_i, product I."""

    P: np.ndarray
    C: tuple

    def __post_init__(self):
        object.__setattr__(self, "P", _as_param(self.P, "P"))
        object.__setattr__(self, "C", _tuple_of_matrices(self.C, "C"))


@dataclass(frozen=True)
class Hadamard:
    """Entrywise multiplier pair: A -> A o C and A -> A o C^ with C^_ij = 1/C_ij."""

    C: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "C", _as_param(self.C, "C"))

    @property
    def real_family(self) -> bool:
        """True when C is real symmetric, the exactly characterized family."""
        return bool(np.max(np.abs(self.C.imag)) <= 1e-12)


@dataclass(frozen=True)
class RankOneFrame:
    """phi(E_ij) = E_ij A_i paired with psi(E_ij) = A_j^{-1} E_ij."""

    A: tuple

    def __post_init__(self):
        object.__setattr__(self, "A", _tuple_of_matrices(self.A, "A"))


@dataclass(frozen=True)
class NonextendableTriple:
    """Corner triple A -> A + 0, B -> B + B, C -> C + X C X* into M_{2n}."""

    X: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "X", _as_param(self.X, "X"))


CanonicalForm = Union[
    MnChain,
    HermOdd,
    HermEven,
    PnPair,
    SymOdd,
    SymEven,
    DiagPair,
    DiagChain,
    Hadamard,
    RankOneFrame,
    NonextendableTriple,
]

FORM_TAGS = {
    MnChain: "MnChain",
    HermOdd: "HermOdd",
    HermEven: "HermEven",
    PnPair: "PnPair",
    SymOdd: "SymOdd",
    SymEven: "SymEven",
    DiagPair: "DiagPair",
    DiagChain: "DiagChain",
    Hadamard: "Hadamard",
    RankOneFrame: "RankOneFrame",
    NonextendableTriple: "NonextendableTriple",
}


def _require_kind(space: SpaceTag, kinds, form_name: str) -> None:
    if span_of(space).kind not in kinds:
        raise InvalidParameterError(f"{form_name} does not act on {space.kind.value} spaces")


def _require_size(space: SpaceTag, n: int, form_name: str) -> None:
    if space.n != n:
        raise DimensionMismatchError(f"{form_name} parameters are {n} x {n} but the space has n={space.n}")


def _check_scalar_product(c, tol: float, positive: bool = False) -> None:
    if any(x == 0 for x in c):
        raise InvalidParameterError("scalars must be nonzero")
    if positive and any((not np.isreal(x)) or x.real <= 0 for x in np.asarray(c)):
        raise InvalidParameterError("scalars must be positive")
    prod = np.prod(np.asarray(c, dtype=np.complex128))
    if abs(prod - 1.0) > max(tol, 1e-6):
        raise InvalidParameterError(f"scalar product must be 1, got {prod}")


def _congruence_maps(space: SpaceTag, mats_fns, tol: float) -> list[LinMap]:
    st = _basis_stack(space)
    out = []
    for fn in mats_fns:
        images = [fn(B) for B in st]
        out.append(linmap_from_images(space, space, images, tol=max(tol, 1e-7)))
    return out


def from_canonical(form: CanonicalForm, space: SpaceTag, tol: float = 1e-6) -> list[LinMap]:
    """Realize a canonical form as the tuple of linear maps it denotes.

    Validates the form's invariants (unitarity/orthogonality, permutation
    structure, scalar products, invertibility with condition number at most
    1e6) against `tol` where a tolerance applies.
    """
    n = space.n

    if isinstance(form, MnChain):
        _require_kind(space, {SpaceKind.FULL}, "MnChain")
        _require_size(space, form.N[0].shape[0], "MnChain")
        if space.field is Field.REAL and any(np.max(np.abs(N.imag)) > tol for N in form.N):
            raise InvalidParameterError("MnChain over a real space needs real parameters")
        m = len(form.N)
        invs = []
        for i, N in enumerate(form.N):
            _check_invertible(N, f"N[{i}]")
            invs.append(np.linalg.inv(N))
        fns = [
            (lambda Ni, Wi: (lambda A: Ni @ A @ Wi))(form.N[i], invs[(i + 1) % m])
            for i in range(m)
        ]
        return _congruence_maps(space, fns, tol)

    if isinstance(form, HermOdd):
        if space.field is not Field.COMPLEX:
            raise InvalidParameterError("HermOdd needs a complex-field space; use SymOdd over the reals")
        _require_kind(space, {SpaceKind.HERMITIAN}, "HermOdd")
        _require_size(space, form.U.shape[0], "HermOdd")
        U = form.U
        if np.max(np.abs(U.conj().T @ U - np.eye(n))) > max(tol, 1e-9):
            raise InvalidParameterError("U must be unitary within tolerance")
        _check_scalar_product(form.c, tol)
        fns = [(lambda ci: (lambda A: ci * (U.conj().T @ A @ U)))(ci) for ci in form.c]
        return _congruence_maps(space, fns, tol)

    if isinstance(form, HermEven):
        if space.field is not Field.COMPLEX:
            raise InvalidParameterError("HermEven needs a complex-field space; use SymEven over the reals")
        _require_kind(space, {SpaceKind.HERMITIAN}, "HermEven")
        _require_size(space, form.M.shape[0], "HermEven")
        M = form.M
        _check_invertible(M, "M")
        _check_scalar_product(form.c, tol)
        Minv = np.linalg.inv(M)
        Mist = Minv.conj().T
        fns = []
        for i, ci in enumerate(form.c):
            if i % 2 == 0:
                fns.append((lambda c: (lambda A: c * (M.conj().T @ A @ M)))(ci))
            else:
                fns.append((lambda c: (lambda A: c * (Minv @ A @ Mist)))(ci))
        return _congruence_maps(space, fns, tol)

    if isinstance(form, PnPair):
        if space.field is not Field.COMPLEX:
            raise InvalidParameterError("PnPair needs a complex-field space; real pairs are SymEven with m=2")
        _require_kind(space, {SpaceKind.HERMITIAN}, "PnPair")
        _require_size(space, form.M.shape[0], "PnPair")
        M = form.M
        _check_invertible(M, "M")
        Minv = np.linalg.inv(M)
        Mist = Minv.conj().T
        if form.transpose:
            fns = [lambda A: M.conj().T @ A.T @ M, lambda A: Minv @ A.T @ Mist]
        else:
            fns = [lambda A: M.conj().T @ A @ M, lambda A: Minv @ A @ Mist]
        return _congruence_maps(space, fns, tol)

    if isinstance(form, SymOdd):
        _require_kind(space, {SpaceKind.SYMMETRIC}, "SymOdd")
        _require_size(space, form.O.shape[0], "SymOdd")
        O = form.O
        if space.field is Field.REAL:
            if np.max(np.abs(O.imag)) > tol or any(abs(x.imag) > tol for x in form.c):
                raise InvalidParameterError("SymOdd over a real space needs real parameters")
        if np.max(np.abs(O.T @ O - np.eye(n))) > max(tol, 1e-9):
            raise InvalidParameterError("O must be orthogonal within tolerance")
        _check_scalar_product(form.c, tol)
        fns = [(lambda ci: (lambda A: ci * (O.T @ A @ O)))(ci) for ci in form.c]
        return _congruence_maps(space, fns, tol)

    if isinstance(form, SymEven):
        _require_kind(space, {SpaceKind.SYMMETRIC}, "SymEven")
        _require_size(space, form.M.shape[0], "SymEven")
        M = form.M
        if space.field is Field.REAL:
            if np.max(np.abs(M.imag)) > tol or any(abs(x.imag) > tol for x in form.c):
                raise InvalidParameterError("SymEven over a real space needs real parameters")
        _check_invertible(M, "M")
        _check_scalar_product(form.c, tol)
        Minv = np.linalg.inv(M)
        Mit = Minv.T
        fns = []
        for i, ci in enumerate(form.c):
            if i % 2 == 0:
                fns.append((lambda c: (lambda A: c * (M.T @ A @ M)))(ci))
            else:
                fns.append((lambda c: (lambda A: c * (Minv @ A @ Mit)))(ci))
        return _congruence_maps(space, fns, tol)

    if isinstance(form, DiagPair):
        _require_kind(space, {SpaceKind.DIAGONAL}, "DiagPair")
        _require_size(space, form.N.shape[0], "DiagPair")
        N = form.N
        if space.field is Field.REAL and np.max(np.abs(N.imag)) > tol:
            raise InvalidParameterError("DiagPair over a real space needs a real N")
        _check_invertible(N, "N")
        Nit = np.linalg.inv(N).T
        return [LinMap(space, space, N), LinMap(space, space, Nit)]

    if isinstance(form, DiagChain):
        _require_kind(space, {SpaceKind.DIAGONAL}, "DiagChain")
        _require_size(space, form.P.shape[0], "DiagChain")
        P = form.P
        if np.max(np.abs(P - np.round(P.real))) > max(tol, 1e-9) or not _is_permutation(np.round(P.real)):
            raise InvalidParameterError("P must be a permutation matrix")
        prod = np.eye(n, dtype=np.complex128)
        for i, C in enumerate(form.C):
            if np.max(np.abs(C - np.diag(np.diag(C)))) > max(tol, 1e-9):
                raise InvalidParameterError(f"C[{i}] must be diagonal")
            d = np.diag(C)
            if np.min(np.abs(d)) == 0 or np.max(np.abs(d)) / np.min(np.abs(d)) > COND_LIMIT:
                raise SingularMatrixError(f"C[{i}] must be invertible")
            if space.field is Field.REAL and np.max(np.abs(C.imag)) > tol:
                raise InvalidParameterError("DiagChain over a real space needs real scalings")
            prod = prod @ C
        if np.max(np.abs(prod - np.eye(n))) > max(tol, 1e-6):
            raise InvalidParameterError("the product of the C_i must be the identity")
        Pt = P.T
        fns = [(lambda Ci: (lambda A: Ci @ (Pt @ A @ P)))(C) for C in form.C]
        return _congruence_maps(space, fns, tol)

    if isinstance(form, Hadamard):
        _require_kind(space, {SpaceKind.FULL}, "Hadamard")
        _require_size(space, form.C.shape[0], "Hadamard")
        C = form.C
        if np.max(np.abs(C - C.T)) > max(tol, 1e-9):
            raise InvalidParameterError("C must be symmetric")
        if np.min(np.abs(C)) == 0:
            raise InvalidParameterError("C must have no zero entries")
        if not form.real_family:
            if space.field is Field.REAL:
                raise InvalidParameterError("complex C on a real space")
            warnings.warn(
                "complex symmetric Hadamard parameter: outside the exactly characterized "
                "real-symmetric family",
                stacklevel=2,
            )
        chat = 1.0 / C
        T1 = np.diag(C.reshape(-1))
        T2 = np.diag(chat.reshape(-1))
        return [LinMap(space, space, T1), LinMap(space, space, T2)]

    if isinstance(form, RankOneFrame):
        _require_kind(space, {SpaceKind.FULL}, "RankOneFrame")
        _require_size(space, form.A[0].shape[0], "RankOneFrame")
        if len(form.A) != n:
            raise DimensionMismatchError(f"RankOneFrame needs n={n} matrices, got {len(form.A)}")
        if space.field is Field.REAL and any(np.max(np.abs(A.imag)) > tol for A in form.A):
            raise InvalidParameterError("RankOneFrame over a real space needs real parameters")
        Binv = []
        for i, A in enumerate(form.A):
            _check_invertible(A, f"A[{i}]")
            Binv.append(np.linalg.inv(A))
        st = _basis_stack(space)
        # basis order is E_ij row-major: element (i, j) sits at index i*n + j
        img1 = [st[i * n + j] @ form.A[i] for i in range(n) for j in range(n)]
        img2 = [Binv[j] @ st[i * n + j] for i in range(n) for j in range(n)]
        return [
            linmap_from_images(space, space, img1, tol=max(tol, 1e-7)),
            linmap_from_images(space, space, img2, tol=max(tol, 1e-7)),
        ]

    if isinstance(form, NonextendableTriple):
        if space.field is not Field.COMPLEX:
            raise InvalidParameterError("NonextendableTriple needs a complex space")
        _require_kind(space, {SpaceKind.FULL}, "NonextendableTriple")
        _require_size(space, form.X.shape[0], "NonextendableTriple")
        X = form.X
        tr_part = (np.trace(X) / n) * np.eye(n)
        if np.linalg.norm(X - tr_part) <= max(tol, 1e-9) * max(1.0, np.linalg.norm(X)):
            raise InvalidParameterError("X must not be a scalar matrix")
        big = SpaceTag(SpaceKind.FULL, Field.COMPLEX, 2 * n)

        def pad(top: np.ndarray, bottom: np.ndarray) -> np.ndarray:
            Z = np.zeros((2 * n, 2 * n), dtype=np.complex128)
            Z[:n, :n] = top
            Z[n:, n:] = bottom
            return Z

        st = _basis_stack(space)
        zero = np.zeros((n, n), dtype=np.complex128)
        img1 = [pad(B, zero) for B in st]
        img2 = [pad(B, B) for B in st]
        img3 = [pad(B, X @ B @ X.conj().T) for B in st]
        return [
            linmap_from_images(space, big, img1, tol=max(tol, 1e-7)),
            linmap_from_images(space, big, img2, tol=max(tol, 1e-7)),
            linmap_from_images(space, big, img3, tol=max(tol, 1e-7)),
        ]

    raise InvalidParameterError(f"unknown canonical form {type(form).__name__}")


def _is_permutation(P: np.ndarray) -> bool:
    if P.ndim != 2 or P.shape[0] != P.shape[1]:
        return False
    if not np.all((P == 0) | (P == 1)):
        return False
    return bool(np.all(P.sum(axis=0) == 1) and np.all(P.sum(axis=1) == 1))
