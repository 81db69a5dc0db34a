"""Seeded generators for canonical map tuples and their parameter matrices.

`GenSpec` names a family, size, length, field, and seed; `generate` returns the
canonical form, its realized maps, and the space they act on. Two calls with
equal specs produce bit-identical output (one PCG64 stream per call).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import InvalidParameterError, SingularMatrixError
from .linmaps import (
    DiagChain,
    DiagPair,
    Hadamard,
    HermEven,
    HermOdd,
    MnChain,
    NonextendableTriple,
    PnPair,
    RankOneFrame,
    SymEven,
    SymOdd,
    from_canonical,
)
from .spaces import Field, SpaceKind, SpaceTag, random_batch

FAMILIES = (
    "mn_chain",
    "herm_odd",
    "herm_even",
    "pn_pair",
    "pn_chain",
    "sym_odd",
    "sym_even",
    "diag_pair",
    "diag_chain",
    "hadamard",
    "rank_one_frame",
    "nonextendable",
)

_COMPLEX_ONLY = {"herm_odd", "herm_even", "pn_pair", "nonextendable"}


@dataclass(frozen=True)
class GenSpec:
    """What to generate: family, matrix size, tuple length, field, seed."""

    family: str
    n: int
    m: int
    field: Field = Field.COMPLEX
    seed: int = 0
    condition_bound: float = 1e3

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise InvalidParameterError(
                f"unknown family {self.family!r}; expected one of {FAMILIES}"
            )
        if not isinstance(self.field, Field):
            object.__setattr__(self, "field", Field(self.field))
        if int(self.n) != self.n or self.n < 1:
            raise InvalidParameterError(f"n must be a positive integer, got {self.n!r}")
        if int(self.m) != self.m or self.m < 1:
            raise InvalidParameterError(f"m must be a positive integer, got {self.m!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "m", int(self.m))
        if self.condition_bound < 1:
            raise InvalidParameterError("condition_bound must be at least 1")
        if self.family in _COMPLEX_ONLY and self.field is not Field.COMPLEX:
            raise InvalidParameterError(f"family {self.family} exists only over the complex field")
        self._check_length()

    def _check_length(self):
        fam, m = self.family, self.m
        if fam == "mn_chain" and m < 3:
            raise InvalidParameterError("mn_chain needs m >= 3; shorter tuples admit other families")
        if fam == "herm_odd" and (m < 3 or m % 2 == 0):
            raise InvalidParameterError("herm_odd needs odd m >= 3")
        if fam == "herm_even" and (m < 4 or m % 2 == 1):
            raise InvalidParameterError("herm_even needs even m >= 4")
        if fam == "pn_pair" and m != 2:
            raise InvalidParameterError("pn_pair is a pair: m = 2")
        if fam == "pn_chain" and m < 2:
            raise InvalidParameterError("pn_chain needs m >= 2")
        if fam == "sym_odd" and (m < 3 or m % 2 == 0):
            raise InvalidParameterError("sym_odd needs odd m >= 3")
        if fam == "sym_even":
            if m == 2:
                if self.field is not Field.REAL:
                    raise InvalidParameterError(
                        "sym_even pairs are canonical only over the real field"
                    )
            elif m < 4 or m % 2 == 1:
                raise InvalidParameterError("sym_even needs even m >= 4, or m = 2 over the reals")
        if fam == "diag_pair" and m != 2:
            raise InvalidParameterError("diag_pair is a pair: m = 2")
        if fam == "diag_chain" and m < 3:
            raise InvalidParameterError("diag_chain needs m >= 3; pairs are diag_pair")
        if fam == "hadamard" and m != 2:
            raise InvalidParameterError("hadamard is a pair: m = 2")
        if fam == "rank_one_frame" and m != 2:
            raise InvalidParameterError("rank_one_frame is a pair: m = 2")
        if fam == "nonextendable":
            if m != 3:
                raise InvalidParameterError("nonextendable is a triple: m = 3")
            if self.n < 2:
                raise InvalidParameterError("nonextendable needs n >= 2 (X must not be scalar)")


@dataclass(frozen=True)
class Generated:
    """A generated canonical form, its maps, and the space they act on."""

    form: object
    maps: tuple
    space: SpaceTag


# ---------------------------------------------------------------------------
# parameter samplers
# ---------------------------------------------------------------------------


def _ginibre(rng: np.random.Generator, n: int, field: Field) -> np.ndarray:
    if field is Field.REAL:
        return rng.standard_normal((n, n)).astype(np.complex128)
    return (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)


def random_invertible(
    rng: np.random.Generator, n: int, field: Field = Field.COMPLEX, cond_bound: float = 1e3
) -> np.ndarray:
    """Gaussian invertible matrix, resampled until its condition number is modest."""
    for _ in range(100):
        M = _ginibre(rng, n, field)
        c = np.linalg.cond(M)
        if np.isfinite(c) and c <= cond_bound:
            return M
    raise SingularMatrixError(f"could not sample a matrix with condition below {cond_bound:g}")


def haar_unitary(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-distributed unitary via phase-corrected QR."""
    G = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
    Q, R = np.linalg.qr(G)
    ph = np.diag(R).copy()
    ph = ph / np.abs(ph)
    return Q * ph[None, :]


def haar_orthogonal(rng: np.random.Generator, n: int) -> np.ndarray:
    """Haar-distributed real orthogonal via sign-corrected QR."""
    G = rng.standard_normal((n, n))
    Q, R = np.linalg.qr(G)
    s = np.sign(np.diag(R))
    s[s == 0] = 1.0
    return (Q * s[None, :]).astype(np.complex128)


def complex_orthogonal(
    rng: np.random.Generator, n: int, cond_bound: float = 1e3
) -> np.ndarray:
    """Complex orthogonal matrix (O^t O = I) as the exponential of a complex
    skew-symmetric matrix, resampled to keep the condition number modest."""
    for _ in range(100):
        G = _ginibre(rng, n, Field.COMPLEX)
        K = 0.4 * (G - G.T)
        O = scipy.linalg.expm(K)
        c = np.linalg.cond(O)
        if np.isfinite(c) and c <= cond_bound:
            return O
    raise SingularMatrixError(f"could not sample a complex orthogonal matrix below condition {cond_bound:g}")


def _scalars(
    rng: np.random.Generator,
    m: int,
    field: Field,
    positive: bool = False,
    complex_phase: bool = False,
) -> tuple:
    """m nonzero scalars with product exactly 1."""
    mags = rng.uniform(0.5, 2.0, size=m - 1)
    if complex_phase and field is Field.COMPLEX:
        ph = np.exp(1j * rng.uniform(0, 2 * np.pi, size=m - 1))
        vals = list(mags * ph)
        vals.append(1.0 / np.prod(vals))
        return tuple(complex(v) for v in vals)
    signs = np.ones(m - 1) if positive else rng.choice([-1.0, 1.0], size=m - 1)
    vals = list(mags * signs)
    vals.append(1.0 / np.prod(vals))
    return tuple(float(v) for v in vals)


def _diag_scalings(rng: np.random.Generator, n: int, m: int, field: Field) -> tuple:
    """m invertible diagonal matrices with product exactly the identity."""
    Cs = []
    prod = np.ones(n, dtype=np.complex128)
    for _ in range(m - 1):
        mags = rng.uniform(0.5, 2.0, size=n)
        if field is Field.COMPLEX:
            d = mags * np.exp(1j * rng.uniform(0, 2 * np.pi, size=n))
        else:
            d = mags * rng.choice([-1.0, 1.0], size=n)
        Cs.append(np.diag(d))
        prod = prod * d
    Cs.append(np.diag(1.0 / prod))
    return tuple(Cs)


def random_permutation(rng: np.random.Generator, n: int) -> np.ndarray:
    perm = rng.permutation(n)
    P = np.zeros((n, n))
    P[np.arange(n), perm] = 1.0
    return P


def gen_space_sample(space: SpaceTag, count: int, seed: int = 0) -> np.ndarray:
    """Seeded random elements of a space, shape (count, n, n)."""
    if count < 1:
        raise InvalidParameterError("count must be positive")
    return random_batch(space, count, np.random.default_rng(seed))


# ---------------------------------------------------------------------------
# family generators
# ---------------------------------------------------------------------------


def generate(spec: GenSpec) -> Generated:
    """Generate the canonical form and maps named by `spec`, deterministically."""
    rng = np.random.default_rng(spec.seed)
    n, m, fd, cb = spec.n, spec.m, spec.field, spec.condition_bound
    fam = spec.family

    if fam == "mn_chain":
        space = SpaceTag(SpaceKind.FULL, fd, n)
        form = MnChain(tuple(random_invertible(rng, n, fd, cb) for _ in range(m)))
    elif fam == "herm_odd":
        space = SpaceTag(SpaceKind.HERMITIAN, fd, n)
        form = HermOdd(haar_unitary(rng, n), _scalars(rng, m, fd))
    elif fam == "herm_even":
        space = SpaceTag(SpaceKind.HERMITIAN, fd, n)
        form = HermEven(random_invertible(rng, n, fd, cb), _scalars(rng, m, fd))
    elif fam == "pn_pair":
        space = SpaceTag(SpaceKind.POSDEF, fd, n)
        form = PnPair(random_invertible(rng, n, fd, cb), bool(rng.integers(0, 2)))
    elif fam == "pn_chain":
        space = SpaceTag(SpaceKind.POSDEF, fd, n)
        form = _pn_chain_form(rng, n, m, fd, cb)
    elif fam == "sym_odd":
        space = SpaceTag(SpaceKind.SYMMETRIC, fd, n)
        O = complex_orthogonal(rng, n, cb) if fd is Field.COMPLEX else haar_orthogonal(rng, n)
        form = SymOdd(O, _scalars(rng, m, fd, complex_phase=True))
    elif fam == "sym_even":
        space = SpaceTag(SpaceKind.SYMMETRIC, fd, n)
        form = SymEven(random_invertible(rng, n, fd, cb), _scalars(rng, m, fd, complex_phase=True))
    elif fam == "diag_pair":
        space = SpaceTag(SpaceKind.DIAGONAL, fd, n)
        form = DiagPair(random_invertible(rng, n, fd, cb))
    elif fam == "diag_chain":
        space = SpaceTag(SpaceKind.DIAGONAL, fd, n)
        form = DiagChain(random_permutation(rng, n), _diag_scalings(rng, n, m, fd))
    elif fam == "hadamard":
        space = SpaceTag(SpaceKind.FULL, fd, n)
        G = rng.standard_normal((n, n))
        S = (G + G.T) / 2
        C = np.where(S >= 0, 1.0, -1.0) * (0.3 + np.abs(S))
        form = Hadamard(C)
    elif fam == "rank_one_frame":
        space = SpaceTag(SpaceKind.FULL, fd, n)
        form = RankOneFrame(tuple(random_invertible(rng, n, fd, cb) for _ in range(n)))
    elif fam == "nonextendable":
        space = SpaceTag(SpaceKind.FULL, fd, n)
        X = _ginibre(rng, n, fd)
        while np.linalg.norm(X - (np.trace(X) / n) * np.eye(n)) < 1e-3:
            X = _ginibre(rng, n, fd)
        form = NonextendableTriple(X)
    else:  # pragma: no cover - GenSpec already validated the family
        raise InvalidParameterError(f"unknown family {fam!r}")

    maps = tuple(from_canonical(form, space))
    return Generated(form=form, maps=maps, space=space)


def _pn_chain_form(rng, n, m, fd, cb):
    """Canonical form of a cone-preserving chain: scalars kept positive."""
    if fd is Field.COMPLEX:
        if m == 2:
            return PnPair(random_invertible(rng, n, fd, cb), bool(rng.integers(0, 2)))
        if m % 2 == 1:
            return HermOdd(haar_unitary(rng, n), _scalars(rng, m, fd, positive=True))
        return HermEven(random_invertible(rng, n, fd, cb), _scalars(rng, m, fd, positive=True))
    if m % 2 == 1 and m >= 3:
        return SymOdd(haar_orthogonal(rng, n), _scalars(rng, m, fd, positive=True))
    return SymEven(random_invertible(rng, n, fd, cb), _scalars(rng, m, fd, positive=True))
