"""Recover canonical parameters from tuples of maps satisfying the trace identity.

Each decomposer takes the tuple of LinMaps, checks the identity actually holds,
rebuilds the canonical parameters (conjugating matrices, scalars, permutations),
fixes the gauge freedom deterministically, and reports the reconstruction
residual. Failures of the structural assumptions raise
CanonicalStructureError; tuples that do not satisfy the identity at all raise
PreservationError up front.

Also here: positive-definite matrix powers, power-wrapped maps for the weighted
identity tr(f1(A1)^a1 ... ) = tr(A1^b1 ...), and the rank / best-fit
diagnostics used as negative controls.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .errors import (
    CanonicalStructureError,
    DimensionMismatchError,
    InvalidParameterError,
    NotApplicableError,
    PositivityError,
    PreservationError,
)
from .extend import CheckMode, PreservationReport, check_preservation, extend_from_subset
from .linmaps import (
    COND_LIMIT,
    DiagChain,
    DiagPair,
    HermEven,
    HermOdd,
    LinMap,
    MnChain,
    NonextendableTriple,
    PnPair,
    SymEven,
    SymOdd,
    apply_batch,
    complexify,
    from_canonical,
    image_stack,
)
from .spaces import (
    Field,
    SpaceKind,
    SpaceTag,
    coords,
    random_batch,
    reassemble,
    span_of,
    _basis_stack,
)

PRECHECK_TOL = 1e-6
PRECHECK_TRIALS = 512


@dataclass(frozen=True)
class DecompositionResult:
    """A recovered canonical form with its reconstruction quality."""

    form: object
    reconstruction_residual: float
    gauge_note: str


def _validate_tuple_on(maps, kinds, field: Field | None = None) -> SpaceTag:
    if not maps:
        raise InvalidParameterError("need at least one map")
    dom = maps[0].domain
    for i, f in enumerate(maps):
        if f.domain != dom or f.codomain != dom:
            raise DimensionMismatchError("all maps must be endomorphisms of one shared space")
    if span_of(dom).kind not in kinds:
        raise InvalidParameterError(
            f"maps act on {span_of(dom).kind.value}, expected one of "
            f"{sorted(k.value for k in kinds)}"
        )
    if field is not None and dom.field is not field:
        raise InvalidParameterError(f"this decomposition needs the {field.value} field")
    return dom


def _precheck(maps) -> None:
    report = check_preservation(
        maps, tol=PRECHECK_TOL, mode="auto", trials=PRECHECK_TRIALS, seed=7
    )
    if not report.passed:
        raise PreservationError(
            f"maps do not satisfy the trace-product identity "
            f"(residual {report.max_residual:.3g})",
            report=report,
        )


def _map_at_identity(map_: LinMap) -> np.ndarray:
    n = map_.domain.n
    return reassemble(map_.codomain, map_.transfer @ coords(map_.domain, np.eye(n)))


def _phase_fix(M: np.ndarray) -> complex:
    """Unit scalar u making the largest-magnitude entry of u*M real positive."""
    flat = M.reshape(-1)
    j = int(np.argmax(np.abs(flat)))
    z = complex(flat[j])
    if z == 0:
        return 1.0
    return np.conj(z) / abs(z)


def _sign_fix(M: np.ndarray) -> float:
    """+-1 making the largest-magnitude entry of the result lie in the right half plane."""
    flat = M.reshape(-1)
    z = complex(flat[int(np.argmax(np.abs(flat)))])
    if z.real < 0 or (z.real == 0 and z.imag < 0):
        return -1.0
    return 1.0


def _realize(M: np.ndarray, tol: float, what: str) -> np.ndarray:
    """Cast to real after checking the imaginary part is numerical noise."""
    M = np.asarray(M)
    if not np.iscomplexobj(M):
        return M
    scale = max(1.0, float(np.max(np.abs(M))) if M.size else 1.0)
    if np.max(np.abs(M.imag)) > max(tol, 1e-10) * scale:
        raise CanonicalStructureError(
            f"{what} should be real for a real-field space but has imaginary part "
            f"{np.max(np.abs(M.imag)):.3g}"
        )
    return np.ascontiguousarray(M.real)


def _realize_scalars(c, tol: float, what: str):
    arr = np.asarray(c, dtype=np.complex128)
    arr = _realize(arr, tol, what)
    return tuple(float(x) for x in arr)


def _rebuild_residual(form, space: SpaceTag, maps) -> float:
    rec = from_canonical(form, space, tol=1e-5)
    worst = 0.0
    for f, g in zip(maps, rec):
        scale = max(1.0, float(np.max(np.abs(f.transfer))))
        worst = max(worst, float(np.max(np.abs(f.transfer - g.transfer))) / scale)
    return worst


# ---------------------------------------------------------------------------
# conjugation recovery
# ---------------------------------------------------------------------------


def recover_conjugator(images: np.ndarray, tol: float = 1e-6) -> np.ndarray:
    """Given images[i*n+j] = Phi(E_ij) for an automorphism Phi of M_n, find N
    with Phi(X) = N X N^{-1}, determined up to a scalar.

    Phi(E_jj) is a rank-one idempotent whose eigenvector for eigenvalue 1 is
    the j-th column of N up to scale; the other columns come from Phi(E_ij)
    applied to it. Each candidate j is verified on every matrix unit and the
    first consistent one wins.
    """
    images = np.asarray(images, dtype=np.complex128)
    d = images.shape[0]
    n = int(round(np.sqrt(d)))
    if n * n != d or images.shape[1:] != (n, n):
        raise DimensionMismatchError("need n^2 images of shape (n, n)")
    scale = max(1.0, float(np.max(np.abs(images))))
    last_residual = None
    for j in range(n):
        X = images[j * n + j]
        w, V = np.linalg.eig(X)
        pick = int(np.argmin(np.abs(w - 1.0)))
        if abs(w[pick] - 1.0) > 0.1:
            continue
        v = V[:, pick]
        N = np.stack([images[i * n + j] @ v for i in range(n)], axis=1)
        cN = np.linalg.cond(N)
        if not np.isfinite(cN) or cN > COND_LIMIT:
            continue
        Ninv = np.linalg.inv(N)
        worst = 0.0
        for p in range(n):
            for q in range(n):
                ref = np.outer(N[:, p], Ninv[q, :])
                worst = max(worst, float(np.max(np.abs(images[p * n + q] - ref))))
        last_residual = worst / scale
        if last_residual <= tol:
            return N
    detail = f" (best residual {last_residual:.3g})" if last_residual is not None else ""
    raise CanonicalStructureError(f"map is not a conjugation by an invertible matrix{detail}")


def _automorphism_units(T_full: np.ndarray, n: int) -> np.ndarray:
    """Images of the matrix units under a map given by its full-space transfer."""
    return T_full.T.reshape(n * n, n, n)


# ---------------------------------------------------------------------------
# full matrix chains
# ---------------------------------------------------------------------------


def decompose_mn_chain(maps, tol: float = 1e-7) -> DecompositionResult:
    """Recover N_1..N_m with f_i(A) = N_i A N_{i+1}^{-1} from a chain on M_n.

    Needs m >= 3: shorter tuples on full spaces admit entrywise-multiplier and
    rank-one-frame families that are not chains. The common scalar on the N_i
    is fixed by giving N_1 unit Frobenius norm and a real positive leading
    entry.
    """
    dom = _validate_tuple_on(maps, {SpaceKind.FULL})
    m = len(maps)
    if m < 3:
        raise NotApplicableError("chains on full matrix spaces need at least 3 maps")
    _precheck(maps)
    n = dom.n

    phi2_I = _map_at_identity(maps[1])
    c = np.linalg.cond(phi2_I)
    if not np.isfinite(c) or c > COND_LIMIT:
        raise CanonicalStructureError("f_2(I) is not invertible")
    hat = image_stack(maps[1]) @ np.linalg.inv(phi2_I)
    N2 = recover_conjugator(hat, tol=max(tol * 10, 1e-6))

    Ns: list = [None] * m
    Ns[1] = N2
    cur = N2
    for ci in range(2, m + 1):  # chain index of the map whose value at I we use
        phiI = _map_at_identity(maps[ci - 1])
        cc = np.linalg.cond(phiI)
        if not np.isfinite(cc) or cc > COND_LIMIT:
            raise CanonicalStructureError(f"f_{ci}(I) is not invertible")
        cur = np.linalg.solve(phiI, cur)
        if ci < m:
            Ns[ci] = cur
        else:
            Ns[0] = cur  # N_{m+1} = N_1 closes the cycle

    t = _phase_fix(Ns[0]) / np.linalg.norm(Ns[0])
    Ns = [t * N for N in Ns]
    if dom.field is Field.REAL:
        Ns = [_realize(N, tol, "a chain matrix") for N in Ns]
    form = MnChain(tuple(Ns))
    residual = _rebuild_residual(form, dom, maps)
    note = "common scalar fixed: N_1 has unit Frobenius norm and real positive leading entry"
    return DecompositionResult(form, residual, note)


# ---------------------------------------------------------------------------
# Hermitian chains
# ---------------------------------------------------------------------------


def _unitary_from_conjugator(N: np.ndarray, tol: float) -> tuple[np.ndarray, float]:
    """Strip the free scalar off N = s U*; returns (U, deviation from unitarity)."""
    n = N.shape[0]
    G = N @ N.conj().T
    lam = float(np.trace(G).real) / n
    if lam <= 0:
        raise CanonicalStructureError("conjugating matrix has nonpositive scale")
    dev = float(np.max(np.abs(G / lam - np.eye(n))))
    if dev > tol:
        raise CanonicalStructureError(
            f"conjugating matrix is not a scalar multiple of a unitary (deviation {dev:.3g})"
        )
    W = N / np.sqrt(lam)
    U = W.conj().T
    u = _phase_fix(U)
    return u * U, dev


def decompose_hermitian(maps, tol: float = 1e-7) -> DecompositionResult:
    """Recover the canonical form of a chain on Hermitian matrices, m >= 3.

    Odd m gives scaled conjugations by one unitary (HermOdd); even m gives
    alternating congruences by one invertible matrix (HermEven). Pairs (m = 2)
    are the positive-definite pair family; use decompose_pn_pair.
    """
    dom = _validate_tuple_on(maps, {SpaceKind.HERMITIAN}, field=Field.COMPLEX)
    m = len(maps)
    if m < 3:
        raise NotApplicableError(
            "Hermitian chains need at least 3 maps; pairs belong to decompose_pn_pair"
        )
    _precheck(maps)
    n = dom.n
    phiI = [_map_at_identity(f) for f in maps]

    if m % 2 == 1:
        c = [float(np.trace(S).real) / n for S in phiI]
        if any(abs(x) < 1e-12 for x in c):
            raise CanonicalStructureError("some f_i(I) has vanishing trace; not a scaled conjugation")
        units = _automorphism_units(complexify(maps[0]).transfer, n) / c[0]
        N = recover_conjugator(units, tol=max(tol * 10, 1e-6))
        U, dev = _unitary_from_conjugator(N, max(tol * 10, 1e-8))
        c[-1] = 1.0 / float(np.prod(c[:-1]))
        form = HermOdd(U, tuple(c))
        note = (
            "U fixed up to phase by a real positive leading entry; "
            f"unitarity deviation {dev:.3g}"
        )
    else:
        S1 = phiI[0]
        cc = np.linalg.cond(S1)
        if not np.isfinite(cc) or cc > COND_LIMIT:
            raise CanonicalStructureError("f_1(I) is not invertible")
        units = np.linalg.inv(S1) @ _automorphism_units(complexify(maps[0]).transfer, n)
        N = recover_conjugator(units, tol=max(tol * 10, 1e-6))
        M = np.linalg.inv(N)
        M = (_phase_fix(M) / np.linalg.norm(M)) * M
        Minv = np.linalg.inv(M)
        c = []
        for i, S in enumerate(phiI):
            if i % 2 == 0:
                val = np.trace(Minv.conj().T @ S @ Minv) / n
            else:
                val = np.trace(M @ S @ M.conj().T) / n
            c.append(float(val.real))
        c[-1] = 1.0 / float(np.prod(c[:-1]))
        form = HermEven(M, tuple(c))
        note = "M fixed by unit Frobenius norm and real positive leading entry"

    residual = _rebuild_residual(form, dom, maps)
    return DecompositionResult(form, residual, note)


# ---------------------------------------------------------------------------
# positive definite pairs and chains
# ---------------------------------------------------------------------------


def herm_power(A: np.ndarray, t: float, tol: float = 1e-12) -> np.ndarray:
    """A**t for Hermitian positive definite A through its eigendecomposition."""
    A = np.asarray(A, dtype=np.complex128)
    if t == 1:
        return A.copy()
    n = A.shape[0]
    if t == 0:
        return np.eye(n, dtype=np.complex128)
    w, V = np.linalg.eigh(A)
    if w.min() <= tol:
        raise PositivityError(f"matrix power {t} needs a positive definite input (min eig {w.min():.3g})")
    return (V * (w**t)[None, :]) @ V.conj().T


def _herm_power_batch(stack: np.ndarray, t: float, tol: float = 1e-12) -> np.ndarray:
    if t == 1:
        return stack
    n = stack.shape[-1]
    if t == 0:
        return np.broadcast_to(np.eye(n, dtype=np.complex128), stack.shape).copy()
    w, V = np.linalg.eigh(stack)
    if w.min() <= tol:
        raise PositivityError(f"matrix power {t} needs positive definite inputs (min eig {w.min():.3g})")
    return (V * (w**t)[..., None, :]) @ np.conjugate(np.swapaxes(V, -1, -2))


def decompose_pn_pair(maps, tol: float = 1e-7) -> DecompositionResult:
    """Recover (M, transpose flag) for a pair preserving traces of products on
    the positive definite cone: f_1(A) = M*AM or M*A^tM, f_2 its inverse partner.

    f_1(I) must be positive definite. M carries only a phase freedom, fixed by
    a real positive leading entry.
    """
    dom = _validate_tuple_on(maps, {SpaceKind.HERMITIAN}, field=Field.COMPLEX)
    if len(maps) != 2:
        raise NotApplicableError("this family is a pair; longer chains go to decompose_pn_chain")
    _precheck(maps)
    n = dom.n

    S = _map_at_identity(maps[0])
    S = (S + S.conj().T) / 2
    eigs = np.linalg.eigvalsh(S)
    if eigs.min() <= 1e-12:
        raise CanonicalStructureError("f_1(I) is not positive definite")
    Sneg = herm_power(S, -0.5)
    Shalf = herm_power(S, 0.5)
    units = Sneg @ _automorphism_units(complexify(maps[0]).transfer, n) @ Sneg

    if n == 1:
        transpose = False
        sep_note = "n = 1: branches coincide"
    else:
        if n >= 3:
            a, b, target = units[0 * n + 1], units[1 * n + 2], units[0 * n + 2]
        else:
            a, b, target = units[0 * n + 1], units[1 * n + 0], units[0 * n + 0]
        d_mult = float(np.linalg.norm(a @ b - target))
        d_anti = float(np.linalg.norm(b @ a - target))
        lo, hi = sorted((d_mult, d_anti))
        if hi < 1e-6 or (hi > 0 and lo / hi > 0.1):
            raise CanonicalStructureError(
                f"cannot identify the multiplicative branch (deviations {d_mult:.3g} vs {d_anti:.3g})"
            )
        transpose = d_anti < d_mult
        sep_note = f"branch deviations {d_mult:.3g} (direct) vs {d_anti:.3g} (transpose)"

    if transpose:
        order = np.array([q * n + p for p in range(n) for q in range(n)])
        units = units[order]
    N = recover_conjugator(units, tol=max(tol * 10, 1e-6))
    U, dev = _unitary_from_conjugator(N, max(tol * 10, 1e-8))
    M = U @ Shalf
    M = _phase_fix(M) * M
    form = PnPair(M, transpose)
    residual = _rebuild_residual(form, dom, maps)
    note = f"M fixed up to phase; unitarity deviation {dev:.3g}; {sep_note}"
    return DecompositionResult(form, residual, note)


def _require_positive_scalars(c, what: str) -> None:
    vals = np.asarray(c)
    if np.any(np.abs(vals.imag) > 1e-9 * np.maximum(1.0, np.abs(vals))) or np.any(vals.real <= 0):
        raise CanonicalStructureError(
            f"{what} must be positive to preserve the definite cone, got {tuple(c)}"
        )


def decompose_pn_chain(maps, tol: float = 1e-7) -> DecompositionResult:
    """Recover the canonical form of a chain preserving traces of products of
    positive definite matrices.

    Complex field: pairs are (M, transpose) pairs; chains of length >= 3 are
    Hermitian chains whose scalars must come out positive. Real field: chains
    of any length >= 2 are symmetric-space chains with positive scalars and,
    for odd length, a real orthogonal conjugator.
    """
    dom = _validate_tuple_on(maps, {SpaceKind.HERMITIAN, SpaceKind.SYMMETRIC})
    m = len(maps)
    if m < 2:
        raise NotApplicableError("need at least a pair")
    if dom.field is Field.COMPLEX:
        if m == 2:
            return decompose_pn_pair(maps, tol=tol)
        result = decompose_hermitian(maps, tol=tol)
        _require_positive_scalars(result.form.c, "the recovered scalars")
        return result
    result = decompose_symmetric(maps, tol=tol)
    _require_positive_scalars(result.form.c, "the recovered scalars")
    return result


# ---------------------------------------------------------------------------
# symmetric chains
# ---------------------------------------------------------------------------


def _product_extension(dom: SpaceTag, psi_images: np.ndarray, tol: float) -> np.ndarray:
    """Transfer of the map on M_n with Theta(A B) = Psi(A) Psi(B) on the span.

    Products of symmetric matrices span all of M_n, so Theta is determined;
    inconsistency of the least squares fit means Psi is not product-compatible.
    """
    st = np.asarray(_basis_stack(dom))
    n = st.shape[-1]
    AB = np.einsum("aij,bjk->abik", st, st).reshape(-1, n, n)
    PQ = np.einsum("aij,bjk->abik", psi_images, psi_images).reshape(-1, n, n)
    P = AB.reshape(-1, n * n).T  # columns vec(A_a A_b)
    Q = PQ.reshape(-1, n * n).T
    T = Q @ np.linalg.pinv(P)
    fit = float(np.max(np.abs(T @ P - Q))) / max(1.0, float(np.max(np.abs(Q))))
    if fit > tol:
        raise CanonicalStructureError(
            f"images are not compatible with any product extension (residual {fit:.3g})"
        )
    if np.linalg.matrix_rank(P) < n * n:
        raise CanonicalStructureError("products of the basis do not span the full matrix space")
    return T


def decompose_symmetric(maps, tol: float = 1e-7) -> DecompositionResult:
    """Recover the canonical form of a chain on symmetric matrices.

    Odd length: scaled conjugations by one (possibly complex) orthogonal
    matrix (SymOdd). Even length: alternating congruences (SymEven). The
    recovery normalizes f_1 at the identity, extends products of its images to
    an automorphism of M_n, and reads the conjugator off that automorphism.
    Guaranteed for length >= 3, and for pairs on the real definite cone.
    """
    dom = _validate_tuple_on(maps, {SpaceKind.SYMMETRIC})
    m = len(maps)
    if m < 2:
        raise NotApplicableError("need at least a pair")
    _precheck(maps)
    n = dom.n
    phiI = [_map_at_identity(f) for f in maps]

    S1 = phiI[0]
    cnd = np.linalg.cond(S1)
    if not np.isfinite(cnd) or cnd > COND_LIMIT:
        raise CanonicalStructureError("f_1(I) is not invertible")
    psi_images = np.linalg.inv(S1) @ image_stack(maps[0])
    T_theta = _product_extension(dom, psi_images, max(tol * 10, 1e-6))
    N = recover_conjugator(_automorphism_units(T_theta, n), tol=max(tol * 10, 1e-6))
    W = np.linalg.inv(N)

    if m % 2 == 1:
        G = W.T @ W
        lam = complex(np.trace(G)) / n
        if abs(lam) < 1e-12:
            raise CanonicalStructureError("conjugator is numerically isotropic")
        dev = float(np.max(np.abs(G / lam - np.eye(n))))
        if dev > max(tol * 10, 1e-8):
            raise CanonicalStructureError(
                f"conjugator is not a scalar multiple of an orthogonal matrix (deviation {dev:.3g})"
            )
        O = W / np.sqrt(lam)
        O = _sign_fix(O) * O
        c = [complex(np.trace(S)) / n for S in phiI]
        c[-1] = 1.0 / complex(np.prod(c[:-1]))
        if dom.field is Field.REAL:
            O = _realize(O, tol, "the orthogonal conjugator")
            c = list(_realize_scalars(c, tol, "the scalars"))
        form = SymOdd(O, tuple(c))
        note = f"O fixed up to sign; orthogonality deviation {dev:.3g}"
    else:
        M = (_phase_fix(W) / np.linalg.norm(W)) * W
        Minv = np.linalg.inv(M)
        c = []
        for i, S in enumerate(phiI):
            if i % 2 == 0:
                c.append(complex(np.trace(Minv.T @ S @ Minv)) / n)
            else:
                c.append(complex(np.trace(M @ S @ M.T)) / n)
        c[-1] = 1.0 / complex(np.prod(c[:-1]))
        if dom.field is Field.REAL:
            M = _realize(M, tol, "the congruence matrix")
            c = list(_realize_scalars(c, tol, "the scalars"))
        form = SymEven(M, tuple(c))
        note = "M fixed by unit Frobenius norm and real positive leading entry"

    if m == 3:
        # consistency relation specific to length-3 chains:
        # f_3(C) = (J f_2(C) + f_2(C) J) / 2 with J = f_3(f_2^{-1}(I))
        try:
            x = np.linalg.solve(maps[1].transfer, coords(dom, np.eye(n)))
            J = reassemble(dom, maps[2].transfer @ x)
            worst = 0.0
            for C, img3 in zip(np.asarray(_basis_stack(dom)), image_stack(maps[2])):
                f2C = reassemble(dom, maps[1].transfer @ coords(dom, C))
                ref = (J @ f2C + f2C @ J) / 2
                worst = max(worst, float(np.max(np.abs(img3 - ref))))
            note += f"; length-3 anticommutator relation deviation {worst:.3g}"
        except np.linalg.LinAlgError:
            note += "; length-3 anticommutator relation skipped (f_2 not invertible)"

    residual = _rebuild_residual(form, dom, maps)
    return DecompositionResult(form, residual, note)


# ---------------------------------------------------------------------------
# diagonal families
# ---------------------------------------------------------------------------


def decompose_diag_pair(maps, tol: float = 1e-7) -> DecompositionResult:
    """Recover N with f_1 acting as N on diagonal coordinates and f_2 as N^{-t}.

    Every invertible N gives such a pair, so the parameters are unique with no
    gauge freedom: N is literally the transfer of f_1.
    """
    dom = _validate_tuple_on(maps, {SpaceKind.DIAGONAL})
    if len(maps) != 2:
        raise NotApplicableError("diagonal pairs have exactly 2 maps")
    _precheck(maps)
    N = np.array(maps[0].transfer)
    c = np.linalg.cond(N)
    if not np.isfinite(c) or c > COND_LIMIT:
        raise CanonicalStructureError("f_1 is not invertible")
    partner = np.linalg.inv(N).T
    dev = float(np.max(np.abs(maps[1].transfer - partner))) / max(1.0, float(np.max(np.abs(partner))))
    if dev > max(tol, 1e-9):
        raise CanonicalStructureError(
            f"f_2 is not the inverse-transpose partner of f_1 (deviation {dev:.3g})"
        )
    form = DiagPair(N)
    residual = _rebuild_residual(form, dom, maps)
    return DecompositionResult(form, residual, "parameters unique: N is the transfer of f_1")


def _permutation_pattern(T: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Split T = diag(vals) @ P^t with P a permutation; returns (sigma, vals).

    sigma[i] is the row carrying column i's single nonzero entry; vals are read
    off at those positions, indexed by row.
    """
    n = T.shape[0]
    sigma = np.argmax(np.abs(T), axis=0)
    if len(set(int(s) for s in sigma)) != n:
        raise CanonicalStructureError("transfer does not have a permutation pattern")
    vals = np.zeros(n, dtype=np.complex128)
    scale = max(1.0, float(np.max(np.abs(T))))
    mask = np.zeros_like(T, dtype=bool)
    for i in range(n):
        mask[sigma[i], i] = True
        vals[sigma[i]] = T[sigma[i], i]
    off = np.max(np.abs(np.where(mask, 0.0, T)))
    if off > tol * scale:
        raise CanonicalStructureError(
            f"transfer has off-pattern mass {off:.3g}; not a scaled permutation"
        )
    if np.min(np.abs(vals)) <= tol * scale:
        raise CanonicalStructureError("some permutation entry vanishes")
    return sigma, vals


def decompose_diag_chain(maps, tol: float = 1e-7) -> DecompositionResult:
    """Recover (P, C_1..C_m) with f_i(A) = C_i P^t A P on diagonal matrices,
    the C_i diagonal with product I. Parameters are unique: no gauge freedom.
    """
    dom = _validate_tuple_on(maps, {SpaceKind.DIAGONAL})
    m = len(maps)
    if m < 3:
        raise NotApplicableError("diagonal chains need at least 3 maps; pairs go to decompose_diag_pair")
    _precheck(maps)
    n = dom.n

    sigma0, vals0 = _permutation_pattern(np.asarray(maps[0].transfer), max(tol, 1e-9))
    P = np.zeros((n, n))
    for i in range(n):
        P[i, sigma0[i]] = 1.0
    Cs = [np.diag(vals0)]
    for f in maps[1:]:
        sig, vals = _permutation_pattern(np.asarray(f.transfer), max(tol, 1e-9))
        if not np.array_equal(sig, sigma0):
            raise CanonicalStructureError("maps do not share one permutation")
        Cs.append(np.diag(vals))
    prod = Cs[0].copy()
    for C in Cs[1:]:
        prod = prod @ C
    if np.max(np.abs(prod - np.eye(n))) > max(tol * 10, 1e-6):
        raise CanonicalStructureError("product of the diagonal scalings is not the identity")
    last = np.eye(n, dtype=np.complex128)
    for C in Cs[:-1]:
        last = last @ C
    Cs[-1] = np.diag(1.0 / np.diag(last))
    if dom.field is Field.REAL:
        Cs = [_realize(C, tol, "a diagonal scaling") for C in Cs]
    form = DiagChain(P, tuple(Cs))
    residual = _rebuild_residual(form, dom, maps)
    return DecompositionResult(form, residual, "parameters unique: permutation and scalings are pinned")


# ---------------------------------------------------------------------------
# dispatcher
# ---------------------------------------------------------------------------

_FAMILY_DECOMPOSERS = {
    "mn_chain": decompose_mn_chain,
    "hermitian": decompose_hermitian,
    "pn_pair": decompose_pn_pair,
    "pn_chain": decompose_pn_chain,
    "symmetric": decompose_symmetric,
    "diag_pair": decompose_diag_pair,
    "diag_chain": decompose_diag_chain,
}


def decompose(maps, family: str = "auto", tol: float = 1e-7) -> DecompositionResult:
    """Decompose a tuple of maps, inferring the family from the domain when
    family == "auto": definite cones dispatch by field and length, Hermitian
    pairs to the definite pair family, longer Hermitian/full/symmetric tuples
    to their chains, diagonal tuples by length.
    """
    if family != "auto":
        if family not in _FAMILY_DECOMPOSERS:
            raise InvalidParameterError(
                f"unknown family {family!r}; expected one of {sorted(_FAMILY_DECOMPOSERS)} or 'auto'"
            )
        return _FAMILY_DECOMPOSERS[family](maps, tol=tol)
    if not maps:
        raise InvalidParameterError("need at least one map")
    dom = maps[0].domain
    m = len(maps)
    kind = dom.kind
    if kind in (SpaceKind.POSDEF, SpaceKind.POSSEMIDEF):
        return decompose_pn_chain(maps, tol=tol)
    if span_of(dom).kind is SpaceKind.HERMITIAN:
        if m == 2:
            return decompose_pn_pair(maps, tol=tol)
        return decompose_hermitian(maps, tol=tol)
    if span_of(dom).kind is SpaceKind.FULL:
        return decompose_mn_chain(maps, tol=tol)
    if span_of(dom).kind is SpaceKind.SYMMETRIC:
        return decompose_symmetric(maps, tol=tol)
    if m == 2:
        return decompose_diag_pair(maps, tol=tol)
    return decompose_diag_chain(maps, tol=tol)


# ---------------------------------------------------------------------------
# weighted identity
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PowerMap:
    """scale * (core(A^pre))^post on positive definite inputs."""

    core: LinMap
    pre: float = 1.0
    post: float = 1.0
    scale: float = 1.0

    @property
    def domain(self) -> SpaceTag:
        return self.core.domain


MapLike = Union[LinMap, PowerMap]


def power_map_apply(map_: MapLike, A: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Evaluate a LinMap or PowerMap on one positive definite matrix."""
    if isinstance(map_, LinMap):
        return reassemble(map_.codomain, map_.transfer @ coords(map_.domain, A))
    inner = herm_power(np.asarray(A, dtype=np.complex128), map_.pre, tol)
    mid = reassemble(map_.core.codomain, map_.core.transfer @ coords(map_.core.domain, inner))
    if map_.post != 1:
        mid = (mid + mid.conj().T) / 2
    return map_.scale * herm_power(mid, map_.post, tol)


def _power_map_apply_batch(map_: MapLike, batch: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    if isinstance(map_, LinMap):
        return apply_batch(map_, batch)
    inner = _herm_power_batch(batch, map_.pre, tol)
    mid = apply_batch(map_.core, inner)
    if map_.post != 1:
        mid = (mid + np.conjugate(np.swapaxes(mid, -1, -2))) / 2
    return map_.scale * _herm_power_batch(mid, map_.post, tol)


def verify_weighted(
    maps,
    alpha,
    beta,
    trials: int = 1000,
    seed: int = 0,
    tol: float = 1e-8,
) -> PreservationReport:
    """Randomized check of tr(f1(A1)^a1 ... fm(Am)^am) = tr(A1^b1 ... Am^bm)
    over positive definite samples. Maps may be plain LinMaps or PowerMaps.
    """
    maps = list(maps)
    m = len(maps)
    alpha = [float(a) for a in alpha]
    beta = [float(b) for b in beta]
    if len(alpha) != m or len(beta) != m:
        raise DimensionMismatchError("alpha and beta must have one entry per map")
    if m == 0:
        raise InvalidParameterError("need at least one map")
    doms = [f.domain for f in maps]
    n = doms[0].n
    field = doms[0].field
    for d in doms:
        if d.n != n:
            raise DimensionMismatchError("maps must share one matrix size")
    pd = SpaceTag(SpaceKind.POSDEF, field, n)

    rng = np.random.default_rng(seed)
    max_res = -1.0
    worst: tuple = ()
    done = 0
    while done < trials:
        t = min(256, trials - done)
        samples = [random_batch(pd, t, rng) for _ in range(m)]
        lhs = None
        rhs = None
        for i in range(m):
            out = _power_map_apply_batch(maps[i], samples[i])
            out = (out + np.conjugate(np.swapaxes(out, -1, -2))) / 2
            F = _herm_power_batch(out, alpha[i])
            G = _herm_power_batch(samples[i], beta[i])
            lhs = F if lhs is None else lhs @ F
            rhs = G if rhs is None else rhs @ G
        lt = np.einsum("tii->t", lhs)
        rt = np.einsum("tii->t", rhs)
        res = np.abs(lt - rt) / np.maximum(1.0, np.abs(rt))
        j = int(np.argmax(res))
        if res[j] > max_res:
            max_res = float(res[j])
            worst = tuple(s[j] for s in samples)
        done += t
    return PreservationReport(
        m=m,
        spaces=tuple(pd for _ in range(m)),
        mode=CheckMode.RANDOMIZED,
        trials=trials,
        max_residual=max_res,
        worst_tuple=worst,
        tol=float(tol),
        passed=bool(max_res <= tol),
    )


def weighted_canonical_maps(form, alpha, beta, space: SpaceTag) -> list:
    """PowerMaps solving the weighted identity from a Hermitian canonical form.

    For scaled unitary conjugations (HermOdd) the i-th map is
    c_i^(1/a_i) U* A^(b_i/a_i) U; for alternating congruences (HermEven) it is
    (f_i(A^b_i))^(1/a_i) with f_i the unweighted canonical map. Scalars must be
    positive so the fractional powers stay on the definite cone.
    """
    alpha = [float(a) for a in alpha]
    beta = [float(b) for b in beta]
    if isinstance(form, HermOdd):
        c = form.c
    elif isinstance(form, HermEven):
        c = form.c
    else:
        raise InvalidParameterError("weighted maps are built from HermOdd or HermEven forms")
    m = len(c)
    if len(alpha) != m or len(beta) != m:
        raise DimensionMismatchError("alpha and beta must have one entry per map")
    if any(a == 0 for a in alpha) or any(b == 0 for b in beta):
        raise InvalidParameterError("weights must be nonzero")
    if any(x <= 0 for x in np.asarray(c).real) or np.max(np.abs(np.asarray(c).imag)) > 1e-12:
        raise InvalidParameterError("scalars must be positive for the weighted family")

    if isinstance(form, HermOdd):
        base = from_canonical(HermOdd(form.U, (1.0,) * m), space)
        return [
            PowerMap(core=base[i], pre=beta[i] / alpha[i], post=1.0, scale=float(c[i]) ** (1.0 / alpha[i]))
            for i in range(m)
        ]
    base = from_canonical(form, space)
    return [PowerMap(core=base[i], pre=beta[i], post=1.0 / alpha[i], scale=1.0) for i in range(m)]


def weighted_reduction(maps, alpha, beta, tol: float = 1e-8, seed: int = 0) -> list:
    """Strip the weights: returns LinMaps g_i(A) = f_i(A^(1/b_i))^(a_i), which
    satisfy the plain trace-product identity whenever the weighted one holds.

    The g_i are linear on the Hermitian span; they are reconstructed from
    their values on a spanning positive definite sample.
    """
    maps = list(maps)
    m = len(maps)
    alpha = [float(a) for a in alpha]
    beta = [float(b) for b in beta]
    if len(alpha) != m or len(beta) != m:
        raise DimensionMismatchError("alpha and beta must have one entry per map")
    if any(b == 0 for b in beta):
        raise InvalidParameterError("beta weights must be nonzero")
    out = []
    rng = np.random.default_rng(seed)
    for i in range(m):
        dom = maps[i].domain
        span = span_of(dom)
        st = np.asarray(_basis_stack(span))
        n = span.n
        shifts = [B + 2 * np.eye(n) for B in st]
        extras = list(random_batch(SpaceTag(SpaceKind.POSDEF, span.field, n), 3, rng))
        pairs = []
        for A in shifts + extras:
            inner = herm_power(A, 1.0 / beta[i])
            img = power_map_apply(maps[i], inner)
            img = (img + img.conj().T) / 2
            pairs.append((A, herm_power(img, alpha[i])))
        out.append(extend_from_subset(span, span, pairs, tol=max(tol * 10, 1e-6)))
    return out


# ---------------------------------------------------------------------------
# negative-control diagnostics
# ---------------------------------------------------------------------------


def reshuffled_transfer_rank(map_: LinMap, rtol: float = 1e-9) -> int:
    """Rank of the row/column reshuffle of a full-space transfer.

    A map of the two-sided form A -> X A Y reshuffles to a rank-one matrix;
    entrywise multipliers reshuffle to the rank of their multiplier matrix.
    """
    dom = span_of(map_.domain)
    cod = span_of(map_.codomain)
    if dom.kind is not SpaceKind.FULL or cod.kind is not SpaceKind.FULL:
        raise InvalidParameterError("reshuffling needs full-space transfers")
    n, k = dom.n, cod.n
    T = np.asarray(map_.transfer)
    R = T.reshape(k, k, n, n).transpose(0, 2, 1, 3).reshape(k * n, k * n)
    sv = np.linalg.svd(R, compute_uv=False)
    if sv.size == 0 or sv[0] == 0:
        return 0
    return int(np.sum(sv > rtol * sv[0]))


def nonextendable_best_fit_residual(form_or_x, trials: int = 20, seed: int = 0) -> float:
    """Smallest per-pair relative residual of the best single right factor Z in
    B C + B X C X* = (B C + B C) Z over sampled (B, C) (block-diagonal sums).

    A scalar X makes this solvable (residual at rounding level); any other X
    leaves every sampled pair far from solvable, which is the obstruction to
    extending the corner triple to a bijective one. Accepts the triple's form
    or a bare matrix X, so scalar controls can be measured too.
    """
    if isinstance(form_or_x, NonextendableTriple):
        X = form_or_x.X
    else:
        X = np.asarray(form_or_x, dtype=np.complex128)
    n = X.shape[0]
    rng = np.random.default_rng(seed)
    lefts = []
    rights = []
    per_pair = []
    for _ in range(trials):
        B = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
        C = (rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))) / np.sqrt(2)
        BC = B @ C
        L = np.zeros((2 * n, 2 * n), dtype=np.complex128)
        L[:n, :n] = BC
        L[n:, n:] = BC
        R = np.zeros((2 * n, 2 * n), dtype=np.complex128)
        R[:n, :n] = BC
        R[n:, n:] = B @ X @ C @ X.conj().T
        lefts.append(L)
        rights.append(R)
    A = np.vstack(lefts)
    Y = np.vstack(rights)
    Z, *_ = np.linalg.lstsq(A, Y, rcond=None)
    for L, R in zip(lefts, rights):
        dev = np.linalg.norm(L @ Z - R) / max(1.0, np.linalg.norm(R))
        per_pair.append(float(dev))
    return min(per_pair)
