"""Verification and construction around the identity tr(f1(A1)...fm(Am)) = tr(A1...Am).

`check_preservation` measures how far a tuple of maps is from satisfying the
identity, exhaustively on basis tuples when that is affordable and by seeded
randomized sampling otherwise. `dualize` produces the trace-dual partner of a
bijection, `extend_from_subset` rebuilds a map from sampled input/output pairs,
`embed_extend_pair` extends a corner-supported pair on M_n to a bijective pair
on M_k, and `infeasibility_certificate` certifies by rank counting that no pair
into a smaller matrix algebra can satisfy the identity.
"""
from __future__ import annotations

import enum
import functools
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    CanonicalStructureError,
    DimensionMismatchError,
    InvalidParameterError,
    MembershipError,
    NotApplicableError,
    PreservationError,
    RankDeficientError,
    InconsistentSamplesError,
    SingularMatrixError,
)
from .linmaps import COND_LIMIT, LinMap, apply_batch, complexify, image_stack, is_hermitian_preserving
from .spaces import (
    DEFAULT_TOL,
    Field,
    SpaceKind,
    SpaceTag,
    base_field,
    coords,
    random_batch,
    reassemble,
    span_dim,
    span_of,
    _basis_stack,
)

# beyond this many basis tuples the exhaustive check switches to sampling
EXHAUSTIVE_CAP = 10**6
_BATCH = 512


class CheckMode(str, enum.Enum):
    EXHAUSTIVE = "exhaustive"
    RANDOMIZED = "randomized"


@dataclass(frozen=True)
class PreservationReport:
    """Outcome of a preservation check on a tuple of maps."""

    m: int
    spaces: tuple
    mode: CheckMode
    trials: int
    max_residual: float
    worst_tuple: tuple
    tol: float
    passed: bool


def _validate_tuple(maps) -> tuple[int, int]:
    if not maps:
        raise InvalidParameterError("need at least one map")
    n = maps[0].domain.n
    k = maps[0].codomain.n
    for i, f in enumerate(maps):
        if not isinstance(f, LinMap):
            raise InvalidParameterError(f"maps[{i}] is not a LinMap")
        if f.domain.n != n:
            raise DimensionMismatchError(f"maps[{i}] has domain size {f.domain.n}, expected {n}")
        if f.codomain.n != k:
            raise DimensionMismatchError(f"maps[{i}] has codomain size {f.codomain.n}, expected {k}")
    return n, k


def _product_stack(stacks: list[np.ndarray]) -> np.ndarray:
    """All products over one index per stack: (prod d_i, n, n)."""
    out = stacks[0]
    for st in stacks[1:]:
        out = np.einsum("aij,bjk->abik", out, st)
        out = out.reshape(-1, out.shape[-2], out.shape[-1])
    return out


def check_preservation(
    maps,
    tol: float = DEFAULT_TOL,
    mode: str = "auto",
    trials: int = 10000,
    seed: int = 0,
    sample_space: SpaceTag | None = None,
) -> PreservationReport:
    """Check tr(f1(A1)...fm(Am)) = tr(A1...Am) over the maps' domains.

    mode "auto" runs the exhaustive basis-tuple check when the tuple count
    prod(dim) stays at or below 10**6 and falls back to seeded random trials
    otherwise; "exhaustive" and "randomized" force the choice. Residuals are
    |lhs - rhs| / max(1, |rhs|). `sample_space` redirects randomized sampling
    (all slots) to a specific space with the same size, e.g. a definite cone.
    """
    maps = list(maps)
    n, _ = _validate_tuple(maps)
    if sample_space is not None:
        if sample_space.n != n:
            raise DimensionMismatchError(f"sample_space has n={sample_space.n}, maps expect {n}")
        for f in maps:
            if span_of(sample_space) != span_of(f.domain):
                raise InvalidParameterError(
                    "sample_space must span the same space as every map's domain"
                )
    m = len(maps)
    dims = [span_dim(f.domain) for f in maps]
    total = 1
    for d in dims:
        total *= d
    if mode == "auto":
        chosen = CheckMode.EXHAUSTIVE if total <= EXHAUSTIVE_CAP else CheckMode.RANDOMIZED
    else:
        chosen = CheckMode(mode)

    if chosen is CheckMode.EXHAUSTIVE:
        max_res, worst = _check_exhaustive(maps, dims)
        count = total
    else:
        max_res, worst = _check_randomized(maps, trials, seed, sample_space)
        count = trials
    return PreservationReport(
        m=m,
        spaces=tuple(f.domain for f in maps),
        mode=chosen,
        trials=count,
        max_residual=float(max_res),
        worst_tuple=worst,
        tol=float(tol),
        passed=bool(max_res <= tol),
    )


def _check_exhaustive(maps, dims) -> tuple[float, tuple]:
    m = len(maps)
    half = (m + 1) // 2
    img_stacks = [image_stack(f) for f in maps]
    dom_stacks = [np.asarray(_basis_stack(f.domain)) for f in maps]

    def pair_traces(stacks):
        left = _product_stack(stacks[:half])
        if len(stacks) > half:
            right = _product_stack(stacks[half:])
        else:
            k = stacks[0].shape[-1]
            right = np.eye(k, dtype=np.complex128)[None, :, :]
        return np.einsum("aij,bji->ab", left, right)

    lhs = pair_traces(img_stacks)
    rhs = pair_traces(dom_stacks)
    res = np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs))
    flat = int(np.argmax(res))
    max_res = float(res.reshape(-1)[flat])
    idx = np.unravel_index(flat, res.shape)
    # recover per-map basis indices from the two grouped axes
    left_idx = np.unravel_index(idx[0], dims[:half])
    right_idx = np.unravel_index(idx[1], dims[half:]) if m > half else ()
    per_map = tuple(left_idx) + tuple(right_idx)
    worst = tuple(dom_stacks[i][per_map[i]] for i in range(m))
    return max_res, worst


def _check_randomized(maps, trials, seed, sample_space) -> tuple[float, tuple]:
    rng = np.random.default_rng(seed)
    m = len(maps)
    max_res = -1.0
    worst: tuple = ()
    done = 0
    while done < trials:
        t = min(_BATCH, trials - done)
        samples = []
        for f in maps:
            sp = sample_space if sample_space is not None else f.domain
            samples.append(random_batch(sp, t, rng))
        lhs_prod = apply_batch(maps[0], samples[0])
        rhs_prod = samples[0]
        for i in range(1, m):
            lhs_prod = lhs_prod @ apply_batch(maps[i], samples[i])
            rhs_prod = rhs_prod @ samples[i]
        lhs = np.einsum("tii->t", lhs_prod)
        rhs = np.einsum("tii->t", rhs_prod)
        res = np.abs(lhs - rhs) / np.maximum(1.0, np.abs(rhs))
        j = int(np.argmax(res))
        if res[j] > max_res:
            max_res = float(res[j])
            worst = tuple(s[j] for s in samples)
        done += t
    return max_res, worst


@functools.lru_cache(maxsize=None)
def _span_gram(space: SpaceTag) -> np.ndarray:
    st = _basis_stack(space)
    G = np.einsum("aij,bji->ab", st, st)
    if base_field(space) is Field.REAL:
        G = np.ascontiguousarray(G.real)
    G.setflags(write=False)
    return G


def dualize(map_: LinMap, tol: float = DEFAULT_TOL) -> LinMap:
    """The unique partner psi with tr(f(A) psi(B)) = tr(A B) for all A, B.

    Requires the map to be a bijection onto its codomain span; both sides of
    the defining identity are bilinear, so matching them on basis pairs pins
    psi down. Applying dualize twice returns the original map.
    """
    d = span_dim(map_.domain)
    if span_dim(map_.codomain) != d:
        raise InvalidParameterError("dualize needs equal domain and codomain span dimensions")
    # G[a, l] = tr(f(B_a) C_l), H[a, b] = tr(B_a B_b)
    G = map_.transfer.T @ _span_gram(map_.codomain)
    H = _span_gram(map_.domain)
    c = np.linalg.cond(G)
    if not np.isfinite(c) or c > 1.0 / max(tol, 1e-15):
        raise SingularMatrixError(f"map is not invertible enough to dualize (condition {c:.3g})")
    T = np.linalg.solve(G, H)
    return LinMap(map_.domain, map_.codomain, T)


def extend_from_subset(domain: SpaceTag, codomain: SpaceTag, samples, tol: float = 1e-7) -> LinMap:
    """Rebuild a linear map from (input, output) samples spanning the domain.

    Raises RankDeficientError when the inputs do not span, and
    InconsistentSamplesError when no linear map reproduces the outputs within
    tol (relative per-sample deviation); the error carries the worst sample.
    """
    pairs = list(samples)
    if not pairs:
        raise InvalidParameterError("no samples given")
    xs, ys = [], []
    for t, (A, B) in enumerate(pairs):
        A = np.asarray(A, dtype=np.complex128)
        B = np.asarray(B, dtype=np.complex128)
        for tag, M, side in ((domain, A, "input"), (codomain, B, "output")):
            x = coords(tag, M)
            back = reassemble(tag, x)
            scale = max(1.0, float(np.max(np.abs(M))) if M.size else 1.0)
            if np.max(np.abs(back - M)) > tol * scale:
                raise MembershipError(f"sample {t} {side} is not in the span of {span_of(tag)}")
        xs.append(coords(domain, A))
        ys.append(coords(codomain, B))
    X = np.stack(xs)  # (T, d)
    Y = np.stack(ys)  # (T, d')
    d = span_dim(domain)
    rank = np.linalg.matrix_rank(X, tol=None)
    if rank < d:
        raise RankDeficientError(f"inputs span a {rank}-dimensional subspace of a {d}-dimensional space")
    sol, *_ = np.linalg.lstsq(X, Y, rcond=None)
    T = sol.T  # (d', d)
    # per-sample consistency relative to the sample's own scale
    pred = X @ sol
    scales = np.maximum(1.0, np.max(np.abs(Y), axis=1, initial=0.0))
    dev = np.max(np.abs(pred - Y), axis=1, initial=0.0) / scales
    worst = int(np.argmax(dev))
    if dev[worst] > tol:
        raise InconsistentSamplesError(
            f"samples are not consistent with any linear map (worst relative deviation {dev[worst]:.3g})",
            worst_index=worst,
            residual=float(dev[worst]),
        )
    return LinMap(domain, codomain, T)


# ---------------------------------------------------------------------------
# corner-embedding extension
# ---------------------------------------------------------------------------


def _corner_pad(A: np.ndarray, k: int) -> np.ndarray:
    n = A.shape[0]
    Z = np.zeros((k, k), dtype=np.complex128)
    Z[:n, :n] = A
    return Z


def _corner_index_map(dom_span: SpaceTag, cod_span: SpaceTag) -> np.ndarray:
    """Index of each padded domain basis element inside the codomain basis.

    Both basis orderings embed unit-for-unit, so each padded element is exactly
    one codomain basis element.
    """
    k = cod_span.n
    idx = []
    for B in _basis_stack(dom_span):
        x = coords(cod_span, _corner_pad(B, k))
        p = int(np.argmax(np.abs(x)))
        e = np.zeros_like(x)
        e[p] = 1.0
        if np.max(np.abs(x - e)) > 1e-12:
            raise CanonicalStructureError("corner embedding did not land on a single basis element")
        idx.append(p)
    return np.asarray(idx, dtype=np.intp)


def _extend_pair_core(phi1: LinMap, phi2: LinMap) -> tuple[LinMap, LinMap]:
    dom = span_of(phi1.domain)
    cod = span_of(phi1.codomain)
    d = span_dim(dom)
    D = span_dim(cod)
    G = np.asarray(_span_gram(cod))
    corner = _corner_index_map(dom, cod)
    comp = np.setdiff1d(np.arange(D), corner)

    # X_i = orthogonal complement of Im phi_i under the trace pairing
    R1 = phi1.transfer.T @ G  # rows: pairing of each phi1 image against the basis
    R2 = phi2.transfer.T @ G
    Z1 = scipy.linalg.null_space(R1)
    Z2 = scipy.linalg.null_space(R2)
    if Z1.shape[1] != D - d or Z2.shape[1] != D - d:
        raise RankDeficientError(
            "the maps are not injective: their trace-pairing annihilators are too large"
        )

    # psi1 sends the complement basis into X2 so it pairs to zero against
    # Im phi2; psi2 sends it into X1. The remaining requirement is the Gram
    # match tr(E_i F_j) = tr(C_i C_j) on complement elements.
    H = G[np.ix_(comp, comp)]
    K = Z2.T @ G @ Z1
    c = np.linalg.cond(K)
    if not np.isfinite(c) or c > COND_LIMIT:
        raise SingularMatrixError(f"complement pairing is numerically degenerate (condition {c:.3g})")
    W = np.linalg.solve(K, H)
    F = Z1 @ W  # coordinates of psi2's complement images

    dt = np.float64 if base_field(cod) is Field.REAL else np.complex128
    T1 = np.zeros((D, D), dtype=dt)
    T2 = np.zeros((D, D), dtype=dt)
    T1[:, corner] = phi1.transfer
    T2[:, corner] = phi2.transfer
    T1[:, comp] = Z2
    T2[:, comp] = F
    return LinMap(cod, cod, T1), LinMap(cod, cod, T2)


def _restrict_to_hermitian(map_: LinMap) -> LinMap:
    """Real-linear restriction of a Hermitian-preserving map to Hermitian parts."""
    hdom = SpaceTag(SpaceKind.HERMITIAN, Field.COMPLEX, map_.domain.n)
    hcod = SpaceTag(SpaceKind.HERMITIAN, Field.COMPLEX, map_.codomain.n)
    cols = []
    for Hb in _basis_stack(hdom):
        img = reassemble(map_.codomain, map_.transfer @ coords(map_.domain, Hb))
        cols.append(coords(hcod, img))
    return LinMap(hdom, hcod, np.stack(cols, axis=1))


def embed_extend_pair(phi1: LinMap, phi2: LinMap, tol: float = 1e-8) -> tuple[LinMap, LinMap]:
    """Extend a trace-product pair on M_n, placed in the top-left corner of M_k,
    to a bijective pair on all of M_k.

    The outputs agree with the inputs on corner-supported matrices and satisfy
    tr(psi1(A) psi2(B)) = tr(A B) on all of M_k. When both inputs preserve
    Hermitian matrices the construction runs in real Hermitian coordinates, so
    the outputs preserve them too. Raises NotApplicableError when n > k (no
    such pair exists; see infeasibility_certificate) and PreservationError when
    the inputs do not satisfy the identity on M_n.
    """
    for name, f in (("phi1", phi1), ("phi2", phi2)):
        if span_of(f.domain).kind is not SpaceKind.FULL or span_of(f.codomain).kind is not SpaceKind.FULL:
            raise InvalidParameterError(f"{name} must map a full matrix space into a full matrix space")
    if phi1.domain != phi2.domain or phi1.codomain != phi2.codomain:
        raise InvalidParameterError("the two maps must share domain and codomain")
    n = phi1.domain.n
    k = phi1.codomain.n
    if n > k:
        raise NotApplicableError(
            f"no trace-product pair M_{n} -> M_{k} exists for n > k; rank counting forbids it"
        )
    report = check_preservation([phi1, phi2], tol=max(tol, 1e-8), mode="exhaustive")
    if not report.passed:
        raise PreservationError(
            f"inputs do not satisfy the trace-product identity (residual {report.max_residual:.3g})",
            report=report,
        )
    if n == k:
        for name, f in (("phi1", phi1), ("phi2", phi2)):
            c = np.linalg.cond(f.transfer)
            if not np.isfinite(c) or c > COND_LIMIT:
                raise SingularMatrixError(f"{name} is not invertible, so it cannot be the extension")
        return phi1, phi2

    hermitian_route = (
        phi1.domain.field is Field.COMPLEX
        and is_hermitian_preserving(phi1)
        and is_hermitian_preserving(phi2)
    )
    if hermitian_route:
        psi1h, psi2h = _extend_pair_core(_restrict_to_hermitian(phi1), _restrict_to_hermitian(phi2))
        return complexify(psi1h), complexify(psi2h)
    return _extend_pair_core(phi1, phi2)


# ---------------------------------------------------------------------------
# infeasibility by rank counting
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InfeasibilityCertificate:
    """Rank evidence that no trace-product pair M_n -> M_k exists.

    The target Gram matrix [tr(B_a B_b)] over the domain basis has full rank
    n^2, while any candidate pair's Gram [tr(f1(B_a) f2(B_b))] factors through
    M_k and so has rank at most k^2. `singular_values` belongs to the
    highest-rank candidate Gram among the sampled pairs.
    """

    n: int
    k: int
    field: Field
    gram_rhs_rank: int
    gram_lhs_rank: int
    rank_bound: int
    singular_values: np.ndarray
    cutoff: float
    certifies_impossibility: bool


def infeasibility_certificate(
    n: int,
    k: int,
    field: Field = Field.COMPLEX,
    trials: int = 20,
    seed: int = 0,
    cutoff_factor: float = 1e-9,
) -> InfeasibilityCertificate:
    """Certify that no pair of maps M_n -> M_k satisfies the identity when n > k.

    Samples `trials` random map pairs and ranks their Gram matrices at the
    cutoff `cutoff_factor * sigma_max`; every rank is at most k^2 by the
    factorization bound, while matching tr(A B) would need rank n^2.
    """
    field = Field(field)
    if n <= k:
        raise NotApplicableError(
            f"pairs M_{n} -> M_{k} with n <= k exist, so there is nothing to certify"
        )
    if trials < 1:
        raise InvalidParameterError("trials must be positive")
    dom = SpaceTag(SpaceKind.FULL, field, n)
    cod = SpaceTag(SpaceKind.FULL, field, k)
    d, Dk = span_dim(dom), span_dim(cod)
    H = np.asarray(_span_gram(dom))
    rhs_rank = int(np.linalg.matrix_rank(H))
    rng = np.random.default_rng(seed)
    real = field is Field.REAL

    best_rank = -1
    best_sv = None
    cutoff_used = 0.0
    for _ in range(trials):
        if real:
            T1 = rng.standard_normal((Dk, d))
            T2 = rng.standard_normal((Dk, d))
        else:
            T1 = (rng.standard_normal((Dk, d)) + 1j * rng.standard_normal((Dk, d))) / np.sqrt(2)
            T2 = (rng.standard_normal((Dk, d)) + 1j * rng.standard_normal((Dk, d))) / np.sqrt(2)
        f1 = LinMap(dom, cod, T1)
        f2 = LinMap(dom, cod, T2)
        # lhs Gram factors as T1^t Q T2 with Q the k^2 x k^2 pairing Gram
        lhs = f1.transfer.T @ np.asarray(_span_gram(cod)) @ f2.transfer
        sv = np.linalg.svd(lhs, compute_uv=False)
        cut = cutoff_factor * (sv[0] if sv.size else 0.0)
        rank = int(np.sum(sv > cut))
        if rank > best_rank:
            best_rank = rank
            best_sv = sv
            cutoff_used = float(cut)

    bound = Dk
    return InfeasibilityCertificate(
        n=n,
        k=k,
        field=field,
        gram_rhs_rank=rhs_rank,
        gram_lhs_rank=best_rank,
        rank_bound=bound,
        singular_values=np.asarray(best_sv),
        cutoff=cutoff_used,
        certifies_impossibility=bool(bound < rhs_rank and best_rank <= bound),
    )
