import numpy as np
import pytest

from traceprod import (
    CanonicalStructureError,
    apply,
    DiagChain,
    DiagPair,
    Field,
    GenSpec,
    Hadamard,
    HermEven,
    HermOdd,
    LinMap,
    MnChain,
    NotApplicableError,
    PnPair,
    PositivityError,
    PowerMap,
    PreservationError,
    RankOneFrame,
    SpaceKind,
    SpaceTag,
    SymEven,
    SymOdd,
    check_preservation,
    decompose,
    decompose_diag_chain,
    decompose_diag_pair,
    decompose_mn_chain,
    decompose_pn_pair,
    from_canonical,
    generate,
    herm_power,
    identity_map,
    image_stack,
    nonextendable_best_fit_residual,
    power_map_apply,
    recover_conjugator,
    reshuffled_transfer_rank,
    verify_weighted,
    weighted_canonical_maps,
    weighted_reduction,
)
from conftest import basis_stack

C2 = SpaceTag(SpaceKind.FULL, Field.COMPLEX, 2)
C3 = SpaceTag(SpaceKind.FULL, Field.COMPLEX, 3)
H3 = SpaceTag(SpaceKind.HERMITIAN, Field.COMPLEX, 3)
R2 = SpaceTag(SpaceKind.FULL, Field.REAL, 2)
D3 = SpaceTag(SpaceKind.DIAGONAL, Field.REAL, 3)


def _rand_inv(rng, n, real=False):
    while True:
        M = rng.standard_normal((n, n))
        if not real:
            M = M + 1j * rng.standard_normal((n, n))
        if np.linalg.cond(M) < 50:
            return M


def test_recover_conjugator():
    rng = np.random.default_rng(0)
    N = _rand_inv(rng, 3)
    Ninv = np.linalg.inv(N)
    images = [N @ E @ Ninv for E in basis_stack(C3)]
    got = recover_conjugator(images)
    # recovery is up to a scalar: N_rec N^{-1} must be scalar
    Q = got @ Ninv
    lam = np.trace(Q) / 3
    assert np.max(np.abs(Q - lam * np.eye(3))) <= 1e-8 * abs(lam)


def test_recover_conjugator_rejects_non_automorphism():
    rng = np.random.default_rng(1)
    images = [rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)) for _ in range(9)]
    with pytest.raises(CanonicalStructureError):
        recover_conjugator(images)


@pytest.mark.parametrize("field", [Field.COMPLEX, Field.REAL])
def test_mn_chain_round_trip(field):
    gen = generate(GenSpec(family="mn_chain", n=3, m=4, field=field, seed=21))
    res = decompose(gen.maps)
    assert isinstance(res.form, MnChain)
    assert res.reconstruction_residual <= 1e-7
    # recovered chain matches the original up to one shared scalar
    t = None
    for got, want in zip(res.form.N, gen.form.N):
        lam = np.trace(np.linalg.solve(want, got)) / 3
        assert np.max(np.abs(got - lam * want)) <= 1e-7 * max(1.0, abs(lam) * np.max(np.abs(want)))
        if t is None:
            t = lam
        assert np.isclose(lam, t, atol=1e-7)


def test_mn_chain_needs_three():
    gen = generate(GenSpec(family="mn_chain", n=3, m=3, seed=2))
    with pytest.raises(NotApplicableError):
        decompose_mn_chain(gen.maps[:2])


def test_herm_odd_round_trip_scalars_exact():
    gen = generate(GenSpec(family="herm_odd", n=3, m=5, seed=3))
    res = decompose(gen.maps)
    assert isinstance(res.form, HermOdd)
    assert res.reconstruction_residual <= 1e-7
    c = np.array(res.form.c)
    assert abs(np.prod(c) - 1.0) <= 1e-9
    assert np.allclose(np.abs(c), np.abs(np.array(gen.form.c)), atol=1e-7)
    U = res.form.U
    assert np.max(np.abs(U.conj().T @ U - np.eye(3))) <= 1e-8


def test_herm_even_round_trip():
    gen = generate(GenSpec(family="herm_even", n=3, m=4, seed=4))
    res = decompose(gen.maps)
    assert isinstance(res.form, HermEven)
    assert res.reconstruction_residual <= 1e-7
    assert abs(np.prod(np.array(res.form.c)) - 1.0) <= 1e-9


@pytest.mark.parametrize("transpose", [False, True])
@pytest.mark.parametrize("n", [2, 3, 4])
def test_pn_pair_round_trip_and_branch(n, transpose):
    rng = np.random.default_rng(100 * n + transpose)
    tag = SpaceTag(SpaceKind.HERMITIAN, Field.COMPLEX, n)
    M = _rand_inv(rng, n)
    maps = from_canonical(PnPair(M, transpose=transpose), tag)
    res = decompose_pn_pair(maps)
    assert res.form.transpose is transpose
    assert res.reconstruction_residual <= 1e-7


def test_pn_pair_rejects_triples():
    gen = generate(GenSpec(family="herm_odd", n=3, m=3, seed=5))
    with pytest.raises(NotApplicableError):
        decompose_pn_pair(gen.maps)


@pytest.mark.parametrize(
    "field,m,expect",
    [
        (Field.COMPLEX, 2, PnPair),
        (Field.COMPLEX, 3, HermOdd),
        (Field.COMPLEX, 4, HermEven),
        (Field.REAL, 2, SymEven),
        (Field.REAL, 3, SymOdd),
    ],
)
def test_pn_chain_round_trip(field, m, expect):
    gen = generate(GenSpec(family="pn_chain", n=3, m=m, field=field, seed=6))
    res = decompose(gen.maps)
    assert isinstance(res.form, expect)
    assert res.reconstruction_residual <= 1e-7


@pytest.mark.parametrize("field", [Field.COMPLEX, Field.REAL])
def test_sym_odd_round_trip(field):
    gen = generate(GenSpec(family="sym_odd", n=3, m=3, field=field, seed=7))
    res = decompose(gen.maps)
    assert isinstance(res.form, SymOdd)
    assert res.reconstruction_residual <= 1e-7
    O = res.form.O
    assert np.max(np.abs(O.T @ O - np.eye(3))) <= 1e-8
    assert abs(np.prod(np.array(res.form.c)) - 1.0) <= 1e-9
    if field is Field.REAL:
        assert np.max(np.abs(np.imag(np.array(res.form.c)))) <= 1e-10


def test_sym_even_round_trip():
    gen = generate(GenSpec(family="sym_even", n=3, m=4, seed=8))
    res = decompose(gen.maps)
    assert isinstance(res.form, SymEven)
    assert res.reconstruction_residual <= 1e-7


def test_diag_pair_oracle_exact():
    N = np.array([[1.0, 1.0], [0.0, 1.0]])
    tag = SpaceTag(SpaceKind.DIAGONAL, Field.REAL, 2)
    maps = from_canonical(DiagPair(N), tag)
    res = decompose_diag_pair(maps)
    assert np.array_equal(res.form.N, N)
    assert res.reconstruction_residual == 0.0


def test_diag_chain_oracle():
    P = np.zeros((3, 3))
    P[0, 1] = P[1, 2] = P[2, 0] = 1.0
    Cs = (np.diag([2.0, 1.0, 1.0]), np.diag([0.5, 1.0, 1.0]), np.eye(3))
    maps = from_canonical(DiagChain(P, Cs), D3)
    res = decompose_diag_chain(maps)
    assert np.array_equal(res.form.P, P)
    prod = np.eye(3)
    for got, want in zip(res.form.C, Cs):
        assert np.allclose(got, want)
        prod = prod @ got
    assert np.max(np.abs(prod - np.eye(3))) <= 1e-9


def test_diag_chain_round_trip():
    gen = generate(GenSpec(family="diag_chain", n=4, m=4, field=Field.REAL, seed=9))
    res = decompose(gen.maps)
    assert isinstance(res.form, DiagChain)
    assert res.reconstruction_residual <= 1e-7
    prod = np.eye(4)
    for Ci in res.form.C:
        prod = prod @ Ci
    assert np.max(np.abs(prod - np.eye(4))) <= 1e-9


def test_decompose_dispatcher_family_override():
    gen = generate(GenSpec(family="diag_pair", n=3, m=2, seed=10))
    res = decompose(gen.maps, family="diag_pair")
    assert isinstance(res.form, DiagPair)
    with pytest.raises(Exception):
        decompose(gen.maps, family="no_such_family")


def test_decompose_precheck_rejects_broken_tuple():
    f = LinMap(C2, C2, 2.0 * np.eye(4))
    maps = [f, identity_map(C2), identity_map(C2)]
    with pytest.raises(PreservationError):
        decompose(maps)


def test_herm_power():
    rng = np.random.default_rng(11)
    G = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    A = G @ G.conj().T + 0.3 * np.eye(3)
    assert np.allclose(herm_power(A, 0.5) @ herm_power(A, 0.5), A)
    assert np.allclose(herm_power(A, -1.0), np.linalg.inv(A))
    assert np.allclose(herm_power(A, 2.0), A @ A)
    assert np.allclose(herm_power(A, 1.0), A)
    with pytest.raises(PositivityError):
        herm_power(np.diag([1.0, -1.0, 2.0]).astype(complex), 0.5)


def test_power_map_apply():
    gen = generate(GenSpec(family="pn_chain", n=3, m=3, seed=12))
    base = gen.maps[0]
    pm = PowerMap(core=base, pre=2.0, post=1.0, scale=3.0)
    rng = np.random.default_rng(13)
    G = rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3))
    A = G @ G.conj().T + 0.2 * np.eye(3)
    want = 3.0 * apply(base, herm_power(A, 2.0))
    assert np.allclose(power_map_apply(pm, A), want)


def test_verify_weighted_trivial_weights_reduce_to_plain_check():
    gen = generate(GenSpec(family="pn_chain", n=3, m=3, seed=14))
    report = verify_weighted(list(gen.maps), (1.0, 1.0, 1.0), (1.0, 1.0, 1.0), trials=200, seed=0)
    assert report.passed


def test_verify_weighted_control_fails():
    tag = SpaceTag(SpaceKind.HERMITIAN, Field.COMPLEX, 3)
    ident = [identity_map(tag), identity_map(tag)]
    report = verify_weighted(ident, (1.0, 1.0), (2.0, 2.0), trials=200, seed=0)
    assert not report.passed
    assert report.max_residual >= 1e-2


@pytest.mark.parametrize(
    "alpha,beta",
    [((2.0, 0.5), (1.0, 1.0)), ((-1.0, 1.0), (0.5, 2.0)), ((0.5, 0.5), (-1.0, -1.0))],
)
def test_weighted_canonical_pairs(alpha, beta):
    rng = np.random.default_rng(15)
    tag = SpaceTag(SpaceKind.HERMITIAN, Field.COMPLEX, 3)
    U, _ = np.linalg.qr(rng.standard_normal((3, 3)) + 1j * rng.standard_normal((3, 3)))
    M = U @ np.diag(rng.uniform(0.6, 1.6, 3)).astype(complex)
    form = HermEven(M, (1.8, 1.0 / 1.8))
    wmaps = weighted_canonical_maps(form, alpha, beta, tag)
    report = verify_weighted(wmaps, alpha, beta, trials=300, seed=1, tol=1e-8)
    assert report.passed


def test_weighted_odd_scaled_conjugations():
    gen = generate(GenSpec(family="pn_chain", n=3, m=3, seed=16))
    alpha = (1.0, 2.0, 0.5)
    beta = (2.0, 1.0, 1.0)
    wmaps = weighted_canonical_maps(gen.form, alpha, beta, gen.space)
    report = verify_weighted(wmaps, alpha, beta, trials=300, seed=2, tol=1e-8)
    assert report.passed


def test_weighted_reduction_produces_linear_preserver():
    gen = generate(GenSpec(family="pn_chain", n=3, m=3, seed=17))
    alpha = (1.0, 2.0, 1.0)
    beta = (2.0, 1.0, 1.0)
    wmaps = weighted_canonical_maps(gen.form, alpha, beta, gen.space)
    lin = weighted_reduction(wmaps, alpha, beta, seed=3)
    assert all(isinstance(f, LinMap) for f in lin)
    assert check_preservation(lin, tol=1e-8).passed


def test_weighted_reduction_identity_weights_is_identity_on_maps():
    gen = generate(GenSpec(family="pn_chain", n=3, m=2, seed=18))
    ones = (1.0, 1.0)
    lin = weighted_reduction(list(gen.maps), ones, ones, seed=4)
    for got, want in zip(lin, gen.maps):
        assert np.max(np.abs(got.transfer - want.transfer)) <= 1e-6


def test_reshuffled_rank_separates_two_sided_from_hadamard():
    gen = generate(GenSpec(family="mn_chain", n=3, m=3, seed=19))
    assert reshuffled_transfer_rank(gen.maps[0]) == 1
    C = np.array([[1.0, 2.0], [2.0, 1.0]])
    had = from_canonical(Hadamard(C), R2)
    assert reshuffled_transfer_rank(had[0]) == np.linalg.matrix_rank(C)
    frame = generate(GenSpec(family="rank_one_frame", n=3, m=2, seed=20))
    assert reshuffled_transfer_rank(frame.maps[0]) > 1


def test_hadamard_triple_fails_with_explicit_witness():
    C = np.array([[1.0, 2.0], [2.0, 1.0]])
    maps = from_canonical(Hadamard(C), R2)
    assert check_preservation(maps, tol=1e-9).passed
    triple = [maps[0], maps[1], identity_map(R2)]
    report = check_preservation(triple, tol=1e-9)
    assert not report.passed
    # hand witness: (E12, E22, E21) gives lhs 2 and rhs 1
    E12 = np.array([[0.0, 1.0], [0.0, 0.0]])
    E22 = np.diag([0.0, 1.0])
    E21 = E12.T
    lhs = np.trace((E12 * C) @ (E22 / C) @ E21)
    rhs = np.trace(E12 @ E22 @ E21)
    assert np.isclose(lhs, 2.0) and np.isclose(rhs, 1.0)
    assert report.max_residual >= 1.0 - 1e-12


def test_rank_one_frame_pair_passes_but_triple_fails():
    gen = generate(GenSpec(family="rank_one_frame", n=3, m=2, seed=21))
    assert check_preservation(gen.maps, tol=1e-9).passed
    triple = [gen.maps[0], gen.maps[1], identity_map(gen.maps[0].domain)]
    report = check_preservation(triple, tol=1e-9)
    assert not report.passed


def test_nonextendable_triple_passes_corner_identity():
    gen = generate(GenSpec(family="nonextendable", n=2, m=3, seed=22))
    report = check_preservation(gen.maps, tol=1e-10)
    assert report.passed
    assert report.trials == 64


def test_nonextendable_best_fit_gap():
    gen = generate(GenSpec(family="nonextendable", n=2, m=3, seed=23))
    assert nonextendable_best_fit_residual(gen.form, trials=16, seed=0) > 1e-3
    # scalar X admits the trivial extension, so the best fit is essentially exact
    assert nonextendable_best_fit_residual(1.7 * np.eye(2, dtype=complex), trials=16, seed=0) < 1e-10


def test_decomposition_result_reports_gauge():
    gen = generate(GenSpec(family="mn_chain", n=3, m=3, seed=24))
    res = decompose(gen.maps)
    assert isinstance(res.gauge_note, str) and res.gauge_note
