import random
import warnings

import pytest
from hypothesis import given, settings, strategies as st

from amattain import exactreal as xr
from amattain import spectra as sp
from amattain.amclass import (
    AMType,
    DecreasingAccumulation,
    Member,
    MixingPair,
    NonCanonicalWarning,
    NotMember,
    NotPositiveCertificate,
    PartialIsometryReason,
    Stream,
    build_mixing_witness,
    check_partial_isometry,
    classify_AM_general,
    classify_AM_positive,
    decompose,
    synthesize,
)
from amattain.dsl import load_operator
from amattain.errors import (
    EmptySelection,
    InvalidOperator,
    LimitsEqual,
    MisalignedIndexModels,
    NormBoundViolated,
    NotAMember,
    NotAPartialIsometry,
    OverlappingSupports,
)
from amattain.operators import BasisMapOperator, Piece, Singleton, Weight, diagonal, restrict
from amattain.minattain import min_modulus

from opgen import canonical_triple, random_positive_diagonal

P = xr.parse_real


def test_i_minus_d_plus_p_decomposition():
    D = diagonal(points=["2"], tails=[("1 - 1/n", 2)])
    d = decompose(D)
    assert xr.eq(d.alpha, xr.ONE) and d.type_flag is AMType.FIRST
    assert xr.symbolically_equal(d.K.spectrum.tails[0].value_expr, P("1/n"))
    assert xr.eq(d.F.spectrum.finite_points[0].value, xr.ONE)
    assert xr.is_zero(d.K.spectrum.finite_points[0].value)
    rebuilt = synthesize(d.alpha, d.K, d.F)
    assert sp.spectra_equal(rebuilt.spectrum, D.spectrum)


def test_two_limit_points_mixing_pair():
    v = classify_AM_positive(diagonal(tails=[("1 - 1/n", 1), ("2 - 1/n", 1)]))
    cert = v.certificate
    assert isinstance(cert, MixingPair)
    assert xr.eq(cert.a, xr.ONE) and xr.eq(cert.b, xr.real(2))
    assert [str(cert.c(n)) for n in (1, 2, 4)] == ["3/2", "5/4", "9/8"]


def test_constant_streams():
    v = classify_AM_positive(diagonal(infinite=["0", "1"]))
    cert = v.certificate
    assert isinstance(cert, MixingPair)
    for n in (1, 2, 3, 10):
        assert xr.eq(cert.c(n), P(f"1/{2 * n}"))
        assert xr.eq(cert.t_sq(n), P(f"1 - 1/{4 * n * n}"))


def test_limit_differs_from_infinite_value():
    v = classify_AM_positive(diagonal(infinite=["1"], tails=[("2 - 1/n", 1)]))
    assert isinstance(v.certificate, MixingPair)


def test_decreasing_accumulation():
    v = classify_AM_positive(diagonal(tails=[("2 + 2*sqrt(1/n)", 1)]))
    assert isinstance(v.certificate, DecreasingAccumulation)
    assert xr.eq(v.certificate.limit, xr.real(2))


def test_decreasing_tail_next_to_increasing_one():
    # two limit points, but no second non-decreasing stream: the decreasing
    # tail is the refutation
    v = classify_AM_positive(diagonal(tails=[("1 - 1/n", 1), ("3 + 1/n", 1)]))
    assert isinstance(v.certificate, DecreasingAccumulation) and v.certificate.tail_id == 1


def test_not_positive():
    v = classify_AM_positive(diagonal(points=["-1"], infinite=["1"]))
    assert isinstance(v.certificate, NotPositiveCertificate)
    assert xr.eq(v.certificate.value, P("-1"))


def test_decompose_examples():
    d = decompose(diagonal(points=["3", "2", "1"], infinite=["0"]))
    assert xr.is_zero(d.alpha)
    assert [str(p.value) for p in d.F.spectrum.finite_points] == ["3", "2", "1"]
    d = decompose(diagonal(infinite=["1"]))
    assert xr.eq(d.alpha, xr.ONE) and d.type_flag is AMType.SECOND
    d = decompose(diagonal(points=[("0", 2)], infinite=["1"]))
    assert xr.eq(d.alpha, xr.ONE)
    assert xr.eq(d.K.spectrum.finite_points[0].value, xr.ONE)
    with pytest.raises(NotAMember):
        decompose(diagonal(tails=[("1/n", 1)]))


def test_shift_rule_keeps_c_below_b():
    # a = 1/2, b = 2, c_1 = 5/4 while b_1 = 0: the b stream must be advanced
    D = diagonal(tails=[("1/2 - 1/(2*n)", 1), ("2 - 2/n", 1)])
    cert = classify_AM_positive(D).certificate
    assert cert.seq_b.offset >= 1
    for n in range(1, 30):
        assert xr.compare(cert.a_n(n), cert.c(n)) is not xr.GT
        assert xr.compare(cert.c(n), cert.b_n(n)) is not xr.GT


def test_build_mixing_witness_errors():
    s = diagonal(tails=[("1 - 1/n", 1), ("1 - 1/(n + 1)", 1)]).spectrum
    with pytest.raises(LimitsEqual):
        build_mixing_witness(s, Stream("tail", 0), Stream("tail", 1))
    # argument order does not matter
    s = diagonal(tails=[("2 - 1/n", 1), ("1 - 1/n", 1)]).spectrum
    cert = build_mixing_witness(s, Stream("tail", 0), Stream("tail", 1))
    assert xr.eq(cert.a, xr.ONE)


def test_synthesize_checks():
    K = diagonal(points=["1/2"], tails=[("1/n", 1)])
    F = diagonal(points=["1"], tails=[("0", 1)])
    with pytest.raises(OverlappingSupports):
        synthesize(xr.ONE, K, F)
    with pytest.raises(MisalignedIndexModels):
        synthesize(xr.ONE, K, diagonal(tails=[("0", 1)]))
    with pytest.raises(InvalidOperator):
        synthesize(xr.ONE, diagonal(tails=[("1 + 1/n", 1)]), diagonal(tails=[("0", 1)]))
    with pytest.raises(InvalidOperator):
        synthesize(xr.ONE, diagonal(tails=[("0", 1)]), diagonal(tails=[("1/n", 1)]))
    big = diagonal(points=["3"], tails=[("1/n", 1)])
    zero = diagonal(points=["0"], tails=[("0", 1)])
    with pytest.raises(NormBoundViolated):
        synthesize(xr.ONE, big, zero)
    with pytest.warns(NonCanonicalWarning):
        synthesize(P("3/2"), diagonal(points=["2"], tails=[("1/n", 1)]), zero)


def test_synthesize_scalar_and_shifted_triple():
    zero = diagonal(infinite=["0"])
    I2 = synthesize(xr.real(2), zero, zero)
    assert xr.eq(I2.spectrum.infinite_points[0].value, xr.real(2))
    K = diagonal(points=["0"], tails=[("1/n", 2)])
    F = diagonal(points=["1"], tails=[("0", 2)])
    T = synthesize(xr.ONE, K, F)
    assert sp.spectra_equal(T.spectrum, diagonal(points=["2"], tails=[("1 - 1/n", 2)]).spectrum)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_uniqueness_round_trip(seed):
    tr = canonical_triple(random.Random(seed))
    with warnings.catch_warnings():
        warnings.simplefilter("error", NonCanonicalWarning)
        D = synthesize(tr.alpha, tr.K, tr.F)
    assert decompose(D).same_as(tr)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_decomposition_invariants(seed):
    D = random_positive_diagonal(random.Random(seed))
    v = classify_AM_positive(D)
    if not isinstance(v, Member):
        return
    d = v.decomposition
    assert xr.compare(sp.supremum(d.K.spectrum).value, d.alpha) is not xr.GT
    for p, q in zip(d.K.spectrum.finite_points, d.F.spectrum.finite_points):
        assert xr.is_zero(p.value) or xr.is_zero(q.value)
    assert sp.spectra_equal(synthesize(d.alpha, d.K, d.F).spectrum, D.spectrum)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 10 ** 6))
def test_members_attain_on_every_selection(seed):
    rng = random.Random(seed)
    D = random_positive_diagonal(rng)
    if not isinstance(classify_AM_positive(D), Member):
        return
    s = D.spectrum
    for _ in range(5):
        fin = frozenset(i for i in range(len(s.finite_points)) if rng.random() < 0.5)
        tails = {i: rng.choice([sp.All(), sp.SuffixFrom(rng.randint(1, 30)), sp.FiniteList((t.start + 3,))]) for i, t in enumerate(s.tails) if rng.random() < 0.7}
        inf = {i: rng.choice([sp.All(), sp.FirstK(2)]) for i in range(len(s.infinite_points)) if rng.random() < 0.7}
        sel = sp.IndexSelection(fin, tails, inf)
        try:
            R = restrict(D, sel)
        except EmptySelection:
            continue
        assert min_modulus(R, 16).attained


def test_certificate_selection_is_unattained():
    D = diagonal(points=["1/2"], tails=[("1 + 1/n", 1)])
    v = classify_AM_positive(D)
    sel = sp.IndexSelection(frozenset(), {v.certificate.tail_id: sp.All()}, {})
    assert not min_modulus(restrict(D, sel), 16).attained


def test_general_classification(corpus):
    V = load_operator(corpus / "dilation_v.op", 64)
    g = classify_AM_general(V, 64)
    assert isinstance(g.verdict, Member) and xr.eq(g.verdict.decomposition.alpha, xr.ONE)
    assert g.polar.isometry_part.target_of(3) == 6
    for name in ("dilation_adjoint.op", "i_plus_u.op"):
        g = classify_AM_general(load_operator(corpus / name, 64), 64)
        assert isinstance(g.verdict, NotMember) and g.polar is None


def test_partial_isometries(corpus):
    V = load_operator(corpus / "dilation_v.op", 64)
    assert check_partial_isometry(V, 32).reason is PartialIsometryReason.FINITE_KERNEL
    Vs = load_operator(corpus / "dilation_adjoint.op", 64)
    r = check_partial_isometry(Vs, 32)
    assert not r.is_am and r.reason is PartialIsometryReason.BOTH_INFINITE
    rank3 = BasisMapOperator(
        tuple(Singleton(i, Weight(xr.ONE), i) for i in (1, 2, 3)),
        (Piece(4, 1, Weight(xr.ZERO)),),
    )
    r = check_partial_isometry(rank3, 32)
    assert r.is_am and r.reason is PartialIsometryReason.FINITE_RANGE
    with pytest.raises(NotAPartialIsometry):
        check_partial_isometry(load_operator(corpus / "backward_shift.op", 64), 32)
