from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from amattain import exactreal as xr
from amattain.errors import LimitUndetermined, NegativeSqrt, ParseError, Undecided, ZeroDenominator
from amattain.exactreal import EQ, GT, LT


P = xr.parse_real


# -- parsing and printing ----------------------------------------------------


def test_rational_literal_vs_division_node():
    assert isinstance(P("3/4"), xr.Rational)
    assert isinstance(P("3 / 4"), xr.Div)
    assert xr.eq(P("3/4"), P("3 / 4"))


def test_negative_literal_folds():
    e = P("-2")
    assert isinstance(e, xr.Rational) and e.value == -2


@pytest.mark.parametrize("text", ["1 - 1/n", "2 + 2*sqrt(1/n)", "n/(n + 1)", "sqrt(2)", "1/(n - 1)", "-(3/2)"])
def test_print_parse_round_trip(text):
    e = P(text)
    assert P(str(e)) == e


def test_parse_error_position():
    with pytest.raises(ParseError) as info:
        P("1 + * 2")
    assert info.value.position == 4


@pytest.mark.parametrize("text", ["", "(1 + 2", "sqrt 2", "1 2", "2 $ 3"])
def test_parse_errors(text):
    with pytest.raises(ParseError):
        P(text)


def test_zero_denominator_and_negative_sqrt():
    with pytest.raises(ZeroDenominator):
        P("1/0")
    with pytest.raises(ZeroDenominator):
        P("1 / (2 - 2)")
    with pytest.raises(NegativeSqrt):
        P("sqrt(1 - 2)")


_leaf = st.builds(lambda a, b: xr.real(Fraction(a, b)), st.integers(-20, 20), st.integers(1, 9))


def _tree(children):
    return st.one_of(
        st.builds(xr.Add, children, children),
        st.builds(xr.Sub, children, children),
        st.builds(xr.Mul, children, children),
        st.builds(lambda x: xr.Neg(x), children),
        st.builds(lambda k: xr.sqrt(k), st.integers(0, 50)),
    )


exprs = st.recursive(_leaf, _tree, max_leaves=8)


@given(exprs)
def test_print_parse_lossless(e):
    assert P(str(e)) == e


# -- comparison --------------------------------------------------------------


def test_nested_radical_comparisons():
    assert xr.compare(xr.sqrt(2), P("1414/1000")) is GT
    assert xr.compare(P("sqrt(8) / 2"), xr.sqrt(2)) is EQ
    assert xr.compare(P("1 - 1/5"), P("1 - 1/6")) is LT


def test_equality_is_exact_not_approximate():
    tiny = xr.real(Fraction(1, 2 ** 300))
    assert xr.compare(xr.Add(xr.sqrt(2), tiny), xr.sqrt(2)) is GT


def test_undecided_rather_than_guess():
    # equal, but the difference of nested radicals lies outside the surd fragment
    with pytest.raises(Undecided):
        xr.compare(P("sqrt(2) + sqrt(3)"), P("sqrt(5 + 2*sqrt(6))"))


@given(exprs, exprs)
def test_compare_antisymmetric(a, b):
    try:
        c = xr.compare(a, b)
    except Undecided:
        return
    assert xr.compare(b, a) is c.flip()


@given(exprs)
def test_compare_reflexive(a):
    assert xr.compare(a, a) is EQ


@given(exprs, st.integers(8, 200))
def test_intervals_nest(a, bits):
    try:
        lo1, hi1 = xr.eval_interval(a, bits)
        lo2, hi2 = xr.eval_interval(a, bits + 40)
    except Undecided:
        return
    assert lo1 <= lo2 <= hi2 <= hi1
    assert hi2 - lo2 < Fraction(1, 2 ** (bits + 40))


@given(st.integers(2, 10 ** 6))
def test_squarefree_canonical_form(m):
    form = xr.surd_form(xr.sqrt(m))
    for d, coeff in form:
        assert d == 1 or all(d % (p * p) for p in range(2, int(d ** 0.5) + 1))
    back = xr.surd_to_expr(form)
    assert xr.eq(back, xr.sqrt(m))


# -- symbolic ----------------------------------------------------------------


def test_gram_of_i_plus_u_simplifies():
    re, im = P("1 + sqrt(1/n)"), P("sqrt(1 - 1/n)")
    g = xr.simplify(xr.Add(xr.Mul(re, re), xr.Mul(im, im)))
    assert xr.symbolically_equal(g, P("2 + 2*sqrt(1/n)"))


def test_substitution_shift():
    e = xr.simplify(xr.substitute(P("1/(n - 1)"), P("n + 1")))
    assert str(e) == "1 / n"


@pytest.mark.parametrize(
    "text, lim",
    [("1 - 1/n", "1"), ("2 + 2/sqrt(n)", "2"), ("n/(n + 1)", "1"), ("1/(n - 1)", "0"), ("sqrt(2 + 2*sqrt(1/n))", "sqrt(2)")],
)
def test_limits(text, lim):
    assert xr.eq(xr.limit(P(text)), P(lim))


def test_limit_divergence_is_reported():
    with pytest.raises(LimitUndetermined):
        xr.limit(P("n"))


@given(st.integers(1, 500))
def test_at_agrees_with_substitute(k):
    e = P("2 + 2*sqrt(1/n)")
    assert xr.eq(e.at(k), xr.substitute(e, xr.real(k)))


def test_precision_budget_context():
    with xr.precision_budget(64):
        assert xr.compare(xr.sqrt(2), P("1")) is GT
    with pytest.raises(ValueError):
        with xr.precision_budget(0):
            pass
