"""Exact real scalars: expression trees over rationals closed under square root.

Values are immutable trees whose leaves are rationals or the index variable
``n``.  Closed trees (no ``n``) denote a unique real number.  Two
complementary evaluation routes exist:

* a canonical form for the fragment of rational linear combinations of
  square roots of square-free integers, in which zero is decided exactly;
* outward-rounded dyadic interval enclosures, used to separate values that
  differ.

``compare`` combines them and raises :class:`Undecided` rather than guess.
"""

from __future__ import annotations

import contextlib
import contextvars
import enum
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property, lru_cache
from typing import Dict, Optional, Tuple, Union

from .errors import LimitUndetermined, NegativeSqrt, ParseError, Undecided, ZeroDenominator

DEFAULT_PRECISION_BITS = 256

Number = Union[int, Fraction]


class ComparisonOutcome(enum.Enum):
    LT = -1
    EQ = 0
    GT = 1

    def flip(self) -> "ComparisonOutcome":
        return ComparisonOutcome(-self.value)


LT, EQ, GT = ComparisonOutcome.LT, ComparisonOutcome.EQ, ComparisonOutcome.GT


# ---------------------------------------------------------------------------
# Expression nodes
# ---------------------------------------------------------------------------


class ExactReal:
    """Base class of all expression nodes."""

    __slots__ = ()

    # arithmetic sugar; constructors validate closed Div/Sqrt
    def __add__(self, other):
        return Add(self, real(other))

    def __radd__(self, other):
        return Add(real(other), self)

    def __sub__(self, other):
        return Sub(self, real(other))

    def __rsub__(self, other):
        return Sub(real(other), self)

    def __mul__(self, other):
        return Mul(self, real(other))

    def __rmul__(self, other):
        return Mul(real(other), self)

    def __truediv__(self, other):
        return Div(self, real(other))

    def __rtruediv__(self, other):
        return Div(real(other), self)

    def __neg__(self):
        return Neg(self)

    def __float__(self):
        lo, hi = eval_interval(self, 64)
        return float((lo + hi) / 2)

    def __str__(self):
        return _render(self)

    @cached_property
    def is_closed(self) -> bool:
        return all(child.is_closed for child in self.children())

    def children(self) -> tuple:
        return ()

    def at(self, n: int) -> "ExactReal":
        """Substitute the index variable by the integer ``n``."""
        return substitute(self, Rational(Fraction(n)))

    def rebuild(self, *children) -> "ExactReal":
        raise NotImplementedError


@dataclass(frozen=True, eq=True)
class Rational(ExactReal):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))

    @cached_property
    def is_closed(self) -> bool:
        return True

    def __repr__(self):
        return f"Rational({self.value})"


@dataclass(frozen=True, eq=True)
class IndexVar(ExactReal):
    @cached_property
    def is_closed(self) -> bool:
        return False

    def __repr__(self):
        return "IndexVar()"


@dataclass(frozen=True, eq=True)
class _Binary(ExactReal):
    left: ExactReal
    right: ExactReal

    def children(self):
        return (self.left, self.right)

    def rebuild(self, left, right):
        return type(self)(left, right)

    def __repr__(self):
        return f"{type(self).__name__}({self.left!r}, {self.right!r})"


class Add(_Binary):
    pass


class Sub(_Binary):
    pass


class Mul(_Binary):
    pass


@dataclass(frozen=True, eq=True, repr=False)
class Div(_Binary):
    def __post_init__(self):
        if self.right.is_closed and is_zero(self.right):
            raise ZeroDenominator(f"denominator {self.right} is zero")


@dataclass(frozen=True, eq=True)
class _Unary(ExactReal):
    arg: ExactReal

    def children(self):
        return (self.arg,)

    def rebuild(self, arg):
        return type(self)(arg)

    def __repr__(self):
        return f"{type(self).__name__}({self.arg!r})"


class Neg(_Unary):
    pass


@dataclass(frozen=True, eq=True, repr=False)
class Sqrt(_Unary):
    def __post_init__(self):
        if self.arg.is_closed and sign(self.arg) is LT:
            raise NegativeSqrt(f"sqrt argument {self.arg} is negative")


N = IndexVar()
ZERO = Rational(Fraction(0))
ONE = Rational(Fraction(1))


def real(x) -> ExactReal:
    """Coerce ints, Fractions and expression strings to :class:`ExactReal`."""
    if isinstance(x, ExactReal):
        return x
    if isinstance(x, bool):
        raise TypeError("bool is not a real")
    if isinstance(x, (int, Fraction)):
        return Rational(Fraction(x))
    if isinstance(x, str):
        return parse_real(x)
    raise TypeError(f"cannot convert {type(x).__name__} to ExactReal")


def sqrt(x) -> ExactReal:
    return Sqrt(real(x))


def substitute(expr: ExactReal, value: ExactReal) -> ExactReal:
    """Replace every occurrence of the index variable by ``value``."""
    if isinstance(expr, IndexVar):
        return value
    if isinstance(expr, Rational):
        return expr
    return expr.rebuild(*(substitute(c, value) for c in expr.children()))


# ---------------------------------------------------------------------------
# Parsing and rendering
# ---------------------------------------------------------------------------


def _tokenize(text: str):
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
        elif ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            tokens.append(("num", text[i:j], i, j))
            i = j
        elif text.startswith("sqrt", i):
            tokens.append(("sqrt", "sqrt", i, i + 4))
            i += 4
        elif ch == "n":
            tokens.append(("n", "n", i, i + 1))
            i += 1
        elif ch in "+-*/()":
            tokens.append((ch, ch, i, i + 1))
            i += 1
        else:
            raise ParseError(f"unexpected character {ch!r}", i)
    tokens.append(("end", "", len(text), len(text)))
    return tokens


class _Parser:
    def __init__(self, text):
        self.text = text
        self.tokens = _tokenize(text)
        self.pos = 0

    def peek(self, offset=0):
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def take(self, kind=None):
        tok = self.peek()
        if kind is not None and tok[0] != kind:
            expected = "end of input" if kind == "end" else repr(kind)
            raise ParseError(f"expected {expected}, found {tok[1] or 'end of input'!r}", tok[2])
        self.pos += 1
        return tok

    def parse(self):
        expr = self.expr()
        self.take("end")
        return expr

    def expr(self):
        node = self.term()
        while self.peek()[0] in "+-":
            op = self.take()[0]
            rhs = self.term()
            node = Add(node, rhs) if op == "+" else Sub(node, rhs)
        return node

    def term(self):
        node = self.unary()
        while self.peek()[0] in ("*", "/"):
            op = self.take()[0]
            rhs = self.unary()
            node = Mul(node, rhs) if op == "*" else Div(node, rhs)
        return node

    def unary(self):
        tok = self.peek()
        if tok[0] == "-":
            nxt = self.peek(1)
            if nxt[0] == "num" and nxt[2] == tok[3]:
                self.take()
                return Rational(-self.rational_literal())
            self.take()
            return Neg(self.unary())
        return self.primary()

    def rational_literal(self) -> Fraction:
        num = self.take("num")
        slash, den = self.peek(), self.peek(1)
        # p/q with no whitespace is one literal; "p / q" is a division node
        if slash[0] == "/" and slash[2] == num[3] and den[0] == "num" and den[2] == slash[3]:
            self.pos += 2
            if int(den[1]) == 0:
                raise ZeroDenominator(f"zero denominator in literal at position {num[2]}")
            return Fraction(int(num[1]), int(den[1]))
        return Fraction(int(num[1]))

    def primary(self):
        tok = self.peek()
        kind = tok[0]
        if kind == "num":
            return Rational(self.rational_literal())
        if kind == "n":
            self.take()
            return N
        if kind == "sqrt":
            self.take()
            self.take("(")
            inner = self.expr()
            self.take(")")
            return Sqrt(inner)
        if kind == "(":
            self.take()
            inner = self.expr()
            self.take(")")
            return inner
        raise ParseError(f"unexpected {tok[1] or 'end of input'!r}", tok[2])


def parse_real(text: str) -> ExactReal:
    """Parse the scalar expression grammar.

    >>> parse_real("1 - 1/n")
    Sub(Rational(1), Div(Rational(1), IndexVar()))
    """
    return _Parser(text).parse()


_PREC = {Add: 1, Sub: 1, Mul: 2, Div: 2}
_SYM = {Add: "+", Sub: "-", Mul: "*", Div: "/"}


def _render(e: ExactReal) -> str:
    if isinstance(e, Rational):
        v = e.value
        return str(v.numerator) if v.denominator == 1 else f"{v.numerator}/{v.denominator}"
    if isinstance(e, IndexVar):
        return "n"
    if isinstance(e, Sqrt):
        return f"sqrt({_render(e.arg)})"
    if isinstance(e, Neg):
        inner = e.arg
        if isinstance(inner, (IndexVar, Sqrt, Neg)):
            return "-" + _render(inner)
        return f"-({_render(inner)})"
    prec = _PREC[type(e)]
    left, right = _render(e.left), _render(e.right)
    if _needs_parens(e.left, prec, right_side=False):
        left = f"({left})"
    if _needs_parens(e.right, prec, right_side=True):
        right = f"({right})"
    return f"{left} {_SYM[type(e)]} {right}"


def _needs_parens(child: ExactReal, prec: int, right_side: bool) -> bool:
    if isinstance(child, Rational):
        # negative literals in operand position are bracketed for readability;
        # a rational p/q is a single token so needs no brackets otherwise
        return right_side and child.value < 0
    child_prec = _PREC.get(type(child))
    if child_prec is None:
        return False
    return child_prec < prec or (right_side and child_prec == prec)


# ---------------------------------------------------------------------------
# Square-free surd canonical form
# ---------------------------------------------------------------------------

_SMALL_PRIME_LIMIT = 1 << 16


@lru_cache(maxsize=None)
def _small_primes():
    sieve = bytearray([1]) * _SMALL_PRIME_LIMIT
    sieve[0:2] = b"\x00\x00"
    for p in range(2, int(_SMALL_PRIME_LIMIT ** 0.5) + 1):
        if sieve[p]:
            sieve[p * p :: p] = bytearray(len(sieve[p * p :: p]))
    return tuple(i for i, flag in enumerate(sieve) if flag)


def _is_probable_prime(m: int) -> bool:
    if m < 2:
        return False
    for p in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        if m % p == 0:
            return m == p
    d, s = m - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    # deterministic for m < 3.3e24
    for a in (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37):
        x = pow(a, d, m)
        if x in (1, m - 1):
            continue
        for _ in range(s - 1):
            x = x * x % m
            if x == m - 1:
                break
        else:
            return False
    return True


@lru_cache(maxsize=4096)
def squarefree_split(m: int) -> Optional[Tuple[int, int]]:
    """Return ``(s, d)`` with ``m = s**2 * d`` and ``d`` square-free, or None.

    None means the residual cofactor could not be certified square-free.
    """
    if m < 0:
        raise ValueError("negative")
    if m == 0:
        return (0, 1)
    s, d = 1, 1
    rest = m
    for p in _small_primes():
        if p * p > rest:
            break
        if rest % p:
            continue
        e = 0
        while rest % p == 0:
            rest //= p
            e += 1
        s *= p ** (e // 2)
        if e % 2:
            d *= p
    if rest == 1:
        return (s, d)
    if rest < _SMALL_PRIME_LIMIT ** 2 or _is_probable_prime(rest):
        return (s, d * rest)
    r = math.isqrt(rest)
    if r * r == rest and _is_probable_prime(r):
        return (s * r, d)
    return None


# a surd sum is a sorted tuple of (square-free d, nonzero coefficient);
# d = 1 carries the rational part
Surd = Tuple[Tuple[int, Fraction], ...]


def _surd(terms: Dict[int, Fraction]) -> Surd:
    return tuple(sorted((d, c) for d, c in terms.items() if c != 0))


def _surd_add(a: Surd, b: Surd, sgn: int = 1) -> Surd:
    out = dict(a)
    for d, c in b:
        out[d] = out.get(d, Fraction(0)) + sgn * c
    return _surd(out)


def _surd_mul(a: Surd, b: Surd) -> Surd:
    out: Dict[int, Fraction] = {}
    for d1, c1 in a:
        for d2, c2 in b:
            g = math.gcd(d1, d2)
            d = (d1 // g) * (d2 // g)
            out[d] = out.get(d, Fraction(0)) + c1 * c2 * g
    return _surd(out)


def _prime_factors(d: int):
    split = squarefree_split(d)
    assert split is not None and split[0] == 1
    out = []
    rest = d
    for p in _small_primes():
        if p * p > rest:
            break
        if rest % p == 0:
            out.append(p)
            rest //= p
    if rest > 1:
        out.append(rest)
    return out


def _surd_inv(a: Surd) -> Optional[Surd]:
    if not a:
        return None
    num: Surd = ((1, Fraction(1)),)
    den = a
    for _ in range(64):
        irrational = [d for d, _ in den if d != 1]
        if not irrational:
            (d, c), = den
            return _surd_mul(num, ((1, 1 / c),))
        p = _prime_factors(irrational[0])[0]
        conj = tuple((d, -c if d % p == 0 else c) for d, c in den)
        num = _surd_mul(num, conj)
        den = _surd_mul(den, conj)
        if not den:
            return None
    return None


def _surd_sqrt(a: Surd) -> Optional[Surd]:
    if not a:
        return ()
    if len(a) != 1 or a[0][0] != 1:
        return None
    q = a[0][1]
    if q < 0:
        return None
    split = squarefree_split(q.numerator * q.denominator)
    if split is None:
        return None
    s, d = split
    return ((d, Fraction(s, q.denominator)),)


def _surd_sign(a: Surd) -> Optional[ComparisonOutcome]:
    if not a:
        return EQ
    if len(a) == 1:
        return GT if a[0][1] > 0 else LT
    if len(a) == 2 and a[0][0] == 1:
        (_, p), (d, q) = a
        if (p > 0) == (q > 0):
            return GT if p > 0 else LT
        # sign of p + q*sqrt(d) with opposite signs
        lhs, rhs = p * p, q * q * d
        if lhs == rhs:
            return EQ
        dominant = p if lhs > rhs else q
        return GT if dominant > 0 else LT
    return None


@lru_cache(maxsize=65536)
def surd_form(e: ExactReal) -> Optional[Surd]:
    """Canonical surd sum of a closed expression, or None if outside the fragment."""
    if isinstance(e, Rational):
        return _surd({1: e.value})
    if isinstance(e, IndexVar):
        return None
    if isinstance(e, Neg):
        a = surd_form(e.arg)
        return None if a is None else tuple((d, -c) for d, c in a)
    if isinstance(e, Sqrt):
        a = surd_form(e.arg)
        return None if a is None else _surd_sqrt(a)
    a, b = surd_form(e.left), surd_form(e.right)
    if a is None or b is None:
        return None
    if isinstance(e, Add):
        return _surd_add(a, b)
    if isinstance(e, Sub):
        return _surd_add(a, b, -1)
    if isinstance(e, Mul):
        return _surd_mul(a, b)
    inv = _surd_inv(b)
    return None if inv is None else _surd_mul(a, inv)


def surd_to_expr(s: Surd) -> ExactReal:
    if not s:
        return ZERO
    out = None
    for d, c in s:
        if d == 1:
            term, coeff = None, c
        else:
            term, coeff = Sqrt(Rational(d)), c
        if term is None:
            piece = Rational(abs(coeff))
        elif abs(coeff) == 1:
            piece = term
        elif abs(coeff).denominator != 1 and abs(coeff).numerator == 1:
            piece = Div(term, Rational(abs(coeff).denominator))
        else:
            piece = Mul(Rational(abs(coeff)), term)
        if out is None:
            out = piece if coeff > 0 else (Rational(coeff) if term is None else Neg(piece))
        else:
            out = Add(out, piece) if coeff > 0 else Sub(out, piece)
    return out


# ---------------------------------------------------------------------------
# Interval enclosures
# ---------------------------------------------------------------------------

# fixed schedule so that enclosures nest as requested precision grows
_WORKING_LEVELS = tuple(64 * 2 ** k for k in range(12))


class _NeedsPrecision(Exception):
    pass


def _floor_to(x: Fraction, w: int) -> Fraction:
    return Fraction(math.floor(x * (1 << w)), 1 << w)


def _ceil_to(x: Fraction, w: int) -> Fraction:
    return Fraction(math.ceil(x * (1 << w)), 1 << w)


def _round_out(lo: Fraction, hi: Fraction, w: int):
    if lo == hi:
        return lo, hi
    return _floor_to(lo, w), _ceil_to(hi, w)


def _sqrt_floor(x: Fraction, w: int) -> Fraction:
    y = x * (1 << (2 * w))
    return Fraction(math.isqrt(math.floor(y)), 1 << w)


def _sqrt_ceil(x: Fraction, w: int) -> Fraction:
    y = math.ceil(x * (1 << (2 * w)))
    if y <= 0:
        return Fraction(0)
    return Fraction(math.isqrt(y - 1) + 1, 1 << w)


@lru_cache(maxsize=65536)
def _enclose(e: ExactReal, w: int) -> Tuple[Fraction, Fraction]:
    if isinstance(e, Rational):
        return e.value, e.value
    if isinstance(e, IndexVar):
        raise ValueError("cannot evaluate an open expression")
    if isinstance(e, Neg):
        lo, hi = _enclose(e.arg, w)
        return -hi, -lo
    if isinstance(e, Sqrt):
        lo, hi = _enclose(e.arg, w)
        lo = max(lo, Fraction(0))
        hi = max(hi, Fraction(0))
        if lo == hi:
            s = _surd_sqrt(((1, lo),)) if lo else ()
            if s is not None and all(d == 1 for d, _ in s):
                v = s[0][1] if s else Fraction(0)
                return v, v
        return _sqrt_floor(lo, w), _sqrt_ceil(hi, w)
    alo, ahi = _enclose(e.left, w)
    blo, bhi = _enclose(e.right, w)
    if isinstance(e, Add):
        return _round_out(alo + blo, ahi + bhi, w)
    if isinstance(e, Sub):
        return _round_out(alo - bhi, ahi - blo, w)
    if isinstance(e, Mul):
        prods = (alo * blo, alo * bhi, ahi * blo, ahi * bhi)
        return _round_out(min(prods), max(prods), w)
    if blo <= 0 <= bhi:
        raise _NeedsPrecision
    quots = (alo / blo, alo / bhi, ahi / blo, ahi / bhi)
    return _round_out(min(quots), max(quots), w)


def eval_interval(a: ExactReal, precision: int = 64) -> Tuple[Fraction, Fraction]:
    """Rational enclosure ``[lo, hi]`` of a closed expression, width < 2**-precision.

    Enclosures are nested: a larger ``precision`` never returns an interval
    that leaves the one returned for a smaller precision.
    """
    if not a.is_closed:
        raise ValueError(f"eval_interval needs a closed expression, got {a}")
    target = Fraction(1, 1 << precision)
    for w in _WORKING_LEVELS:
        if w < precision // 2:
            continue
        try:
            lo, hi = _enclose(a, w)
        except _NeedsPrecision:
            continue
        if hi - lo < target:
            return lo, hi
    raise Undecided(f"could not enclose {a} to {precision} bits")


def approx(a: ExactReal) -> float:
    return float(a)


# ---------------------------------------------------------------------------
# Comparison
# ---------------------------------------------------------------------------


_budget = contextvars.ContextVar("precision_budget", default=DEFAULT_PRECISION_BITS)


@contextlib.contextmanager
def precision_budget(bits: int):
    """Set the default comparison budget (in bits) within a block."""
    if bits < 1:
        raise ValueError("precision budget must be positive")
    token = _budget.set(bits)
    try:
        yield
    finally:
        _budget.reset(token)


def compare(a, b, precision_budget: Optional[int] = None) -> ComparisonOutcome:
    """Trichotomous comparison of two closed expressions.

    EQ is only returned when ``a - b`` canonicalizes to zero; LT/GT come
    either from the canonical form or from separated interval enclosures.
    """
    if precision_budget is None:
        precision_budget = _budget.get()
    a, b = real(a), real(b)
    if not (a.is_closed and b.is_closed):
        raise ValueError("compare needs closed expressions")
    if a == b:
        return EQ
    sa, sb = surd_form(a), surd_form(b)
    if sa is not None and sb is not None:
        diff = _surd_add(sa, sb, -1)
        exact = _surd_sign(diff)
        if exact is not None:
            return exact
    canonical_nonzero = sa is not None and sb is not None
    for w in _WORKING_LEVELS:
        if w > max(precision_budget, _WORKING_LEVELS[0]):
            break
        try:
            alo, ahi = _enclose(a, w)
            blo, bhi = _enclose(b, w)
        except _NeedsPrecision:
            continue
        if ahi < blo:
            return LT
        if alo > bhi:
            return GT
    # one retry: the polynomial normal form collapses sqrt(x)*sqrt(x) and
    # often brings nested radicals back into the surd fragment
    if not canonical_nonzero:
        diff = surd_form(simplify(Sub(a, b)))
        if diff is not None:
            exact = _surd_sign(diff)
            if exact is not None:
                return exact
    detail = "canonical forms differ" if canonical_nonzero else "outside the surd fragment"
    raise Undecided(f"cannot order {a} and {b} within {precision_budget} bits ({detail})")


def sign(a: ExactReal, precision_budget: Optional[int] = None) -> ComparisonOutcome:
    return compare(a, ZERO, precision_budget)


def is_zero(a: ExactReal) -> bool:
    s = surd_form(a)
    if s is not None:
        return not s
    return sign(a) is EQ


def lt(a, b) -> bool:
    return compare(a, b) is LT


def le(a, b) -> bool:
    return compare(a, b) is not GT


def eq(a, b) -> bool:
    return compare(a, b) is EQ


def minimum(values):
    best = None
    for v in values:
        if best is None or compare(v, best) is LT:
            best = v
    return best


# ---------------------------------------------------------------------------
# Polynomial normal form over atoms (used for open expressions)
# ---------------------------------------------------------------------------

# a monomial is a sorted tuple of atoms; a polynomial maps monomials to
# rational coefficients.  Atoms are n, 1/(expr), sqrt(expr) and sqrt(d) for
# square-free integers d.

Poly = Dict[tuple, Fraction]


def _atom_key(atom: ExactReal):
    return (_render(atom), repr(atom))


def _poly_add(a: Poly, b: Poly, sgn: int = 1) -> Poly:
    out = dict(a)
    for m, c in b.items():
        out[m] = out.get(m, Fraction(0)) + sgn * c
    return {m: c for m, c in out.items() if c != 0}


def _mono_mul(m1: tuple, m2: tuple) -> Poly:
    atoms = list(m1) + list(m2)
    coeff = Fraction(1)
    # combine closed surds sqrt(d1)*sqrt(d2)
    surds = [a for a in atoms if isinstance(a, Sqrt) and isinstance(a.arg, Rational)]
    others = [a for a in atoms if not (isinstance(a, Sqrt) and isinstance(a.arg, Rational))]
    if surds:
        prod = ((1, Fraction(1)),)
        for s in surds:
            prod = _surd_mul(prod, ((int(s.arg.value), Fraction(1)),))
        (d, c), = prod
        coeff *= c
        if d != 1:
            others.append(Sqrt(Rational(d)))
    # sqrt(x)*sqrt(x) -> x
    result: Poly = {(): coeff}
    remaining = []
    pending = sorted(others, key=_atom_key)
    i = 0
    while i < len(pending):
        a = pending[i]
        if (
            isinstance(a, Sqrt)
            and not isinstance(a.arg, Rational)
            and i + 1 < len(pending)
            and pending[i + 1] == a
        ):
            result = _poly_mul(result, _poly(a.arg))
            i += 2
            continue
        remaining.append(a)
        i += 1
    mono = tuple(sorted(remaining, key=_atom_key))
    return {tuple(sorted(m + mono, key=_atom_key)): c for m, c in result.items()}


def _poly_mul(a: Poly, b: Poly) -> Poly:
    out: Poly = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            for m, c in _mono_mul(m1, m2).items():
                out[m] = out.get(m, Fraction(0)) + c1 * c2 * c
    return {m: c for m, c in out.items() if c != 0}


def _poly_const(p: Poly) -> Optional[Fraction]:
    if not p:
        return Fraction(0)
    if len(p) == 1 and () in p:
        return p[()]
    return None


def _poly_from_surd(s: Surd) -> Poly:
    out: Poly = {}
    for d, c in s:
        out[() if d == 1 else (Sqrt(Rational(d)),)] = c
    return out


def _poly(e: ExactReal) -> Poly:
    if e.is_closed:
        s = surd_form(e)
        if s is not None:
            return _poly_from_surd(s)
    if isinstance(e, Rational):
        return {(): e.value} if e.value else {}
    if isinstance(e, IndexVar):
        return {(N,): Fraction(1)}
    if isinstance(e, Neg):
        return {m: -c for m, c in _poly(e.arg).items()}
    if isinstance(e, Add):
        return _poly_add(_poly(e.left), _poly(e.right))
    if isinstance(e, Sub):
        return _poly_add(_poly(e.left), _poly(e.right), -1)
    if isinstance(e, Mul):
        return _poly_mul(_poly(e.left), _poly(e.right))
    if isinstance(e, Div):
        num, den = _poly(e.left), _poly(e.right)
        c = _poly_const(den)
        if c is not None:
            return {m: v / c for m, v in num.items()}
        # normalise 1/(c*p) to (1/c) * 1/p with p's leading coefficient 1
        lead_mono = min(den, key=_mono_key)
        lead = den[lead_mono]
        recip = Div(ONE, _rebuild({m: v / lead for m, v in den.items()}))
        return {m: v / lead for m, v in _poly_mul(num, {(recip,): Fraction(1)}).items()}
    if isinstance(e, Sqrt):
        inner = _poly(e.arg)
        c = _poly_const(inner)
        if c is not None and c >= 0:
            s = _surd_sqrt(((1, c),)) if c else ()
            if s is not None:
                return _poly_from_surd(s)
        return {(Sqrt(_rebuild(inner)),): Fraction(1)}
    raise TypeError(type(e))


def _mono_key(mono):
    # powers of n first (descending), then the constant, then the rest
    return (-sum(1 for a in mono if isinstance(a, IndexVar)), len(mono), [_atom_key(a) for a in mono])


def _mono_order(item):
    return _mono_key(item[0])


def _rebuild(p: Poly) -> ExactReal:
    if not p:
        return ZERO
    out = None
    for mono, coeff in sorted(p.items(), key=_mono_order):
        numer = [a for a in mono if not (isinstance(a, Div) and a.left == ONE)]
        denom = [a.right for a in mono if isinstance(a, Div) and a.left == ONE]
        mag = abs(coeff)
        num_expr = None
        if mag.numerator != 1 or not numer:
            num_expr = Rational(Fraction(mag.numerator))
        for a in numer:
            num_expr = a if num_expr is None else Mul(num_expr, a)
        den_factor = [Rational(Fraction(mag.denominator))] if mag.denominator != 1 else []
        den_expr = None
        for a in den_factor + denom:
            den_expr = a if den_expr is None else Mul(den_expr, a)
        term = num_expr if den_expr is None else Div(num_expr, den_expr)
        if out is None:
            out = term if coeff > 0 else _negate(term)
        else:
            out = Add(out, term) if coeff > 0 else Sub(out, term)
    return out


def _negate(term: ExactReal) -> ExactReal:
    if isinstance(term, Rational):
        return Rational(-term.value)
    if isinstance(term, Div) and isinstance(term.left, Rational):
        return Div(Rational(-term.left.value), term.right)
    if isinstance(term, Mul) and isinstance(term.left, Rational):
        return Mul(Rational(-term.left.value), term.right)
    return Neg(term)


def simplify(e: ExactReal) -> ExactReal:
    """Normal form: closed surds canonicalized, open parts collected.

    The result denotes the same function of ``n`` as ``e``.
    """
    if e.is_closed:
        s = surd_form(e)
        if s is not None:
            return surd_to_expr(s)
    return _rebuild(_poly(e))


def symbolically_equal(a: ExactReal, b: ExactReal) -> bool:
    """True when ``a - b`` normalizes to zero (sound, not complete)."""
    return not _poly_add(_poly(a), _poly(b), -1)


# ---------------------------------------------------------------------------
# Limits as n -> infinity via leading-term asymptotics
# ---------------------------------------------------------------------------


def _leading(e: ExactReal):
    """Return None for identically zero, else (coefficient, exponent)."""
    if e.is_closed:
        return None if is_zero(e) else (e, Fraction(0))
    if isinstance(e, IndexVar):
        return (ONE, Fraction(1))
    if isinstance(e, Neg):
        lead = _leading(e.arg)
        return None if lead is None else (Neg(lead[0]), lead[1])
    if isinstance(e, Sqrt):
        lead = _leading(e.arg)
        if lead is None:
            return None
        if sign(lead[0]) is not GT:
            raise LimitUndetermined(f"sqrt of eventually negative {e.arg}")
        return (Sqrt(lead[0]), lead[1] / 2)
    a, b = _leading(e.left), _leading(e.right)
    if isinstance(e, (Add, Sub)):
        if isinstance(e, Sub) and b is not None:
            b = (Neg(b[0]), b[1])
        if a is None:
            return b
        if b is None:
            return a
        if a[1] != b[1]:
            return a if a[1] > b[1] else b
        total = Add(a[0], b[0])
        if is_zero(total):
            raise LimitUndetermined(f"leading terms cancel in {e}")
        return (total, a[1])
    if isinstance(e, Mul):
        if a is None or b is None:
            return None
        return (Mul(a[0], b[0]), a[1] + b[1])
    if b is None:
        raise ZeroDenominator(f"denominator of {e} is identically zero")
    if a is None:
        return None
    return (Div(a[0], b[0]), a[1] - b[1])


def limit(e: ExactReal) -> ExactReal:
    """Limit of an open expression as ``n -> infinity`` (closed result)."""
    lead = _leading(e)
    if lead is None:
        return ZERO
    coeff, exponent = lead
    if exponent < 0:
        return ZERO
    if exponent > 0:
        raise LimitUndetermined(f"{e} diverges")
    return simplify(coeff)
