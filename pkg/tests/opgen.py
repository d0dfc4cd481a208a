"""Random operators for property and acceptance tests.

Every generator takes a ``random.Random`` so runs are reproducible.
"""

import random
from fractions import Fraction

from amattain import exactreal as xr
from amattain.amclass import AMDecomposition, AMType
from amattain.operators import BasisMapOperator, DiagonalOperator, Piece, Singleton, Weight
from amattain.spectra import INFINITE, Monotonicity, SpectralPoint, SpectrumDescription, TailSequence

ZERO = xr.ZERO


def rand_rational(rng: random.Random, lo: Fraction, hi: Fraction, den: int = 8) -> Fraction:
    q = rng.randint(1, den)
    a, b = int(lo * q) + 1, int(hi * q)
    if b < a:
        return hi
    return Fraction(rng.randint(a, b), q)


def rand_alpha(rng: random.Random) -> xr.ExactReal:
    if rng.random() < 0.25:
        return xr.sqrt(rng.choice([2, 3, 5]))
    return xr.real(rand_rational(rng, Fraction(1, 4), Fraction(3)))


def _compact_tail(rng: random.Random, alpha: xr.ExactReal, start: int) -> TailSequence:
    """A tail decreasing to 0 whose first term is at most alpha."""
    d = rng.randint(0, 3)
    top = xr.approx(alpha) * (start + d)
    c = rand_rational(rng, Fraction(0), Fraction(top).limit_denominator(64) * Fraction(99, 100))
    c = max(c, Fraction(1, 64))
    kind = rng.choice(["recip", "recip", "sqrt"])
    if kind == "recip":
        expr = xr.parse_real(f"{c} / (n + {d})") if d else xr.parse_real(f"{c} / n")
    else:
        # c/sqrt(n + d) <= c/(n + d) * (n + d)^(1/2); bound the first term directly
        c = min(c, Fraction(int(xr.approx(alpha) * 64), 64) or Fraction(1, 64))
        expr = xr.parse_real(f"{c} / sqrt(n + {d})")
        if xr.compare(expr.at(start), alpha) is xr.GT:
            expr = xr.parse_real(f"{c} / (n + {d}) / {start + d + 1}")
    return TailSequence(xr.simplify(expr), start, Monotonicity.DECREASING, ZERO)


def canonical_triple(rng: random.Random, layout=None):
    """Random (alpha, K, F, expected type) with disjoint supports and ||K|| <= alpha.

    ``layout`` = (finite multiplicities, tail starts, infinite block count)
    fixes the index model so that several triples can be aligned.
    """
    if layout is None:
        layout = random_layout(rng)
    mults, starts, n_inf = layout
    alpha = rand_alpha(rng)
    k_fin, f_fin = [], []
    for m in mults:
        r = rng.random()
        if r < 0.4:
            k = xr.simplify(xr.Mul(alpha, xr.real(rand_rational(rng, Fraction(0), Fraction(1)))))
            k_fin.append(SpectralPoint(k, m))
            f_fin.append(SpectralPoint(ZERO, m))
        elif r < 0.8:
            k_fin.append(SpectralPoint(ZERO, m))
            f_fin.append(SpectralPoint(xr.real(rand_rational(rng, Fraction(0), Fraction(4))), m))
        else:
            k_fin.append(SpectralPoint(ZERO, m))
            f_fin.append(SpectralPoint(ZERO, m))
    k_tails, f_tails = [], []
    second = n_inf > 0
    for start in starts:
        zero = TailSequence(ZERO, start, Monotonicity.CONSTANT, ZERO)
        f_tails.append(zero)
        if rng.random() < 0.2:
            k_tails.append(zero)
            second = True
        else:
            k_tails.append(_compact_tail(rng, alpha, start))
    inf = tuple(SpectralPoint(ZERO, INFINITE) for _ in range(n_inf))
    K = DiagonalOperator(SpectrumDescription(tuple(k_fin), inf, tuple(k_tails), True), "K")
    F = DiagonalOperator(SpectrumDescription(tuple(f_fin), inf, tuple(f_tails), True), "F")
    return AMDecomposition(alpha, K, F, AMType.SECOND if second else AMType.FIRST)


def random_layout(rng: random.Random):
    mults = [rng.randint(1, 3) for _ in range(rng.randint(0, 4))]
    starts = [rng.randint(1, 4) for _ in range(rng.randint(0, 2))]
    n_inf = rng.randint(0, 1)
    if not starts and not n_inf:
        starts = [rng.randint(1, 4)]
    return mults, starts, n_inf


_INC = ["1 - 1/n", "2 - 1/(n + 1)", "3 - 2/n", "1 - 1/sqrt(n)", "n/(n + 1)", "5/2 - 1/(2*n)"]
_DEC = ["1 + 1/n", "2 + 2*sqrt(1/n)", "1/n", "3/2 + 1/(n + 1)", "1/sqrt(n)"]
_INC_LIMITS = ["1", "2", "3", "1", "1", "5/2"]
_DEC_LIMITS = ["1", "2", "0", "3/2", "0"]


def random_positive_diagonal(rng: random.Random) -> DiagonalOperator:
    """Positive diagonal that may or may not be AM+."""
    fin = [SpectralPoint(xr.real(rand_rational(rng, Fraction(0), Fraction(4))), rng.randint(1, 2)) for _ in range(rng.randint(0, 3))]
    tails = []
    for _ in range(rng.randint(0, 2)):
        if rng.random() < 0.6:
            i = rng.randrange(len(_INC))
            tails.append(TailSequence(xr.parse_real(_INC[i]), rng.randint(1, 3), Monotonicity.INCREASING, xr.parse_real(_INC_LIMITS[i])))
        else:
            i = rng.randrange(len(_DEC))
            tails.append(TailSequence(xr.parse_real(_DEC[i]), rng.randint(1, 3), Monotonicity.DECREASING, xr.parse_real(_DEC_LIMITS[i])))
    inf = [SpectralPoint(xr.real(rng.choice([0, 1, 2, Fraction(1, 2)])), INFINITE) for _ in range(rng.randint(0, 2))]
    if not tails and not inf:
        inf = [SpectralPoint(xr.ONE, INFINITE)]
    return DiagonalOperator(SpectrumDescription(tuple(fin), tuple(inf), tuple(tails), True))


_WEIGHTS = [
    ("1", "0"),
    ("1/n", "0"),
    ("1 - 1/(n + 1)", "0"),
    ("2 + 1/n", "0"),
    ("sqrt(1 + 1/n)", "0"),
    ("-1/n", "0"),
    ("3/2", "0"),
    ("-2", "0"),
    ("sqrt(1/n)", "sqrt(1 - 1/n)"),
    ("1/n", "1/n"),
]
_CLOSED = ["0", "1", "1/2", "-3", "sqrt(2)", "2/3"]


def _w(pair) -> Weight:
    return Weight(xr.parse_real(pair[0]), xr.parse_real(pair[1]))


def random_basis_map(rng: random.Random) -> BasisMapOperator:
    """Injective weighted basis map from a few geometric families."""
    s = rng.randint(0, 3)
    singles = []
    targets = list(range(1, s + 1))
    rng.shuffle(targets)
    for i in range(1, s + 1):
        w = Weight(xr.parse_real(rng.choice(_CLOSED)))
        singles.append(Singleton(i, w, None if w.is_zero else targets[i - 1]))
    family = rng.choice(["shift", "split", "dilate", "kernel"])
    w1, w2 = _w(rng.choice(_WEIGHTS)), _w(rng.choice(_WEIGHTS))
    if family == "shift":
        k = rng.randint(0, 2)
        pieces = [Piece(s + 1, 1, w1, s + 1 + k, 1)]
    elif family == "split":
        pieces = [Piece(s + 1, 2, w1, s + 1, 4), Piece(s + 2, 2, w2, s + 3, 4)]
    elif family == "dilate":
        pieces = [Piece(s + 1, 1, w1, s + 1, 2)]
    else:
        pieces = [Piece(s + 1, 2, Weight(ZERO)), Piece(s + 2, 2, w2, s + 1, 1)]
    return BasisMapOperator(tuple(singles), tuple(pieces))
