"""Absolutely minimum attaining operators.

A positive diagonal operator D is absolutely minimum attaining (every
compression to a closed subspace attains its minimum modulus) exactly when

    D = alpha*I - K + F

with K positive compact, ||K|| <= alpha, F positive finite rank and
KF = FK = 0; that triple is unique.  On the spectral side this means: at most
one accumulation value, approached only from below, and only finitely many
eigenvalues above it.

``classify_AM_positive`` returns either the decomposition or a certificate
that refutes membership constructively:

* ``NotPositiveCertificate`` names a negative eigenvalue;
* ``DecreasingAccumulation`` names a tail decreasing to its limit; on the
  span of that tail the infimum is the limit and is never attained;
* ``MixingPair`` carries two non-decreasing eigenvalue streams with limits
  a < b and the unit vectors t_n f_n + sqrt(1 - t_n^2) g_n whose images have
  norms c_n = a + (b - a)/(2n) > a, so the compression to their span has
  minimum modulus a, unattained.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

from . import exactreal as xr
from . import spectra as sp
from .errors import (
    CertificateMismatch,
    EquivalenceViolation,
    InvalidOperator,
    LimitsEqual,
    MisalignedIndexModels,
    NormBoundViolated,
    NotAMember,
    NotAPartialIsometry,
    NotPositive,
    OverlappingSupports,
)
from .exactreal import EQ, GT, LT, ZERO, ExactReal
from .operators import (
    BasisMapOperator,
    DiagonalOperator,
    Operator,
    PolarForm,
    as_basis_map,
    modulus,
    polar,
)
from .spectra import (
    DEFAULT_NCHECK,
    Index,
    Monotonicity,
    SpectralPoint,
    SpectrumDescription,
    TailSequence,
)


class AMType(enum.Enum):
    FIRST = "FirstType"
    SECOND = "SecondType"


class NonCanonicalWarning(UserWarning):
    """alpha lies in [||K||/2, ||K||): the result is AM but the triple is not canonical."""


@dataclass(frozen=True)
class AMDecomposition:
    alpha: ExactReal
    K: DiagonalOperator
    F: DiagonalOperator
    type_flag: AMType

    def same_as(self, other: "AMDecomposition") -> bool:
        """Exact equality of the triples (and type)."""
        return (
            self.type_flag is other.type_flag
            and xr.eq(self.alpha, other.alpha)
            and sp.spectra_equal(self.K.spectrum, other.K.spectrum)
            and sp.spectra_equal(self.F.spectrum, other.F.spectrum)
        )


# ---------------------------------------------------------------------------
# Certificates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Stream:
    """A non-decreasing run of eigenvalues: a tail or an infinite block.

    ``offset`` drops that many leading terms.
    """

    kind: str
    block_id: int
    offset: int = 0

    def index(self, s: SpectrumDescription, n: int) -> Index:
        if n < 1:
            raise IndexError(n)
        if self.kind == "tail":
            return Index("tail", self.block_id, s.tails[self.block_id].start + self.offset + n - 1)
        return Index("infinite", self.block_id, self.offset + n - 1)

    def value(self, s: SpectrumDescription, n: int) -> ExactReal:
        return s.value_at(self.index(s, n))

    def limit(self, s: SpectrumDescription) -> ExactReal:
        if self.kind == "tail":
            return s.tails[self.block_id].limit
        return s.infinite_points[self.block_id].value

    def shifted(self, k: int) -> "Stream":
        return Stream(self.kind, self.block_id, self.offset + k)


@dataclass(frozen=True)
class NotPositiveCertificate:
    witness: Index
    value: ExactReal


@dataclass(frozen=True)
class DecreasingAccumulation:
    tail_id: int
    limit: ExactReal


@dataclass(frozen=True)
class MixingPair:
    spectrum: SpectrumDescription = field(repr=False)
    seq_a: Stream
    seq_b: Stream
    a: ExactReal
    b: ExactReal

    def a_n(self, n: int) -> ExactReal:
        return self.seq_a.value(self.spectrum, n)

    def b_n(self, n: int) -> ExactReal:
        return self.seq_b.value(self.spectrum, n)

    def c(self, n: int) -> ExactReal:
        return xr.simplify(xr.Add(self.a, xr.Div(xr.Sub(self.b, self.a), xr.real(2 * n))))

    def _squares(self, n: int):
        # simplify collapses sqrt(x)*sqrt(x), which keeps nested roots decidable
        a, b = self.a_n(n), self.b_n(n)
        return xr.simplify(xr.Mul(a, a)), xr.simplify(xr.Mul(b, b))

    def t_sq(self, n: int) -> ExactReal:
        a2, b2 = self._squares(n)
        c = self.c(n)
        return xr.simplify(xr.Div(xr.Sub(b2, xr.Mul(c, c)), xr.Sub(b2, a2)))

    def f_index(self, n: int) -> Index:
        return self.seq_a.index(self.spectrum, n)

    def g_index(self, n: int) -> Index:
        return self.seq_b.index(self.spectrum, n)

    def terms(self, count: int) -> Tuple[List[ExactReal], List[ExactReal]]:
        return [self.t_sq(n) for n in range(1, count + 1)], [self.c(n) for n in range(1, count + 1)]

    def verify(self, count: int = 16) -> None:
        """Exact check of the witness identities on the first ``count`` terms."""
        prev = None
        for n in range(1, count + 1):
            t2, c = self.t_sq(n), self.c(n)
            a2, b2 = self._squares(n)
            if xr.sign(t2) is LT or xr.compare(t2, xr.ONE) is GT:
                raise CertificateMismatch(f"t_{n}^2 = {t2} outside [0, 1]")
            mix = xr.Add(xr.Mul(t2, a2), xr.Mul(xr.Sub(xr.ONE, t2), b2))
            if not (xr.symbolically_equal(mix, xr.Mul(c, c)) or xr.eq(mix, xr.Mul(c, c))):
                raise CertificateMismatch(f"t_{n}^2 a_n^2 + (1 - t_{n}^2) b_n^2 != c_{n}^2")
            if xr.compare(c, self.a) is not GT:
                raise CertificateMismatch(f"c_{n} = {c} is not above a = {self.a}")
            if prev is not None and xr.compare(c, prev) is not LT:
                raise CertificateMismatch("c_n is not strictly decreasing")
            prev = c


Certificate = Union[NotPositiveCertificate, DecreasingAccumulation, MixingPair]


@dataclass(frozen=True)
class Member:
    decomposition: AMDecomposition


@dataclass(frozen=True)
class NotMember:
    certificate: Certificate


AMVerdict = Union[Member, NotMember]


def is_member(v: AMVerdict) -> bool:
    return isinstance(v, Member)


# ---------------------------------------------------------------------------
# Mixing witnesses
# ---------------------------------------------------------------------------


def _first_at_least(value_of, level: ExactReal, limit_cap: int = 1 << 40) -> int:
    """Smallest k >= 0 with value_of(k) >= level, for non-decreasing value_of."""
    if xr.compare(value_of(0), level) is not LT:
        return 0
    lo, hi = 0, 1
    while xr.compare(value_of(hi), level) is LT:
        lo, hi = hi, hi * 2
        if hi > limit_cap:
            raise xr.Undecided("stream never reaches the requested level")
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xr.compare(value_of(mid), level) is LT:
            lo = mid
        else:
            hi = mid
    return hi


def build_mixing_witness(s: SpectrumDescription, seq_a: Stream, seq_b: Stream, check_terms: int = 8) -> MixingPair:
    """Witness that two eigenvalue streams with different limits break attainment.

    The larger-limit stream is advanced until its first term reaches
    c_1 = (a + b)/2, which keeps a_n <= c_n <= b_n for every n.
    """
    a, b = seq_a.limit(s), seq_b.limit(s)
    order = xr.compare(a, b)
    if order is EQ:
        raise LimitsEqual(f"both streams converge to {a}")
    if order is GT:
        seq_a, seq_b, a, b = seq_b, seq_a, b, a
    c1 = xr.simplify(xr.Div(xr.Add(a, b), xr.real(2)))
    shift = _first_at_least(lambda k: seq_b.value(s, 1 + k), c1)
    pair = MixingPair(s, seq_a, seq_b.shifted(shift), a, b)
    pair.verify(check_terms)
    return pair


# ---------------------------------------------------------------------------
# Classification of positive diagonals
# ---------------------------------------------------------------------------


def _accumulation_streams(s: SpectrumDescription):
    """Distinct values carried by non-decreasing streams, smallest first."""
    found: List[Tuple[ExactReal, Stream]] = []
    candidates = []
    for i, t in enumerate(s.tails):
        if t.monotonicity is not Monotonicity.DECREASING:
            candidates.append((t.limit, Stream("tail", i)))
    for j, p in enumerate(s.infinite_points):
        candidates.append((p.value, Stream("infinite", j)))
    for value, stream in candidates:
        if not any(xr.eq(value, v) for v, _ in found):
            found.append((value, stream))
    # insertion sort keeps the order deterministic
    ordered: List[Tuple[ExactReal, Stream]] = []
    for item in found:
        pos = 0
        while pos < len(ordered) and xr.compare(ordered[pos][0], item[0]) is LT:
            pos += 1
        ordered.insert(pos, item)
    return ordered


def classify_AM_positive(D: DiagonalOperator) -> AMVerdict:
    """Decide membership of a real diagonal in AM+ with a certificate or the decomposition."""
    s = D.spectrum
    bad = s.first_negative()
    if bad is not None:
        return NotMember(NotPositiveCertificate(bad, s.value_at(bad)))
    if not s.is_infinite_dimensional:
        raise InvalidOperator("the spectrum must describe an infinite-dimensional space")
    streams = _accumulation_streams(s)
    if len(streams) >= 2:
        (_, first), (_, second) = streams[0], streams[1]
        return NotMember(build_mixing_witness(s, first, second))
    for i, t in enumerate(s.tails):
        if t.monotonicity is Monotonicity.DECREASING:
            return NotMember(DecreasingAccumulation(i, t.limit))
    (alpha, _), = streams
    return Member(_split(D, alpha))


def _split(D: DiagonalOperator, alpha: ExactReal) -> AMDecomposition:
    s = D.spectrum
    k_fin, f_fin = [], []
    for p in s.finite_points:
        c = xr.compare(p.value, alpha)
        if c is LT:
            k_fin.append(SpectralPoint(xr.simplify(xr.Sub(alpha, p.value)), p.multiplicity))
            f_fin.append(SpectralPoint(ZERO, p.multiplicity))
        elif c is GT:
            k_fin.append(SpectralPoint(ZERO, p.multiplicity))
            f_fin.append(SpectralPoint(xr.simplify(xr.Sub(p.value, alpha)), p.multiplicity))
        else:
            k_fin.append(SpectralPoint(ZERO, p.multiplicity))
            f_fin.append(SpectralPoint(ZERO, p.multiplicity))
    zeros_inf = tuple(SpectralPoint(ZERO, sp.INFINITE) for _ in s.infinite_points)
    k_tails, f_tails = [], []
    second_type = bool(s.infinite_points)
    for t in s.tails:
        zero_tail = TailSequence(ZERO, t.start, Monotonicity.CONSTANT, ZERO)
        f_tails.append(zero_tail)
        if t.monotonicity is Monotonicity.CONSTANT:
            k_tails.append(zero_tail)
            second_type = True
        else:
            k_tails.append(
                TailSequence(xr.simplify(xr.Sub(alpha, t.value_expr)), t.start, Monotonicity.DECREASING, ZERO)
            )
    K = DiagonalOperator(SpectrumDescription(tuple(k_fin), zeros_inf, tuple(k_tails), True), "K")
    F = DiagonalOperator(SpectrumDescription(tuple(f_fin), zeros_inf, tuple(f_tails), True), "F")
    return AMDecomposition(xr.simplify(alpha), K, F, AMType.SECOND if second_type else AMType.FIRST)


def decompose(D: DiagonalOperator) -> AMDecomposition:
    """The unique (alpha, K, F) of an AM+ diagonal."""
    verdict = classify_AM_positive(D)
    if not isinstance(verdict, Member):
        raise NotAMember(f"not absolutely minimum attaining: {type(verdict.certificate).__name__}")
    return verdict.decomposition


# ---------------------------------------------------------------------------
# Synthesis
# ---------------------------------------------------------------------------


def _check_compact_shape(K: SpectrumDescription):
    for p in K.infinite_points:
        if not xr.is_zero(p.value):
            raise InvalidOperator("K has a nonzero eigenvalue of infinite multiplicity")
    for t in K.tails:
        ok = (t.monotonicity is Monotonicity.DECREASING and xr.is_zero(t.limit)) or (
            t.monotonicity is Monotonicity.CONSTANT and xr.is_zero(t.limit)
        )
        if not ok:
            raise InvalidOperator("K tails must decrease to 0 (or vanish)")


def _check_finite_support(F: SpectrumDescription):
    for p in F.infinite_points:
        if not xr.is_zero(p.value):
            raise InvalidOperator("F has a nonzero eigenvalue of infinite multiplicity")
    for t in F.tails:
        if not (t.monotonicity is Monotonicity.CONSTANT and xr.is_zero(t.limit)):
            raise InvalidOperator("F must vanish on every tail")


def is_canonical(alpha, K: DiagonalOperator) -> bool:
    norm = sp.supremum(K.spectrum).value
    return xr.compare(norm, alpha) is not GT


def synthesize(alpha, K: DiagonalOperator, F: DiagonalOperator) -> DiagonalOperator:
    """alpha*I - K + F on the common index model of K and F.

    Requires ||K||/2 <= alpha.  When alpha < ||K|| the result is still AM but
    the triple is not the canonical one, and a NonCanonicalWarning is issued.
    """
    alpha = xr.real(alpha)
    ks, fs = K.spectrum, F.spectrum
    if not sp.same_layout(ks, fs):
        raise MisalignedIndexModels("K and F index their eigenvalues differently")
    if xr.sign(alpha) is LT:
        raise InvalidOperator("alpha must be >= 0")
    for name, spec in (("K", ks), ("F", fs)):
        bad = spec.first_negative()
        if bad is not None:
            raise NotPositive(f"{name} has negative entry {spec.value_at(bad)}")
    _check_compact_shape(ks)
    _check_finite_support(fs)
    for i, (kp, fp) in enumerate(zip(ks.finite_points, fs.finite_points)):
        if not xr.is_zero(kp.value) and not xr.is_zero(fp.value):
            raise OverlappingSupports(f"K and F are both nonzero on finite point {i}")
    norm = sp.supremum(ks).value
    if xr.compare(norm, xr.Mul(xr.real(2), alpha)) is GT:
        raise NormBoundViolated(f"||K|| = {norm} exceeds 2*alpha = 2*{alpha}")
    if xr.compare(norm, alpha) is GT:
        warnings.warn(f"||K|| = {norm} > alpha = {alpha}: non-canonical triple", NonCanonicalWarning, stacklevel=2)

    def entry(k, f):
        return xr.simplify(xr.Add(xr.Sub(alpha, k), f))

    fin = tuple(SpectralPoint(entry(k.value, f.value), k.multiplicity) for k, f in zip(ks.finite_points, fs.finite_points))
    inf = tuple(SpectralPoint(entry(k.value, f.value), sp.INFINITE) for k, f in zip(ks.infinite_points, fs.infinite_points))
    tails = []
    for kt, ft in zip(ks.tails, fs.tails):
        mono = Monotonicity.CONSTANT if kt.monotonicity is Monotonicity.CONSTANT else Monotonicity.INCREASING
        expr = entry(kt.value_expr, ft.value_expr)
        tails.append(TailSequence(expr, kt.start, mono, entry(kt.limit, ft.limit)))
    s = SpectrumDescription(fin, inf, tuple(tails))
    return DiagonalOperator(SpectrumDescription(fin, inf, tuple(tails), s.is_positive()))


# ---------------------------------------------------------------------------
# General operators via the modulus
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneralVerdict:
    verdict: AMVerdict
    modulus: DiagonalOperator
    polar: Optional[PolarForm] = None


def classify_AM_general(T: Operator, n_check: int = DEFAULT_NCHECK) -> GeneralVerdict:
    """T is AM iff |T| is AM+; members also get their polar form T = V(alpha I - K + F)."""
    if isinstance(T, DiagonalOperator):
        T = as_basis_map(T)
    pf = polar(T, n_check)
    verdict = classify_AM_positive(pf.modulus_part)
    if isinstance(verdict, Member):
        d = verdict.decomposition
        rebuilt = synthesize(d.alpha, d.K, d.F)
        if not sp.spectra_equal(rebuilt.spectrum, pf.modulus_part.spectrum):
            raise EquivalenceViolation("modulus differs from alpha I - K + F")
        return GeneralVerdict(verdict, pf.modulus_part, pf)
    return GeneralVerdict(verdict, pf.modulus_part, None)


class PartialIsometryReason(enum.Enum):
    FINITE_KERNEL = "FiniteKernel"
    FINITE_RANGE = "FiniteRange"
    BOTH_INFINITE = "BothInfinite"


@dataclass(frozen=True)
class PartialIsometryVerdict:
    is_am: bool
    reason: PartialIsometryReason


def check_partial_isometry(T: Operator, n_check: int = DEFAULT_NCHECK) -> PartialIsometryVerdict:
    """A partial isometry is AM iff its kernel or its range is finite dimensional."""
    s = modulus(T, n_check).spectrum
    values = [p.value for p in s.finite_points] + [p.value for p in s.infinite_points]
    for t in s.tails:
        if t.monotonicity is not Monotonicity.CONSTANT:
            raise NotAPartialIsometry(f"weights {t.value_expr} are not unimodular")
        values.append(t.limit)
    for v in values:
        if not (xr.is_zero(v) or xr.eq(v, xr.ONE)):
            raise NotAPartialIsometry(f"weight of modulus {v}")
    infinite_blocks = [p.value for p in s.infinite_points] + [t.limit for t in s.tails]
    kernel_infinite = any(xr.is_zero(v) for v in infinite_blocks)
    support_infinite = any(not xr.is_zero(v) for v in infinite_blocks)
    if not kernel_infinite:
        return PartialIsometryVerdict(True, PartialIsometryReason.FINITE_KERNEL)
    if not support_infinite:
        return PartialIsometryVerdict(True, PartialIsometryReason.FINITE_RANGE)
    return PartialIsometryVerdict(False, PartialIsometryReason.BOTH_INFINITE)
