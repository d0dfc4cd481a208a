"""Finite descriptions of countable eigenvalue multisets.

A spectrum is a finite list of points with finite multiplicity, a finite
list of values with infinite multiplicity, and finitely many monotone tail
sequences ``value_expr(n)`` for ``n >= start``.  Every eigenvalue slot has an
:class:`Index`; the canonical enumeration of a spectrum onto basis vectors
``e_1, e_2, ...`` lists the finite points first and then visits the tails and
infinite blocks round-robin.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field, replace
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

from . import exactreal as xr
from .errors import (
    EmptySelection,
    InvalidOperator,
    LimitSideViolation,
    LimitUndetermined,
    MonotonicityViolation,
    Undecided,
)
from .exactreal import EQ, GT, LT, ExactReal

INFINITE = math.inf
DEFAULT_NCHECK = 1024


class Monotonicity(enum.Enum):
    INCREASING = "increasing"
    DECREASING = "decreasing"
    CONSTANT = "constant"


class Approach(enum.Enum):
    FROM_BELOW = "from_below"
    FROM_ABOVE = "from_above"


@dataclass(frozen=True)
class TailSequence:
    value_expr: ExactReal
    start: int
    monotonicity: Monotonicity
    limit: ExactReal

    def __post_init__(self):
        if self.start < 1:
            raise InvalidOperator(f"tail start index must be >= 1, got {self.start}")
        if not self.limit.is_closed:
            raise InvalidOperator("tail limit must be a closed expression")

    def at(self, n: int) -> ExactReal:
        if n < self.start:
            raise IndexError(f"tail starts at {self.start}, asked for {n}")
        return self.value_expr.at(n)

    def term(self, k: int) -> ExactReal:
        """k-th term counting from 0."""
        return self.at(self.start + k)

    @property
    def first(self) -> ExactReal:
        return self.at(self.start)

    def shifted(self, new_start: int) -> "TailSequence":
        return replace(self, start=new_start)


@dataclass(frozen=True)
class SpectralPoint:
    value: ExactReal
    multiplicity: Union[int, float] = 1

    def __post_init__(self):
        if not self.value.is_closed:
            raise InvalidOperator("spectral point values must be closed")
        m = self.multiplicity
        if not (m == INFINITE or (isinstance(m, int) and m >= 1)):
            raise InvalidOperator(f"multiplicity must be >= 1 or infinite, got {m!r}")

    @property
    def infinite(self) -> bool:
        return self.multiplicity == INFINITE


class Index(NamedTuple):
    """An eigenvalue slot: ``block`` is 'finite', 'tail' or 'infinite'.

    ``pos`` is the copy number for finite points, the sequence index ``n``
    for tails, and the copy number (from 0) for infinite blocks.
    """

    block: str
    block_id: int
    pos: int


@dataclass(frozen=True)
class SpectrumDescription:
    finite_points: Tuple[SpectralPoint, ...] = ()
    infinite_points: Tuple[SpectralPoint, ...] = ()
    tails: Tuple[TailSequence, ...] = ()
    positivity_flag: bool = False

    def __post_init__(self):
        object.__setattr__(self, "finite_points", tuple(self.finite_points))
        object.__setattr__(self, "infinite_points", tuple(self.infinite_points))
        object.__setattr__(self, "tails", tuple(self.tails))
        if any(p.infinite for p in self.finite_points):
            raise InvalidOperator("finite_points must have finite multiplicity")
        if not all(p.infinite for p in self.infinite_points):
            raise InvalidOperator("infinite_points must have infinite multiplicity")

    # -- shape ------------------------------------------------------------

    @property
    def is_infinite_dimensional(self) -> bool:
        return bool(self.tails or self.infinite_points)

    @property
    def finite_size(self) -> int:
        return sum(p.multiplicity for p in self.finite_points)

    @property
    def _blocks(self) -> int:
        return len(self.tails) + len(self.infinite_points)

    def value_at(self, idx: Index) -> ExactReal:
        if idx.block == "finite":
            return self.finite_points[idx.block_id].value
        if idx.block == "tail":
            return self.tails[idx.block_id].at(idx.pos)
        return self.infinite_points[idx.block_id].value

    # -- canonical enumeration -------------------------------------------

    def position(self, idx: Index) -> int:
        """1-based basis position of an index in the canonical enumeration."""
        if idx.block == "finite":
            before = sum(p.multiplicity for p in self.finite_points[: idx.block_id])
            return before + idx.pos + 1
        f, b = self.finite_size, self._blocks
        if idx.block == "tail":
            t = self.tails[idx.block_id]
            return f + (idx.pos - t.start) * b + idx.block_id + 1
        return f + idx.pos * b + len(self.tails) + idx.block_id + 1

    def index_at(self, position: int) -> Index:
        if position < 1:
            raise IndexError(position)
        k = position - 1
        for i, p in enumerate(self.finite_points):
            if k < p.multiplicity:
                return Index("finite", i, k)
            k -= p.multiplicity
        b = self._blocks
        if b == 0:
            raise IndexError(f"position {position} beyond finite spectrum")
        rnd, slot = divmod(k, b)
        if slot < len(self.tails):
            return Index("tail", slot, self.tails[slot].start + rnd)
        return Index("infinite", slot - len(self.tails), rnd)

    def enumerate_values(self, count: int) -> List[ExactReal]:
        """Values of the first ``count`` basis positions (fewer if finite)."""
        out = []
        total = math.inf if self.is_infinite_dimensional else self.finite_size
        for position in range(1, int(min(count, total)) + 1):
            out.append(self.value_at(self.index_at(position)))
        return out

    # -- signs ------------------------------------------------------------

    def first_negative(self) -> Optional[Index]:
        """An index carrying a negative eigenvalue, or None if all are >= 0."""
        for i, p in enumerate(self.finite_points):
            if xr.sign(p.value) is LT:
                return Index("finite", i, 0)
        for i, p in enumerate(self.infinite_points):
            if xr.sign(p.value) is LT:
                return Index("infinite", i, 0)
        for i, t in enumerate(self.tails):
            if xr.sign(t.first) is LT:
                return Index("tail", i, t.start)
            if t.monotonicity is Monotonicity.DECREASING and xr.sign(t.limit) is LT:
                return Index("tail", i, _first_crossing(t, xr.ZERO))
        return None

    def is_positive(self) -> bool:
        return self.first_negative() is None


def _first_crossing(t: TailSequence, level: ExactReal) -> int:
    """Smallest n with t(n) < level for a decreasing tail whose limit is below."""
    lo, step = t.start, 1
    while xr.compare(t.at(lo + step), level) is not LT:
        step *= 2
        if step > 1 << 40:
            raise Undecided("crossing index too large")
    hi = lo + step
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if xr.compare(t.at(mid), level) is LT:
            hi = mid
        else:
            lo = mid
    return lo if xr.compare(t.at(lo), level) is LT else hi


# ---------------------------------------------------------------------------
# Tail validation and inference
# ---------------------------------------------------------------------------


def validate_tail(t: TailSequence, n_check: int = DEFAULT_NCHECK) -> None:
    """Check the declared monotonicity and limit on ``start .. start + n_check``.

    This is a prefix check, not a proof.  Raises MonotonicityViolation,
    LimitSideViolation or Undecided.
    """
    n0 = t.start
    values = [t.at(n) for n in range(n0, n0 + n_check + 1)]
    mono = t.monotonicity
    for k, v in enumerate(values):
        n = n0 + k
        if k + 1 < len(values):
            step = xr.compare(v, values[k + 1])
            if mono is Monotonicity.INCREASING and step is not LT:
                raise MonotonicityViolation(n, f"{v} is not below the next term")
            if mono is Monotonicity.DECREASING and step is not GT:
                raise MonotonicityViolation(n, f"{v} is not above the next term")
            if mono is Monotonicity.CONSTANT and step is not EQ:
                raise MonotonicityViolation(n, f"{v} differs from the next term")
        side = xr.compare(v, t.limit)
        expected = {Monotonicity.INCREASING: LT, Monotonicity.DECREASING: GT, Monotonicity.CONSTANT: EQ}[mono]
        if side is not expected:
            raise LimitSideViolation(n, f"{v} against limit {t.limit}")
    if mono is not Monotonicity.CONSTANT:
        gap_first = xr.Sub(values[0], t.limit)
        gap_last = xr.Sub(values[-1], t.limit)
        if mono is Monotonicity.INCREASING:
            gap_first, gap_last = xr.Neg(gap_first), xr.Neg(gap_last)
        if xr.compare(gap_last, gap_first) is not LT:
            raise LimitSideViolation(n0 + n_check, "distance to the limit did not shrink")
        try:
            symbolic = xr.limit(t.value_expr)
        except LimitUndetermined:
            symbolic = None
        if symbolic is not None and not xr.eq(symbolic, t.limit):
            raise LimitSideViolation(n0 + n_check, f"declared limit {t.limit} but the sequence tends to {symbolic}")


def infer_tail(
    expr: ExactReal,
    start: int,
    n_check: int = DEFAULT_NCHECK,
    limit: Optional[ExactReal] = None,
) -> TailSequence:
    """Build a tail with monotonicity and limit inferred from ``expr``.

    Closed (or symbolically constant) expressions become constant tails.
    The inferred metadata is then validated on the usual prefix.
    """
    expr = xr.simplify(expr)
    if expr.is_closed:
        return TailSequence(expr, start, Monotonicity.CONSTANT, expr)
    if limit is None:
        limit = xr.limit(expr)
    first, second = expr.at(start), expr.at(start + 1)
    step = xr.compare(first, second)
    if step is EQ:
        mono = Monotonicity.CONSTANT
    elif step is LT:
        mono = Monotonicity.INCREASING
    else:
        mono = Monotonicity.DECREASING
    tail = TailSequence(expr, start, mono, limit)
    validate_tail(tail, n_check)
    if mono is Monotonicity.CONSTANT:
        # trust-but-verify: collapse to the closed limit
        tail = TailSequence(limit, start, mono, limit)
    return tail


def validate_spectrum(s: SpectrumDescription, n_check: int = DEFAULT_NCHECK) -> None:
    for t in s.tails:
        validate_tail(t, n_check)
    if s.positivity_flag and not s.is_positive():
        raise InvalidOperator("positivity flag set but a negative eigenvalue exists")


# ---------------------------------------------------------------------------
# Infimum, supremum, limit points
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Extremum:
    value: ExactReal
    attained: bool
    witness: Optional[Index] = None


def _candidates(s: SpectrumDescription, lower: bool):
    """(value, witness-or-None) pairs whose extremum is the spectrum's."""
    attaining_dir = Monotonicity.INCREASING if lower else Monotonicity.DECREASING
    for i, p in enumerate(s.finite_points):
        yield p.value, Index("finite", i, 0)
    for i, p in enumerate(s.infinite_points):
        yield p.value, Index("infinite", i, 0)
    for i, t in enumerate(s.tails):
        if t.monotonicity is Monotonicity.CONSTANT or t.monotonicity is attaining_dir:
            yield t.first, Index("tail", i, t.start)
        else:
            yield t.limit, None


def _extremum(s: SpectrumDescription, lower: bool) -> Extremum:
    best, witness, attained = None, None, False
    better = LT if lower else GT
    for value, idx in _candidates(s, lower):
        if best is None:
            best, witness, attained = value, idx, idx is not None
            continue
        c = xr.compare(value, best)
        if c is better:
            best, witness, attained = value, idx, idx is not None
        elif c is EQ and not attained and idx is not None:
            witness, attained = idx, True
    if best is None:
        raise EmptySelection("empty spectrum")
    return Extremum(xr.simplify(best), attained, witness if attained else None)


def infimum(s: SpectrumDescription) -> Extremum:
    """Infimum of the eigenvalues, whether some index attains it, and which."""
    return _extremum(s, lower=True)


def supremum(s: SpectrumDescription) -> Extremum:
    return _extremum(s, lower=False)


def limit_points(s: SpectrumDescription) -> List[Tuple[ExactReal, Approach]]:
    """One entry per non-constant tail limit, deduplicated on (value, approach)."""
    out: List[Tuple[ExactReal, Approach]] = []
    for t in s.tails:
        if t.monotonicity is Monotonicity.CONSTANT:
            continue
        approach = Approach.FROM_BELOW if t.monotonicity is Monotonicity.INCREASING else Approach.FROM_ABOVE
        if any(a is approach and xr.eq(v, t.limit) for v, a in out):
            continue
        out.append((t.limit, approach))
    return out


# ---------------------------------------------------------------------------
# Basis-aligned selections
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class All:
    pass


@dataclass(frozen=True)
class SuffixFrom:
    m: int


@dataclass(frozen=True)
class FiniteList:
    ns: Tuple[int, ...]


@dataclass(frozen=True)
class FirstK:
    k: int


TailChoice = Union[All, SuffixFrom, FiniteList]
InfiniteChoice = Union[All, FirstK]


@dataclass(frozen=True)
class IndexSelection:
    """Selects a basis-aligned subspace: finite point ids, and per-block choices.

    Blocks absent from ``tails`` / ``infinite`` are dropped entirely.
    """

    finite: frozenset = frozenset()
    tails: Dict[int, TailChoice] = field(default_factory=dict)
    infinite: Dict[int, InfiniteChoice] = field(default_factory=dict)

    @classmethod
    def everything(cls, s: SpectrumDescription) -> "IndexSelection":
        return cls(
            frozenset(range(len(s.finite_points))),
            {i: All() for i in range(len(s.tails))},
            {i: All() for i in range(len(s.infinite_points))},
        )


def restrict_spectrum(s: SpectrumDescription, sel: IndexSelection) -> SpectrumDescription:
    finite = [s.finite_points[i] for i in sorted(sel.finite) if 0 <= i < len(s.finite_points)]
    infinite = []
    tails = []
    for i, choice in sorted(sel.tails.items()):
        t = s.tails[i]
        if isinstance(choice, All):
            tails.append(t)
        elif isinstance(choice, SuffixFrom):
            tails.append(t.shifted(max(choice.m, t.start)))
        elif isinstance(choice, FiniteList):
            for n in choice.ns:
                finite.append(SpectralPoint(t.at(n), 1))
        else:
            raise TypeError(choice)
    for i, choice in sorted(sel.infinite.items()):
        p = s.infinite_points[i]
        if isinstance(choice, All):
            infinite.append(p)
        elif isinstance(choice, FirstK):
            if choice.k >= 1:
                finite.append(SpectralPoint(p.value, choice.k))
        else:
            raise TypeError(choice)
    if not (finite or infinite or tails):
        raise EmptySelection("selection picks no basis vector")
    return SpectrumDescription(tuple(finite), tuple(infinite), tuple(tails), s.positivity_flag)


# ---------------------------------------------------------------------------
# Structural helpers
# ---------------------------------------------------------------------------


def same_layout(a: SpectrumDescription, b: SpectrumDescription) -> bool:
    """True when both descriptions index their eigenvalues identically."""
    return (
        [p.multiplicity for p in a.finite_points] == [p.multiplicity for p in b.finite_points]
        and len(a.infinite_points) == len(b.infinite_points)
        and [t.start for t in a.tails] == [t.start for t in b.tails]
    )


def tails_equal(a: TailSequence, b: TailSequence, n_check: int = 64) -> bool:
    if a.start != b.start or a.monotonicity is not b.monotonicity:
        return False
    if not xr.eq(a.limit, b.limit):
        return False
    if xr.symbolically_equal(a.value_expr, b.value_expr):
        return True
    return all(xr.eq(a.at(n), b.at(n)) for n in range(a.start, a.start + n_check))


def spectra_equal(a: SpectrumDescription, b: SpectrumDescription) -> bool:
    """Exact entrywise equality of two aligned descriptions."""
    if not same_layout(a, b):
        return False
    pairs = list(zip(a.finite_points, b.finite_points)) + list(zip(a.infinite_points, b.infinite_points))
    if not all(xr.eq(p.value, q.value) for p, q in pairs):
        return False
    return all(tails_equal(s, t) for s, t in zip(a.tails, b.tails))


def map_values(s: SpectrumDescription, fn, tail_fn, positivity_flag=None) -> SpectrumDescription:
    """Apply ``fn`` to point values and ``tail_fn`` to tails, keeping the layout."""
    return SpectrumDescription(
        tuple(SpectralPoint(xr.simplify(fn(p.value)), p.multiplicity) for p in s.finite_points),
        tuple(SpectralPoint(xr.simplify(fn(p.value)), p.multiplicity) for p in s.infinite_points),
        tuple(tail_fn(t) for t in s.tails),
        s.positivity_flag if positivity_flag is None else positivity_flag,
    )
