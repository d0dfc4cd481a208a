"""Symbolic operators on a countable orthonormal basis.

Two classes are represented:

``DiagonalOperator``
    A real diagonal operator given by a :class:`SpectrumDescription`; basis
    vectors follow the spectrum's canonical enumeration.

``BasisMapOperator``
    ``T e_n = w_n e_phi(n)`` with ``phi`` injective on the support.  The
    domain is partitioned into singletons and arithmetic progressions
    ("pieces"); each piece maps ``start + step*k`` to
    ``target_start + target_step*k`` with a weight given as an expression in
    the domain index ``n``.  Kernel pieces carry weight 0 and no target.

Complex diagonal operators are basis maps whose pieces map every index to
itself.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from functools import cached_property, reduce
from typing import Callable, Dict, List, Optional, Tuple, Union

from . import exactreal as xr
from . import spectra as sp
from .errors import EmptySelection, InvalidOperator, MisalignedIndexModels, NotPositive
from .exactreal import EQ, GT, LT, N, ONE, ZERO, ExactReal
from .spectra import (
    DEFAULT_NCHECK,
    Index,
    IndexSelection,
    Monotonicity,
    SpectralPoint,
    SpectrumDescription,
    TailSequence,
)


# ---------------------------------------------------------------------------
# Diagonal operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DiagonalOperator:
    spectrum: SpectrumDescription
    name: str = ""

    @cached_property
    def positivity_flag(self) -> bool:
        return self.spectrum.is_positive()

    def entry(self, position: int) -> ExactReal:
        return self.spectrum.value_at(self.spectrum.index_at(position))

    def __str__(self):
        return describe_spectrum(self.spectrum)


def diagonal(points=(), infinite=(), tails=(), name="") -> DiagonalOperator:
    """Convenience constructor.

    ``points``: iterable of (value, multiplicity) or plain values;
    ``infinite``: values of infinite multiplicity;
    ``tails``: TailSequence objects or (expr, start) pairs whose metadata is
    inferred.
    """
    fin = []
    for p in points:
        if isinstance(p, SpectralPoint):
            fin.append(p)
        elif isinstance(p, tuple):
            fin.append(SpectralPoint(xr.real(p[0]), p[1]))
        else:
            fin.append(SpectralPoint(xr.real(p), 1))
    inf = [p if isinstance(p, SpectralPoint) else SpectralPoint(xr.real(p), sp.INFINITE) for p in infinite]
    tl = []
    for t in tails:
        if isinstance(t, TailSequence):
            tl.append(t)
        else:
            expr, start = t
            tl.append(sp.infer_tail(xr.real(expr), start, n_check=64))
    s = SpectrumDescription(tuple(fin), tuple(inf), tuple(tl))
    s = SpectrumDescription(s.finite_points, s.infinite_points, s.tails, s.is_positive())
    return DiagonalOperator(s, name)


def describe_spectrum(s: SpectrumDescription) -> str:
    parts = []
    for p in s.finite_points:
        parts.append(f"{p.value}" + (f" (x{p.multiplicity})" if p.multiplicity != 1 else ""))
    for p in s.infinite_points:
        parts.append(f"{p.value} (x inf)")
    for t in s.tails:
        parts.append(f"[{t.value_expr}, n >= {t.start}, {t.monotonicity.value} to {t.limit}]")
    return "diag(" + ", ".join(parts) + ")"


# ---------------------------------------------------------------------------
# Basis-map operators
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Weight:
    re: ExactReal
    im: ExactReal = ZERO

    @property
    def is_real(self) -> bool:
        return self.im.is_closed and xr.is_zero(self.im)

    @property
    def is_zero(self) -> bool:
        return self.re.is_closed and self.im.is_closed and xr.is_zero(self.re) and xr.is_zero(self.im)

    @property
    def is_closed(self) -> bool:
        return self.re.is_closed and self.im.is_closed

    def conj(self) -> "Weight":
        if self.is_real:
            return self
        return Weight(self.re, xr.simplify(xr.Neg(self.im)))

    def at(self, n: int) -> "Weight":
        return Weight(self.re.at(n), self.im.at(n))

    def compose(self, index_expr: ExactReal) -> "Weight":
        return Weight(
            xr.simplify(xr.substitute(self.re, index_expr)),
            xr.simplify(xr.substitute(self.im, index_expr)),
        )

    def modulus_squared(self) -> ExactReal:
        if self.is_real:
            return xr.simplify(xr.Mul(self.re, self.re))
        return xr.simplify(xr.Add(xr.Mul(self.re, self.re), xr.Mul(self.im, self.im)))

    def __str__(self):
        if self.is_real:
            return str(self.re)
        return f"({self.re}) + i*({self.im})"


@dataclass(frozen=True)
class Singleton:
    index: int
    weight: Weight
    target: Optional[int]


@dataclass(frozen=True)
class Piece:
    start: int
    step: int
    weight: Weight
    target_start: Optional[int] = None
    target_step: Optional[int] = None

    def domain(self, k: int) -> int:
        return self.start + self.step * k

    def target(self, k: int) -> Optional[int]:
        if self.target_start is None:
            return None
        return self.target_start + self.target_step * k

    def covers(self, n: int) -> bool:
        return n >= self.start and (n - self.start) % self.step == 0

    def hits(self, m: int) -> bool:
        if self.target_start is None:
            return False
        return m >= self.target_start and (m - self.target_start) % self.target_step == 0

    @property
    def is_kernel(self) -> bool:
        return self.weight.is_zero

    def diag_variable(self) -> Tuple[ExactReal, int]:
        """Domain index as an expression in the diagonal tail variable, and its start."""
        if self.step == 1:
            return N, self.start
        return xr.simplify(xr.Add(xr.Mul(xr.real(self.step), N), xr.real(self.start - self.step))), 1

    def domain_of_tail_index(self, n: int) -> int:
        return n if self.step == 1 else self.step * n + self.start - self.step


def _lcm(values) -> int:
    return reduce(lambda a, b: a * b // math.gcd(a, b), values, 1)


@dataclass(frozen=True)
class BasisMapOperator:
    singletons: Tuple[Singleton, ...] = ()
    pieces: Tuple[Piece, ...] = ()
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "singletons", tuple(sorted(self.singletons, key=lambda s: s.index)))
        object.__setattr__(self, "pieces", tuple(self.pieces))
        self._check_geometry()

    def _check_geometry(self):
        for s in self.singletons:
            if s.index < 1:
                raise InvalidOperator(f"basis indices start at 1, got {s.index}")
            if s.target is None and not s.weight.is_zero:
                raise InvalidOperator(f"index {s.index} has a nonzero weight but no target")
            if not s.weight.is_closed:
                raise InvalidOperator(f"singleton weight at {s.index} must be closed")
        for p in self.pieces:
            if p.start < 1 or p.step < 1:
                raise InvalidOperator("pieces need start >= 1 and step >= 1")
            if not p.is_kernel:
                if p.target_start is None or p.target_step is None or p.target_start < 1 or p.target_step < 1:
                    raise InvalidOperator(f"piece from {p.start} needs target_start/target_step >= 1")
        if not self.pieces:
            raise InvalidOperator("a basis map needs at least one infinite piece")
        # domain cover: periodic beyond the largest start, so one period suffices
        horizon = max([s.index for s in self.singletons] + [p.start for p in self.pieces])
        horizon += _lcm(p.step for p in self.pieces)
        singles = {}
        for s in self.singletons:
            if s.index in singles:
                raise InvalidOperator(f"index {s.index} listed twice")
            singles[s.index] = s
        for n in range(1, horizon + 1):
            count = (n in singles) + sum(p.covers(n) for p in self.pieces)
            if count != 1:
                raise InvalidOperator(f"domain index {n} covered {count} times")
        # injectivity of phi on the support, same periodicity argument
        live = [p for p in self.pieces if not p.is_kernel]
        targets = [s.target for s in self.singletons if not s.weight.is_zero]
        if len(set(targets)) != len(targets):
            raise InvalidOperator("two singletons share a target")
        t_horizon = max([t for t in targets] + [p.target_start for p in live] + [0])
        t_horizon += _lcm(p.target_step for p in live) if live else 0
        for m in range(1, t_horizon + 1):
            count = targets.count(m) + sum(p.hits(m) for p in live)
            if count > 1:
                raise InvalidOperator(f"basis vector e_{m} is hit {count} times (map not injective)")

    # -- pointwise access -------------------------------------------------

    def locate(self, n: int):
        for s in self.singletons:
            if s.index == n:
                return s, None
        for p in self.pieces:
            if p.covers(n):
                return p, (n - p.start) // p.step
        raise IndexError(n)

    def weight_at(self, n: int) -> Weight:
        owner, k = self.locate(n)
        if k is None:
            return owner.weight
        return owner.weight.at(n)

    def target_of(self, n: int) -> Optional[int]:
        owner, k = self.locate(n)
        if k is None:
            return owner.target if not owner.weight.is_zero else None
        return owner.target(k) if not owner.is_kernel else None

    @property
    def is_real(self) -> bool:
        return all(s.weight.is_real for s in self.singletons) and all(p.weight.is_real for p in self.pieces)

    def __str__(self):
        parts = []
        for s in self.singletons:
            parts.append(f"e_{s.index} -> " + ("0" if s.weight.is_zero else f"({s.weight}) e_{s.target}"))
        for p in self.pieces:
            dom = f"n = {p.start}, {p.start + p.step}, ..."
            if p.is_kernel:
                parts.append(f"e_n -> 0 for {dom}")
            else:
                parts.append(
                    f"e_n -> ({p.weight}) e_[{p.target_start} + {p.target_step}k] for {dom}"
                )
        return "; ".join(parts)


def identity_map_operator(weights: List[Tuple[int, Weight]], tail: Weight, tail_start: int, name="") -> BasisMapOperator:
    """Diagonal basis map: explicit weights below ``tail_start``, ``tail`` after."""
    singles = tuple(Singleton(i, w, None if w.is_zero else i) for i, w in weights)
    piece = Piece(tail_start, 1, tail, None if tail.is_zero else tail_start, None if tail.is_zero else 1)
    return BasisMapOperator(singles, (piece,), name)


Operator = Union[DiagonalOperator, BasisMapOperator]


def as_basis_map(D: DiagonalOperator) -> BasisMapOperator:
    """The diagonal as a basis map on its canonical enumeration."""
    s = D.spectrum
    return weighted_identity(
        [(Weight(p.value), p.multiplicity) for p in s.finite_points],
        [Weight(p.value) for p in s.infinite_points],
        [(Weight(t.value_expr), t.start) for t in s.tails],
        D.name,
    )


def weighted_identity(finite, infinite, tails, name="") -> BasisMapOperator:
    """Diagonal basis map laid out like a spectrum description.

    ``finite``: (weight, multiplicity) pairs; ``infinite``: constant weights of
    infinite blocks; ``tails``: (weight in the tail variable, start) pairs.
    Positions follow the canonical enumeration: finite entries first, then
    round-robin over tails and infinite blocks.
    """
    blocks = len(tails) + len(infinite)
    if blocks == 0:
        raise InvalidOperator("basis maps need an infinite-dimensional space")
    singles = []
    pos = 1
    for w, mult in finite:
        for _ in range(mult):
            singles.append(Singleton(pos, w, None if w.is_zero else pos))
            pos += 1
    f = pos - 1
    pieces = []
    for r, (w, tail_start) in enumerate(tails):
        start = f + r + 1
        index_expr = xr.Add(xr.real(tail_start), xr.Div(xr.Sub(N, xr.real(start)), xr.real(blocks)))
        w = w.compose(index_expr)
        if w.is_zero:
            pieces.append(Piece(start, blocks, Weight(ZERO)))
        else:
            pieces.append(Piece(start, blocks, w, start, blocks))
    for j, w in enumerate(infinite):
        start = f + len(tails) + j + 1
        if w.is_zero:
            pieces.append(Piece(start, blocks, Weight(ZERO)))
        else:
            pieces.append(Piece(start, blocks, w, start, blocks))
    return BasisMapOperator(tuple(singles), tuple(pieces), name)


# ---------------------------------------------------------------------------
# Adjoint
# ---------------------------------------------------------------------------


def adjoint(T: Operator) -> Operator:
    """``T* e_phi(n) = conj(w_n) e_n``; vectors outside the range of phi go to 0."""
    if isinstance(T, DiagonalOperator):
        return T
    singles = []
    pieces = []
    hit = set()
    for s in T.singletons:
        if not s.weight.is_zero:
            singles.append(Singleton(s.target, s.weight.conj(), s.index))
            hit.add(s.target)
    live = [p for p in T.pieces if not p.is_kernel]
    for p in live:
        # domain index n = start + step * (m - target_start) / target_step
        index_expr = xr.Add(
            xr.real(p.start),
            xr.Div(xr.Mul(xr.real(p.step), xr.Sub(N, xr.real(p.target_start))), xr.real(p.target_step)),
        )
        pieces.append(Piece(p.target_start, p.target_step, p.weight.conj().compose(index_expr), p.start, p.step))

    def in_range(m):
        return m in hit or any(p.hits(m) for p in live)

    horizon = max([s.target for s in T.singletons if not s.weight.is_zero] + [p.target_start for p in live] + [0])
    period = _lcm(p.target_step for p in live) if live else 1
    for m in range(1, horizon + 1):
        if not in_range(m):
            singles.append(Singleton(m, Weight(ZERO), None))
    for m in range(horizon + 1, horizon + period + 1):
        if not in_range(m):
            pieces.append(Piece(m, period, Weight(ZERO)))
    return BasisMapOperator(tuple(singles), tuple(pieces), _adjoint_name(T.name))


def _adjoint_name(name: str) -> str:
    if not name:
        return ""
    return name[:-1] if name.endswith("*") else name + "*"


# ---------------------------------------------------------------------------
# Modulus, Gram, square root
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _AbsTail:
    tail: TailSequence
    sign: Optional[int]  # +1/-1 for real weights, None for complex


def _abs_tail(weight: Weight, var: ExactReal, start: int, n_check: int) -> _AbsTail:
    w = weight.compose(var)
    if w.is_real:
        t = sp.infer_tail(w.re, start, n_check)
        if t.monotonicity is Monotonicity.CONSTANT:
            sgn = -1 if xr.sign(t.limit) is LT else 1
        elif t.monotonicity is Monotonicity.INCREASING:
            if xr.sign(t.first) is not LT:
                sgn = 1
            elif xr.sign(t.limit) is not GT:
                sgn = -1
            else:
                raise InvalidOperator(f"weight {w.re} changes sign; split the piece at the crossing")
        else:
            if xr.sign(t.limit) is not LT:
                sgn = 1
            elif xr.sign(t.first) is not GT:
                sgn = -1
            else:
                raise InvalidOperator(f"weight {w.re} changes sign; split the piece at the crossing")
        return _AbsTail(_scale_tail(t, sgn), sgn)
    expr = xr.Sqrt(w.modulus_squared())
    return _AbsTail(sp.infer_tail(expr, start, n_check), None)


def _flip(m: Monotonicity) -> Monotonicity:
    return {
        Monotonicity.INCREASING: Monotonicity.DECREASING,
        Monotonicity.DECREASING: Monotonicity.INCREASING,
        Monotonicity.CONSTANT: Monotonicity.CONSTANT,
    }[m]


def _scale_tail(t: TailSequence, sgn: int) -> TailSequence:
    if sgn == 1:
        return t
    return TailSequence(
        xr.simplify(xr.Neg(t.value_expr)), t.start, _flip(t.monotonicity), xr.simplify(xr.Neg(t.limit))
    )


def _abs_closed(v: ExactReal) -> ExactReal:
    return xr.simplify(xr.Neg(v)) if xr.sign(v) is LT else v


def _closed_modulus(w: Weight) -> ExactReal:
    if w.is_real:
        return _abs_closed(w.re)
    return xr.simplify(xr.Sqrt(w.modulus_squared()))


@dataclass(frozen=True)
class ModulusView:
    """|T| as a diagonal, with the map from its indices back to T's domain."""

    diagonal: DiagonalOperator
    to_domain: Callable[[Index], int]
    signs: Tuple[Optional[int], ...] = ()


def modulus_view(T: Operator, n_check: int = DEFAULT_NCHECK) -> ModulusView:
    if isinstance(T, DiagonalOperator):
        s, origin = abs_spectrum(T.spectrum)
        return ModulusView(DiagonalOperator(s, _mod_name(T.name)), lambda idx: T.spectrum.position(origin(idx)))
    points = tuple(SpectralPoint(_closed_modulus(s.weight), 1) for s in T.singletons)
    tails = []
    signs = []
    for p in T.pieces:
        var, start = p.diag_variable()
        at = _abs_tail(p.weight, var, start, n_check)
        tails.append(at.tail)
        signs.append(at.sign)
    spec = SpectrumDescription(points, (), tuple(tails), True)
    singles, pieces = T.singletons, T.pieces

    def to_domain(idx: Index) -> int:
        if idx.block == "finite":
            return singles[idx.block_id].index
        if idx.block == "tail":
            return pieces[idx.block_id].domain_of_tail_index(idx.pos)
        raise ValueError(idx)

    return ModulusView(DiagonalOperator(spec, _mod_name(T.name)), to_domain, tuple(signs))


def _mod_name(name: str) -> str:
    return f"|{name}|" if name else ""


def modulus(T: Operator, n_check: int = DEFAULT_NCHECK) -> DiagonalOperator:
    """|T| = (T*T)^(1/2) as a positive diagonal operator."""
    return modulus_view(T, n_check).diagonal


def abs_spectrum(s: SpectrumDescription):
    """Entrywise absolute value.  Returns (spectrum, origin) where origin maps
    indices of the result back to indices of ``s``.

    Tails that cross zero are split: the finitely many terms before the
    crossing become finite points.
    """
    if s.is_positive():
        return s if s.positivity_flag else SpectrumDescription(s.finite_points, s.infinite_points, s.tails, True), (lambda idx: idx)
    finite = [SpectralPoint(_abs_closed(p.value), p.multiplicity) for p in s.finite_points]
    origin_finite = [("finite", i, None) for i in range(len(s.finite_points))]
    infinite = [SpectralPoint(_abs_closed(p.value), p.multiplicity) for p in s.infinite_points]
    tails = []
    origin_tails = []
    for i, t in enumerate(s.tails):
        first_sign = xr.sign(t.first)
        lim_sign = xr.sign(t.limit)
        if t.monotonicity is Monotonicity.CONSTANT:
            tails.append(_scale_tail(t, -1 if lim_sign is LT else 1))
            origin_tails.append(i)
            continue
        inc = t.monotonicity is Monotonicity.INCREASING
        # sign on the far part of the tail
        far = 1 if (lim_sign is GT or (lim_sign is EQ and not inc)) else -1
        near = 1 if first_sign is not LT else -1
        if near == far or (first_sign is EQ):
            tails.append(_scale_tail(t, far))
            origin_tails.append(i)
            continue
        # first index whose sign equals the far sign
        n = t.start
        while True:
            v = t.at(n)
            c = xr.sign(v)
            if (far == 1 and c is not LT) or (far == -1 and c is not GT):
                break
            finite.append(SpectralPoint(_abs_closed(v), 1))
            origin_finite.append(("tail", i, n))
            n += 1
            if n - t.start > 1 << 20:
                raise InvalidOperator("sign change too far into the tail")
        tails.append(_scale_tail(t.shifted(n), far))
        origin_tails.append(i)
    out = SpectrumDescription(tuple(finite), tuple(infinite), tuple(tails), True)

    def origin(idx: Index) -> Index:
        if idx.block == "finite":
            block, bid, pos = origin_finite[idx.block_id]
            return Index(block, bid, idx.pos if pos is None else pos)
        if idx.block == "tail":
            return Index("tail", origin_tails[idx.block_id], idx.pos)
        return idx

    return out, origin


def gram(T: Operator, n_check: int = DEFAULT_NCHECK) -> DiagonalOperator:
    """T*T as a diagonal: entries |w_n|^2, computed from the weights directly."""
    if isinstance(T, DiagonalOperator):
        s, _ = abs_spectrum(T.spectrum)
        return DiagonalOperator(_square_spectrum(s), f"{T.name}*{T.name}" if T.name else "")
    points = tuple(SpectralPoint(xr.simplify(s.weight.modulus_squared()), 1) for s in T.singletons)
    tails = []
    for p in T.pieces:
        var, start = p.diag_variable()
        tails.append(sp.infer_tail(p.weight.compose(var).modulus_squared(), start, n_check))
    name = f"{T.name}*{T.name}" if T.name else ""
    return DiagonalOperator(SpectrumDescription(points, (), tuple(tails), True), name)


def _square_spectrum(s: SpectrumDescription) -> SpectrumDescription:
    def tail_fn(t: TailSequence) -> TailSequence:
        sq = lambda e: xr.simplify(xr.Mul(e, e))
        return TailSequence(sq(t.value_expr), t.start, t.monotonicity, sq(t.limit))

    return sp.map_values(s, lambda v: xr.Mul(v, v), tail_fn, True)


def sqrt_positive(D: DiagonalOperator) -> DiagonalOperator:
    """Unique positive square root, entrywise."""
    bad = D.spectrum.first_negative()
    if bad is not None:
        raise NotPositive(f"entry {D.spectrum.value_at(bad)} at {bad} is negative")

    def tail_fn(t: TailSequence) -> TailSequence:
        return TailSequence(
            xr.simplify(xr.Sqrt(t.value_expr)), t.start, t.monotonicity, xr.simplify(xr.Sqrt(t.limit))
        )

    s = sp.map_values(D.spectrum, xr.Sqrt, tail_fn, True)
    return DiagonalOperator(s, f"sqrt({D.name})" if D.name else "")


# ---------------------------------------------------------------------------
# Sums and restrictions
# ---------------------------------------------------------------------------

_SUM_RULE = {
    (Monotonicity.INCREASING, Monotonicity.INCREASING): Monotonicity.INCREASING,
    (Monotonicity.INCREASING, Monotonicity.CONSTANT): Monotonicity.INCREASING,
    (Monotonicity.CONSTANT, Monotonicity.INCREASING): Monotonicity.INCREASING,
    (Monotonicity.DECREASING, Monotonicity.DECREASING): Monotonicity.DECREASING,
    (Monotonicity.DECREASING, Monotonicity.CONSTANT): Monotonicity.DECREASING,
    (Monotonicity.CONSTANT, Monotonicity.DECREASING): Monotonicity.DECREASING,
    (Monotonicity.CONSTANT, Monotonicity.CONSTANT): Monotonicity.CONSTANT,
}


def _sum_tail(a: TailSequence, b: TailSequence, n_check: int) -> TailSequence:
    expr = xr.simplify(xr.Add(a.value_expr, b.value_expr))
    lim = xr.simplify(xr.Add(a.limit, b.limit))
    mono = _SUM_RULE.get((a.monotonicity, b.monotonicity))
    if mono is not None and not expr.is_closed:
        return TailSequence(expr, a.start, mono, lim)
    return sp.infer_tail(expr, a.start, n_check, limit=lim)


def add_diagonal(A: DiagonalOperator, B: DiagonalOperator, n_check: int = DEFAULT_NCHECK) -> DiagonalOperator:
    """Entrywise sum of two diagonals declared over the same index model."""
    sa, sb = A.spectrum, B.spectrum
    if not sp.same_layout(sa, sb):
        raise MisalignedIndexModels("operands index their eigenvalues differently")

    def add_points(ps, qs):
        return tuple(SpectralPoint(xr.simplify(xr.Add(p.value, q.value)), p.multiplicity) for p, q in zip(ps, qs))

    s = SpectrumDescription(
        add_points(sa.finite_points, sb.finite_points),
        add_points(sa.infinite_points, sb.infinite_points),
        tuple(_sum_tail(a, b, n_check) for a, b in zip(sa.tails, sb.tails)),
    )
    s = SpectrumDescription(s.finite_points, s.infinite_points, s.tails, s.is_positive())
    name = f"{A.name} + {B.name}" if A.name and B.name else ""
    return DiagonalOperator(s, name)


def add_basis_maps(A: BasisMapOperator, B: BasisMapOperator) -> BasisMapOperator:
    """Sum of two basis maps with identical geometry (same map, same pieces)."""
    if [(s.index, s.target) for s in A.singletons] != [(s.index, s.target) for s in B.singletons]:
        raise MisalignedIndexModels("singleton layouts differ")
    geo = lambda p: (p.start, p.step, p.target_start, p.target_step)
    if [geo(p) for p in A.pieces] != [geo(p) for p in B.pieces]:
        raise MisalignedIndexModels("piece layouts differ")

    def add_w(u: Weight, v: Weight) -> Weight:
        return Weight(xr.simplify(xr.Add(u.re, v.re)), xr.simplify(xr.Add(u.im, v.im)))

    singles = tuple(Singleton(a.index, add_w(a.weight, b.weight), a.target) for a, b in zip(A.singletons, B.singletons))
    pieces = tuple(
        Piece(a.start, a.step, add_w(a.weight, b.weight), a.target_start, a.target_step)
        for a, b in zip(A.pieces, B.pieces)
    )
    name = f"{A.name} + {B.name}" if A.name and B.name else ""
    return BasisMapOperator(singles, pieces, name)


def restrict(T: DiagonalOperator, sel: IndexSelection) -> DiagonalOperator:
    """Compression of a diagonal to a basis-aligned subspace."""
    s = sp.restrict_spectrum(T.spectrum, sel)
    return DiagonalOperator(s, T.name)


def operator_norm(T: Operator, n_check: int = DEFAULT_NCHECK) -> sp.Extremum:
    """Supremum of the entry moduli, and whether a basis vector attains it."""
    return sp.supremum(modulus(T, n_check).spectrum)


# ---------------------------------------------------------------------------
# Polar form
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolarForm:
    isometry_part: BasisMapOperator
    modulus_part: DiagonalOperator
    to_domain: Callable[[Index], int] = field(repr=False, compare=False, default=None)


def _unit(w: Weight, abs_expr: ExactReal) -> Weight:
    return Weight(xr.simplify(xr.Div(w.re, abs_expr)), xr.simplify(xr.Div(w.im, abs_expr)))


def polar(T: BasisMapOperator, n_check: int = DEFAULT_NCHECK) -> PolarForm:
    """T = V|T| with V a partial isometry and N(V) = N(|T|)."""
    view = modulus_view(T, n_check)
    singles = []
    for s in T.singletons:
        m = _closed_modulus(s.weight)
        if xr.is_zero(m):
            singles.append(Singleton(s.index, Weight(ZERO), None))
        else:
            singles.append(Singleton(s.index, _unit(s.weight, m), s.target))
    pieces = []
    for p, tail, sgn in zip(T.pieces, view.diagonal.spectrum.tails, view.signs):
        if p.is_kernel or (tail.monotonicity is Monotonicity.CONSTANT and xr.is_zero(tail.limit)):
            pieces.append(Piece(p.start, p.step, Weight(ZERO)))
            continue
        if sgn is not None:
            unit = Weight(xr.real(sgn))
        else:
            unit = _unit(p.weight, xr.simplify(xr.Sqrt(p.weight.modulus_squared())))
        if xr.is_zero(tail.first):
            # an increasing modulus starting at 0: the first vector is in the kernel
            singles.append(Singleton(p.start, Weight(ZERO), None))
            p = Piece(p.start + p.step, p.step, p.weight, p.target_start + p.target_step, p.target_step)
        pieces.append(Piece(p.start, p.step, unit, p.target_start, p.target_step))
    V = BasisMapOperator(tuple(singles), tuple(pieces), f"V_{T.name}" if T.name else "V")
    return PolarForm(V, view.diagonal, view.to_domain)
