"""Operator files: one JSON document per operator, every scalar an expression string.

Diagonal::

    {"name": "T", "kind": "diagonal", "scalar": "real",
     "spectrum": {"points": [{"value": "2", "multiplicity": 1},
                             {"value": "1", "multiplicity": "inf"}],
                  "tails": [{"expr": "1 - 1/n", "start": 2,
                             "monotonicity": "increasing", "limit": "1"}]}}

``monotonicity`` and ``limit`` are optional; missing metadata is inferred and
everything is checked on the first ``n_check`` terms.  A complex diagonal
(``"scalar": "complex"``, with ``value_im``/``expr_im``) has no spectrum
description of its own and loads as a diagonal basis map.

Basis map::

    {"name": "S", "kind": "basis_map", "scalar": "real",
     "entries": [{"index": 1, "weight": "0"}],
     "pieces": [{"start": 2, "step": 1, "target_start": 1, "target_step": 1,
                 "weight": "1/(n - 1)"}]}

Weights of pieces are expressions in the domain index ``n``.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Dict, Union

from . import exactreal as xr
from . import spectra as sp
from .errors import InvalidOperator, ParseError
from .exactreal import ZERO, ExactReal
from .operators import (
    BasisMapOperator,
    DiagonalOperator,
    Operator,
    Piece,
    Singleton,
    Weight,
    weighted_identity,
)
from .spectra import DEFAULT_NCHECK, Monotonicity, SpectralPoint, SpectrumDescription, TailSequence


def _expr(value, where: str) -> ExactReal:
    if isinstance(value, bool):
        raise ParseError(f"{where}: expected an expression, got a boolean", where)
    if isinstance(value, int):
        return xr.real(value)
    if not isinstance(value, str):
        raise ParseError(f"{where}: expected an expression string", where)
    try:
        return xr.parse_real(value)
    except ParseError as exc:
        raise ParseError(f"{where}: {exc.detail}", f"{where}@{exc.position}") from exc


def _closed(value, where: str) -> ExactReal:
    e = _expr(value, where)
    if not e.is_closed:
        raise ParseError(f"{where}: must not depend on n", where)
    return e


def _int(d: Dict, key: str, where: str, default=None) -> int:
    v = d.get(key, default)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ParseError(f"{where}.{key}: expected an integer", f"{where}.{key}")
    return v


def _multiplicity(v, where: str):
    if v in ("inf", "infinite", "infinity"):
        return sp.INFINITE
    if isinstance(v, bool) or not isinstance(v, int) or v < 1:
        raise ParseError(f"{where}: multiplicity must be a positive integer or \"inf\"", where)
    return v


def _tail(d: Dict, where: str, n_check: int) -> TailSequence:
    expr = _expr(d.get("expr"), f"{where}.expr")
    start = _int(d, "start", where, 1)
    limit = _closed(d["limit"], f"{where}.limit") if "limit" in d else None
    mono = d.get("monotonicity")
    if mono is not None:
        try:
            mono = Monotonicity(mono)
        except ValueError:
            raise ParseError(f"{where}.monotonicity: unknown value {mono!r}", f"{where}.monotonicity")
    if mono is not None and limit is not None:
        t = TailSequence(expr, start, mono, limit)
        sp.validate_tail(t, n_check)
        return t
    t = sp.infer_tail(expr, start, n_check, limit)
    if mono is not None and mono is not t.monotonicity:
        raise InvalidOperator(f"{where}: declared {mono.value} but the sequence is {t.monotonicity.value}")
    return t


def _weight(d: Dict, key: str, where: str) -> Weight:
    re = _expr(d.get(key, "0"), f"{where}.{key}")
    im = _expr(d[key + "_im"], f"{where}.{key}_im") if key + "_im" in d else ZERO
    return Weight(xr.simplify(re), xr.simplify(im))


def _diagonal(doc: Dict, name: str, n_check: int) -> Operator:
    spec = doc.get("spectrum")
    if not isinstance(spec, dict):
        raise ParseError("diagonal operators need a \"spectrum\" object", "spectrum")
    points = spec.get("points", [])
    tails = spec.get("tails", [])
    if doc.get("scalar", "real") == "complex":
        finite, infinite, tail_weights = [], [], []
        for i, p in enumerate(points):
            w = _weight(p, "value", f"spectrum.points[{i}]")
            if not w.is_closed:
                raise ParseError(f"spectrum.points[{i}]: must not depend on n", f"spectrum.points[{i}]")
            mult = _multiplicity(p.get("multiplicity", 1), f"spectrum.points[{i}].multiplicity")
            (infinite.append(w) if mult == sp.INFINITE else finite.append((w, mult)))
        for i, t in enumerate(tails):
            where = f"spectrum.tails[{i}]"
            tail_weights.append((_weight(t, "expr", where), _int(t, "start", where, 1)))
        return weighted_identity(finite, infinite, tail_weights, name)
    fin, inf = [], []
    for i, p in enumerate(points):
        where = f"spectrum.points[{i}]"
        value = xr.simplify(_closed(p.get("value"), f"{where}.value"))
        mult = _multiplicity(p.get("multiplicity", 1), f"{where}.multiplicity")
        (inf if mult == sp.INFINITE else fin).append(SpectralPoint(value, mult))
    tl = [_tail(t, f"spectrum.tails[{i}]", n_check) for i, t in enumerate(tails)]
    s = SpectrumDescription(tuple(fin), tuple(inf), tuple(tl))
    return DiagonalOperator(SpectrumDescription(s.finite_points, s.infinite_points, s.tails, s.is_positive()), name)


def _basis_map(doc: Dict, name: str) -> BasisMapOperator:
    singles = []
    for i, e in enumerate(doc.get("entries", [])):
        where = f"entries[{i}]"
        w = _weight(e, "weight", where)
        if not w.is_closed:
            raise ParseError(f"{where}.weight: must not depend on n", where)
        target = None if w.is_zero else _int(e, "target", where)
        singles.append(Singleton(_int(e, "index", where), w, target))
    pieces = []
    for i, p in enumerate(doc.get("pieces", [])):
        where = f"pieces[{i}]"
        w = _weight(p, "weight", where)
        if w.is_zero:
            pieces.append(Piece(_int(p, "start", where), _int(p, "step", where, 1), Weight(ZERO)))
        else:
            pieces.append(
                Piece(
                    _int(p, "start", where),
                    _int(p, "step", where, 1),
                    w,
                    _int(p, "target_start", where),
                    _int(p, "target_step", where, 1),
                )
            )
    return BasisMapOperator(tuple(singles), tuple(pieces), name)


def operator_from_dict(doc: Dict[str, Any], n_check: int = DEFAULT_NCHECK) -> Operator:
    if not isinstance(doc, dict):
        raise ParseError("an operator file holds a single JSON object", 0)
    name = doc.get("name", "")
    kind = doc.get("kind")
    if kind == "diagonal":
        return _diagonal(doc, name, n_check)
    if kind == "basis_map":
        return _basis_map(doc, name)
    raise ParseError(f"unknown kind {kind!r}", "kind")


def parse_operator(text: str, n_check: int = DEFAULT_NCHECK) -> Operator:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON: {exc.msg}", exc.pos) from exc
    return operator_from_dict(doc, n_check)


def load_operator(path: Union[str, Path], n_check: int = DEFAULT_NCHECK) -> Operator:
    return parse_operator(Path(path).read_text(), n_check)


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------


def spectrum_to_dict(s: SpectrumDescription) -> Dict[str, Any]:
    points = [{"value": str(p.value), "multiplicity": p.multiplicity} for p in s.finite_points]
    points += [{"value": str(p.value), "multiplicity": "inf"} for p in s.infinite_points]
    tails = [
        {"expr": str(t.value_expr), "start": t.start, "monotonicity": t.monotonicity.value, "limit": str(t.limit)}
        for t in s.tails
    ]
    return {"points": points, "tails": tails}


def diagonal_to_dict(D: DiagonalOperator) -> Dict[str, Any]:
    return {"name": D.name, "kind": "diagonal", "scalar": "real", "spectrum": spectrum_to_dict(D.spectrum)}


def _weight_fields(w: Weight, key: str) -> Dict[str, str]:
    out = {key: str(w.re)}
    if not w.is_real:
        out[key + "_im"] = str(w.im)
    return out


def basis_map_to_dict(T: BasisMapOperator) -> Dict[str, Any]:
    entries = []
    for s in T.singletons:
        e = {"index": s.index, **_weight_fields(s.weight, "weight")}
        if s.target is not None:
            e["target"] = s.target
        entries.append(e)
    pieces = []
    for p in T.pieces:
        d = {"start": p.start, "step": p.step, **_weight_fields(p.weight, "weight")}
        if p.target_start is not None:
            d["target_start"] = p.target_start
            d["target_step"] = p.target_step
        pieces.append(d)
    scalar = "real" if T.is_real else "complex"
    return {"name": T.name, "kind": "basis_map", "scalar": scalar, "entries": entries, "pieces": pieces}


def operator_to_dict(T: Operator) -> Dict[str, Any]:
    if isinstance(T, DiagonalOperator):
        return diagonal_to_dict(T)
    return basis_map_to_dict(T)


def dumps(T: Operator) -> str:
    return json.dumps(operator_to_dict(T), indent=2)
