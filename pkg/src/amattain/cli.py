"""Command-line front end: ``amattain <command> FILE [flags]``.

Exit codes: 0 success, 1 negative answer or rejected input, 2 parse error,
3 undecided comparison, 4 internal consistency violation.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Any, Dict, List, Optional

from . import exactreal as xr
from . import spectra as sp
from .amclass import (
    DecreasingAccumulation,
    Member,
    NotMember,
    NotPositiveCertificate,
    classify_AM_general,
    classify_AM_positive,
)
from .dsl import basis_map_to_dict, load_operator, spectrum_to_dict
from .errors import AMError, ConsistencyError, EquivalenceViolation, InvalidOperator, ParseError, TailViolation, Undecided
from .minattain import min_modulus
from .operators import DiagonalOperator, as_basis_map, gram, modulus, polar
from .oracle import DEFAULT_DEPTH, DEFAULT_DIMS, DEFAULT_TOL, certificate_check, convergence_check, to_float

COMMANDS = ("validate", "minmod", "classify", "decompose", "polar", "oracle", "witness")
KEYS = ("name", "command", "verdict", "alpha", "K", "F", "type", "certificate", "m", "attained", "report")
CERT_TERMS = 8

EXIT_OK, EXIT_NO, EXIT_PARSE, EXIT_UNDECIDED, EXIT_CONSISTENCY = 0, 1, 2, 3, 4


def real_json(e: xr.ExactReal) -> Dict[str, Any]:
    return {"expr": str(e), "approx": to_float(e)}


def _index_json(idx: sp.Index) -> Dict[str, Any]:
    return {"block": idx.block, "block_id": idx.block_id, "pos": idx.pos}


def certificate_json(cert, on: str) -> Dict[str, Any]:
    if isinstance(cert, NotPositiveCertificate):
        return {"kind": "NotPositive", "on": on, "witness": _index_json(cert.witness), "value": real_json(cert.value)}
    if isinstance(cert, DecreasingAccumulation):
        return {"kind": "DecreasingAccumulation", "on": on, "tail_id": cert.tail_id, "limit": real_json(cert.limit)}
    t_sq, c = cert.terms(CERT_TERMS)

    def stream(s):
        return {"kind": s.kind, "block_id": s.block_id, "offset": s.offset}

    return {
        "kind": "MixingPair",
        "on": on,
        "a": real_json(cert.a),
        "b": real_json(cert.b),
        "seq_a": stream(cert.seq_a),
        "seq_b": stream(cert.seq_b),
        "t_sq": [real_json(v) for v in t_sq],
        "c": [real_json(v) for v in c],
    }


class _Result(dict):
    def __init__(self, name, command):
        super().__init__((k, None) for k in KEYS)
        self["name"] = name
        self["command"] = command


def _positive_target(T, n_check):
    """The positive diagonal whose AM+ membership decides T, and its label."""
    if isinstance(T, DiagonalOperator) and T.spectrum.is_positive():
        return T, "diagonal"
    return gram(T, n_check), "gram"


def _classify(T, n_check, out: _Result):
    """Fill verdict fields.  Returns (positive diagonal, verdict)."""
    target, on = _positive_target(T, n_check)
    verdict = classify_AM_positive(target)
    if on == "gram":
        # |T| route must agree with the gram route
        general = classify_AM_general(T, n_check).verdict
        if isinstance(general, Member) != isinstance(verdict, Member):
            raise EquivalenceViolation("modulus and gram classifications disagree")
        verdict = general if isinstance(general, Member) else verdict
    if isinstance(verdict, Member):
        d = verdict.decomposition
        out["verdict"] = "Member"
        out["alpha"] = real_json(d.alpha)
        out["K"] = spectrum_to_dict(d.K.spectrum)
        out["F"] = spectrum_to_dict(d.F.spectrum)
        out["type"] = d.type_flag.value
    else:
        out["verdict"] = "NotMember"
        out["certificate"] = certificate_json(verdict.certificate, on)
    return target, verdict


def run(argv: Optional[List[str]] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    args = _parser().parse_args(argv)
    try:
        with xr.precision_budget(args.prec_bits):
            code, out = _dispatch(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except Undecided as exc:
        print(f"undecided: {exc}", file=sys.stderr)
        return EXIT_UNDECIDED
    except ConsistencyError as exc:
        print(f"consistency violation: {exc}", file=sys.stderr)
        return EXIT_CONSISTENCY
    except AMError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NO
    if args.json:
        stdout.write(json.dumps(out, indent=2) + "\n")
    else:
        stdout.write(_human(out) + "\n")
    return code


def _dispatch(args):
    if args.command == "validate":
        return _validate(args)
    T = load_operator(args.file, args.ncheck)
    out = _Result(T.name, args.command)
    cmd = args.command
    code = EXIT_OK
    if cmd == "minmod":
        r = min_modulus(T, args.ncheck)
        out["m"] = real_json(r.value)
        out["attained"] = r.attained
        out["report"] = {"witness_index": r.witness_index}
    elif cmd in ("classify", "decompose"):
        _, verdict = _classify(T, args.ncheck, out)
        if cmd == "decompose" and not isinstance(verdict, Member):
            code = EXIT_NO
    elif cmd == "polar":
        B = as_basis_map(T) if isinstance(T, DiagonalOperator) else T
        _classify(B, args.ncheck, out)
        pf = polar(B, args.ncheck)
        out["report"] = {
            "V": basis_map_to_dict(pf.isometry_part),
            "modulus": spectrum_to_dict(pf.modulus_part.spectrum),
        }
    elif cmd == "oracle":
        D, on = (T, "diagonal") if isinstance(T, DiagonalOperator) else (modulus(T, args.ncheck), "modulus")
        rep = convergence_check(D, args.dims, args.tol)
        r = min_modulus(D, args.ncheck)
        out["m"] = real_json(r.value)
        out["attained"] = r.attained
        out["report"] = {"on": on, **rep.to_dict()}
    elif cmd == "witness":
        target, verdict = _classify(T, args.ncheck, out)
        if isinstance(verdict, NotMember):
            rep = certificate_check(target, verdict.certificate, args.depth)
            out["report"] = rep.to_dict()
        else:
            out["report"] = {"kind": None, "reason": "operator is a member; no refutation exists"}
            code = EXIT_NO
    return code, out


def _validate(args):
    out = _Result(None, "validate")
    try:
        T = load_operator(args.file, args.ncheck)
        out["name"] = T.name
        if isinstance(T, DiagonalOperator):
            sp.validate_spectrum(T.spectrum, args.ncheck)
        else:
            modulus(T, args.ncheck)
    except (TailViolation, InvalidOperator) as exc:
        out["report"] = {"valid": False, "reason": f"{type(exc).__name__}: {exc}"}
        return EXIT_NO, out
    out["report"] = {"valid": True}
    return EXIT_OK, out


def _human(out: Dict[str, Any]) -> str:
    lines = [f"{out['command']}: {out['name'] or '(unnamed)'}"]
    for key in KEYS[2:]:
        value = out[key]
        if value is None:
            continue
        if isinstance(value, dict) and set(value) == {"expr", "approx"}:
            value = f"{value['expr']}  (~{value['approx']:.12g})"
        elif isinstance(value, (dict, list)):
            value = json.dumps(value)
        lines.append(f"  {key}: {value}")
    return "\n".join(lines)


def _dims(text: str):
    try:
        dims = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad dimension list {text!r}")
    if not dims or min(dims) < 1:
        raise argparse.ArgumentTypeError("dimensions must be positive")
    return dims


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="amattain", description="Minimum attainment and AM classification of operators.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("file", help="operator file (JSON)")
    p.add_argument("--json", action="store_true", help="emit the JSON report")
    p.add_argument("--prec-bits", type=int, default=xr.DEFAULT_PRECISION_BITS, help="comparison budget in bits")
    p.add_argument("--ncheck", type=int, default=sp.DEFAULT_NCHECK, help="prefix length for tail validation")
    p.add_argument("--dims", type=_dims, default=list(DEFAULT_DIMS), help="comma-separated truncation sizes")
    p.add_argument("--tol", type=float, default=DEFAULT_TOL)
    p.add_argument("--depth", type=int, default=DEFAULT_DEPTH, help="witness vectors for certificate checks")
    return p


def main(argv: Optional[List[str]] = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
