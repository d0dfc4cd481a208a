import io
import json

import pytest

from amattain import exactreal as xr
from amattain import spectra as sp
from amattain.amclass import synthesize
from amattain.cli import KEYS, run
from amattain.dsl import dumps, load_operator, operator_from_dict, parse_operator
from amattain.errors import ParseError
from amattain.operators import BasisMapOperator, DiagonalOperator


def call(*argv):
    out = io.StringIO()
    code = run(list(argv), stdout=out)
    text = out.getvalue()
    return code, (json.loads(text) if "--json" in argv and text else text)


def test_classify_i_minus_d_plus_p(corpus):
    code, rep = call("classify", str(corpus / "i_minus_d_plus_p.op"), "--json")
    assert code == 0
    assert list(rep) == list(KEYS)
    assert rep["verdict"] == "Member" and rep["alpha"]["expr"] == "1" and rep["type"] == "FirstType"


def test_classify_i_plus_u(corpus):
    code, rep = call("classify", str(corpus / "i_plus_u.op"), "--json")
    assert code == 0 and rep["verdict"] == "NotMember"
    assert rep["certificate"]["kind"] == "DecreasingAccumulation" and rep["certificate"]["on"] == "gram"
    assert rep["certificate"]["limit"]["expr"] == "2"


def test_minmod_backward_shift(corpus):
    code, rep = call("minmod", str(corpus / "backward_shift.op"), "--json")
    assert rep["m"]["expr"] == "0" and rep["attained"] and rep["report"]["witness_index"] == 1


def test_json_k_f_round_trip(corpus):
    for name in ("i_minus_d_plus_p.op", "i_minus_f.op", "identity.op", "projection_finite_kernel.op"):
        path = corpus / name
        _, rep = call("decompose", str(path), "--json")
        K = operator_from_dict({"kind": "diagonal", "spectrum": rep["K"]})
        F = operator_from_dict({"kind": "diagonal", "spectrum": rep["F"]})
        D = synthesize(xr.parse_real(rep["alpha"]["expr"]), K, F)
        assert sp.spectra_equal(D.spectrum, load_operator(path).spectrum)


def test_byte_identical_output(corpus):
    a = call("classify", str(corpus / "two_limit_points.op"), "--json")
    b = call("classify", str(corpus / "two_limit_points.op"), "--json")
    assert json.dumps(a[1]) == json.dumps(b[1])


def test_exit_codes(corpus, tmp_path):
    assert call("classify", str(corpus / "bad_expression.op"))[0] == 2
    assert call("validate", str(corpus / "bad_monotonicity.op"))[0] == 1
    assert call("validate", str(corpus / "identity.op"))[0] == 0
    assert call("decompose", str(corpus / "two_limit_points.op"))[0] == 1
    broken = tmp_path / "broken.op"
    broken.write_text("{not json")
    assert call("minmod", str(broken))[0] == 2
    undecided = tmp_path / "undecided.op"
    undecided.write_text(json.dumps({
        "name": "u", "kind": "diagonal",
        "spectrum": {"points": [{"value": "sqrt(2) + sqrt(3) - sqrt(5 + 2*sqrt(6))"}, {"value": "1", "multiplicity": "inf"}]},
    }))
    assert call("classify", str(undecided))[0] == 3


def test_oracle_and_witness(corpus):
    code, rep = call("oracle", str(corpus / "i_minus_d_plus_p.op"), "--json", "--dims", "4,16,64")
    assert code == 0 and rep["report"]["sigma_min"] == [0.5, 0.5, 0.5] and rep["report"]["converged"]
    code, rep = call("witness", str(corpus / "two_limit_points.op"), "--json", "--depth", "4")
    assert code == 0 and rep["report"]["sigma_min"] == pytest.approx(1.125, abs=1e-10)
    code, _ = call("witness", str(corpus / "identity.op"), "--json")
    assert code == 1


def test_polar_report(corpus):
    code, rep = call("polar", str(corpus / "dilation_v.op"), "--json")
    assert code == 0 and rep["verdict"] == "Member"
    assert rep["report"]["V"]["pieces"][0]["target_step"] == 2


def test_human_output(corpus):
    code, text = call("classify", str(corpus / "identity.op"))
    assert code == 0 and "SecondType" in text and "alpha: 1" in text


def test_every_corpus_file_loads(corpus):
    for path in sorted(corpus.glob("*.op")):
        if path.stem.startswith("bad_"):
            continue
        T = load_operator(path, 64)
        again = parse_operator(dumps(T), 64)
        assert type(again) is type(T)
        if isinstance(T, DiagonalOperator):
            assert sp.spectra_equal(again.spectrum, T.spectrum)


def test_parse_error_positions():
    with pytest.raises(ParseError) as info:
        parse_operator('{"kind": "diagonal", "spectrum": {"tails": [{"expr": "1 +", "start": 1}]}}')
    assert info.value.position.startswith("spectrum.tails[0].expr@")
    with pytest.raises(ParseError) as info:
        parse_operator('{"kind": "diagonal",')
    assert isinstance(info.value.position, int)
    with pytest.raises(ParseError):
        parse_operator('{"kind": "matrix"}')


def test_complex_diagonal_loads_as_basis_map(corpus):
    U = load_operator(corpus / "unitary_u.op")
    assert isinstance(U, BasisMapOperator) and not U.is_real
