import json
from fractions import Fraction as F

import pytest
from click.testing import CliRunner

from ma_lab.cli import main
from ma_lab.exactnum import SqrtSum
from ma_lab.harness import run_ma
from ma_lab.io import DocumentError, dumps, parse_machine, serialize_machine
from ma_lab.zoo import get_construction


@pytest.mark.parametrize("name", ["usquare-mapfa", "usquare-mapostqfa", "subsetsum"])
def test_round_trip(name):
    m = get_construction(name).machine
    doc = serialize_machine(m, "ref")
    back = parse_machine(json.dumps(doc))
    assert serialize_machine(back, "ref") == doc
    assert dumps(back, "ref") == dumps(m, "ref")


def test_round_trip_preserves_runs():
    m = get_construction("usquare-mapostqfa").machine
    back = parse_machine(dumps(m))
    assert run_ma(back, "a", "aa").rej == F(4, 5)
    assert back.labels == m.labels and back.sublinear


def _tiny_pfa_doc(value):
    return {"format": "ma-lab-machine", "version": 1, "kind": "pfa", "postselecting": False, "name": "t",
            "states": 2, "alphabet": ["⌊", "⌋", "¢", "$", "a"], "input_alphabet": ["a"], "cert_alphabet": [],
            "initial": 0, "accepting": [1], "labels": None,
            "matrices": {s: [[0, 0, "1"], [1, 1, "1"]] for s in ["⌊", "⌋", "¢", "$"]}
            | {"a": [[0, 0, value], [1, 1, "1"]]}}


def test_bad_column_sum_names_location():
    parse_machine(_tiny_pfa_doc("1"))
    with pytest.raises(DocumentError, match=r"symbol 'a', column 0: column sum 3/4"):
        parse_machine(_tiny_pfa_doc("3/4"))


def test_sqrt_entries_parse():
    doc = serialize_machine(get_construction("usquare-mapostqfa").machine)
    triples = [t for el in doc["elements"]["a"] for t in el]
    assert "1/3*sqrt(2)" in [t[2] for t in triples]
    one = parse_machine(doc)
    entries = [v for el in one.machine.elements["a"] for col in el for _, v in col]
    assert SqrtSum({2: F(1, 3)}) in entries
    doc["elements"]["a"][1][0][2] = "1/2*sqrt(2)"
    with pytest.raises(DocumentError, match="symbol 'a'"):
        parse_machine(doc)


@pytest.mark.parametrize("doc,msg", [
    ("not json", "not JSON"),
    ("{}", "expected format"),
    (json.dumps({"format": "ma-lab-machine", "version": 1, "kind": "pfa"}), "missing field"),
])
def test_schema_errors(doc, msg):
    with pytest.raises(DocumentError, match=msg):
        parse_machine(doc)


runner = CliRunner()


def test_cli_run():
    out = runner.invoke(main, ["run", "--machine", "usquare-mapfa", "--cert", "aa", "--input", "aaaa"])
    assert out.exit_code == 0
    assert "Acc = 1/2\n" in out.output
    assert "approximate" in out.output


def test_cli_run_prints_library_value():
    out = runner.invoke(main, ["run", "-m", "usquare-mapfa", "-c", "a", "-x", "aaa", "--digits", "0"])
    expected = run_ma(get_construction("usquare-mapfa").machine, "a", "aaa").acc
    assert out.output.splitlines()[0] == f"Acc = {expected.numerator}/{expected.denominator}"
    assert "approximate" not in out.output


def test_cli_run_undefined_postselection(tmp_path):
    doc = _tiny_pfa_doc("1")
    doc["postselecting"] = True
    doc["labels"] = {"accept": [], "reject": [1]}
    path = tmp_path / "m.json"
    path.write_text(json.dumps(doc))
    out = runner.invoke(main, ["run", "-m", str(path), "-x", "a"])
    assert out.exit_code != 0 and "undefined" in out.output


def test_cli_attack_distance():
    out = runner.invoke(main, ["attack", "--machine", "usquare-mapfa", "--input", "aaa", "--max-cert", "6",
                               "--objective", "distance-to-half"])
    assert out.exit_code == 0
    line = [ln for ln in out.output.splitlines() if ln.startswith("distance = ")][0]
    assert F(line.split("= ")[1]) > 0


def test_cli_prove():
    out = runner.invoke(main, ["prove", "-m", "usquare-mapostqfa", "-x", "aaaaaaaaa"])
    assert out.exit_code == 0
    assert "certificate = aaa" in out.output and "Acc = 1\n" in out.output
    out = runner.invoke(main, ["prove", "-m", "usquare-mapostqfa", "-x", "aa"])
    assert out.exit_code == 1


def test_cli_report_pass(tmp_path):
    path = tmp_path / "r.json"
    out = runner.invoke(main, ["report", "--machine", "usquare-mapostqfa", "--claim", "bounded:1/5", "--max-n", "16",
                               "--max-cert", "6", "--out", str(path)])
    assert out.exit_code == 0
    rep = json.loads(path.read_text())
    assert rep["pass"] and rep["counterexamples"] == [] and len(rep["inputs"]) == 17


def test_cli_report_counterexamples_exit_nonzero(tmp_path):
    path = tmp_path / "r.json"
    out = runner.invoke(main, ["report", "-m", "usquare-mapfa", "--claim", "exact", "--max-n", "3", "--max-cert", "2",
                               "--out", str(path)])
    assert out.exit_code == 1
    assert json.loads(path.read_text())["counterexamples"]


def test_cli_zoo(tmp_path):
    out = runner.invoke(main, ["zoo", "list"])
    assert "usquare-mapfa" in out.output.split()
    path = tmp_path / "z.json"
    out = runner.invoke(main, ["zoo", "export", "usquare-mapfa", "--out", str(path)])
    assert out.exit_code == 0
    out = runner.invoke(main, ["run", "-m", str(path), "-c", "aa", "-x", "aaaa"])
    assert "Acc = 1/2" in out.output


def test_cli_unknown_machine():
    out = runner.invoke(main, ["run", "-m", "nosuch", "-x", "a"])
    assert out.exit_code != 0 and "unknown construction" in out.output
