from __future__ import annotations

import csv
import io
import json
import math

import pytest

from superhedge.cli import main
from superhedge.corpus import build_corpus, write_corpus
from superhedge.errors import FormatError
from superhedge.market import load_market, save_market, tree_from_children
from superhedge.report import RunReport, format_number, table_to_csv


@pytest.fixture
def files(tmp_path, call_tree, binomial2):
    paths = {}
    for name, tree in (("call", call_tree), ("binomial", binomial2),
                       ("ip", tree_from_children([80.0], [[90.0], [120.0]]))):
        paths[name] = tmp_path / f"{name}.json"
        save_market(tree, paths[name])
    paths["bad"] = tmp_path / "bad.json"
    paths["bad"].write_text('{"dim": 1, "horizon": 1, "nodes": [{"id": "r"}]}', encoding="utf-8")
    return paths


def _run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out.out, out.err


# -- check ------------------------------------------------------------------

def test_check_exit_codes(files, capsys):
    assert _run(capsys, "check", files["binomial"])[0] == 0
    code, out, _ = _run(capsys, "check", files["ip"])
    assert code == 2 and "root" in out
    code, _, err = _run(capsys, "check", files["bad"])
    assert code == 1 and "missing key" in err
    assert _run(capsys, "check", files["bad"].with_name("nope.json"))[0] == 1


def test_check_report(files, capsys):
    code, out, _ = _run(capsys, "check", files["ip"], "--per-node", "--awip", "--report", "-")
    assert code == 2
    report = RunReport.from_json(out)
    assert report.result["failing"] == ["root"]
    assert report.result["awip_global"] is False
    assert report.certificates[0]["node"] == "root"
    assert report.certificates[0]["kind"] == "separating-slope"
    assert report.verdicts[0]["na"] is False


def test_check_awip_certificate(tmp_path, capsys):
    path = tmp_path / "atom.json"
    save_market(tree_from_children([1.0], [[1.0], [2.0]]), path)
    code, out, _ = _run(capsys, "check", path, "--awip", "--per-node", "--report", "-")
    report = RunReport.from_json(out)
    assert code == 0
    assert report.result["awip"] == {"0": True} and report.result["na"] is False
    weights = [c for c in report.certificates if c["kind"] == "martingale-weights"][0]["weights"]
    assert weights["c0"] == pytest.approx(1.0)


def test_usage_errors_exit_one(capsys):
    assert _run(capsys, "frobnicate")[0] == 1
    assert _run(capsys)[0] == 1
    assert _run(capsys, "binomial", "call:100", "--s0", "100")[0] == 1


# -- price ------------------------------------------------------------------

def test_price_call(files, capsys):
    code, out, _ = _run(capsys, "price", files["call"], "call:100", "--hedge")
    assert code == 0
    assert "value: 10" in out and "hedge: 0.5" in out


def test_price_ip_tree_prints_minus_inf(files, capsys, tmp_path):
    code, out, _ = _run(capsys, "price", files["ip"], "call:100")
    assert code == 2 and "value: -inf" in out and "strategy: 1" in out
    rpath = tmp_path / "r.json"
    _run(capsys, "price", files["ip"], "call:100", "--report", rpath)
    text = rpath.read_text(encoding="utf-8")
    assert '"value": "-inf"' in text
    assert RunReport.from_json(text).result["value"] == -math.inf


def test_price_affine_payoff(files, capsys):
    code, out, _ = _run(capsys, "price", files["call"], "pwl:0,10;100,60")
    assert code == 0 and "value: 60" in out


def test_price_grammar_error(files, capsys):
    code, _, err = _run(capsys, "price", files["call"], "call:")
    assert code == 1 and "payoff" in err


def test_price_surface_csv(files, capsys, tmp_path):
    surface = tmp_path / "s.csv"
    _run(capsys, "price", files["binomial"], "call:100", "--surface", surface)
    rows = list(csv.DictReader(io.StringIO(surface.read_text(encoding="utf-8"))))
    assert list(rows[0]) == ["time", "node", "value", "theta_1"]
    assert len(rows) == 7
    assert float(rows[0]["value"]) == pytest.approx(5.25)
    assert rows[-1]["theta_1"] == ""


def test_price_oracle_on_shipped_corpus(corpus_dir, capsys, tmp_path):
    for path in sorted(corpus_dir.glob("*.json")):
        tree = load_market(path)
        payoff = "call:100" if tree.dim == 1 else "call:100@1"
        rpath = tmp_path / "r.json"
        code = main(["price", str(path), payoff, "--oracle", "--report", str(rpath)])
        capsys.readouterr()
        assert code in (0, 2)
        report = RunReport.from_json(rpath.read_text(encoding="utf-8"))
        assert report.result["oracle"]["max_deviation"] <= 1e-8, path.name


def test_shipped_corpus_is_current(corpus_dir, tmp_path):
    write_corpus(tmp_path)
    for fresh in tmp_path.iterdir():
        assert (corpus_dir / fresh.name).read_text(encoding="utf-8") == fresh.read_text(encoding="utf-8")
    assert {p.stem for p in corpus_dir.glob("*.json")} == set(build_corpus())


# -- oracle -------------------------------------------------------------------

def test_oracle_command(files, capsys):
    code, out, _ = _run(capsys, "oracle", files["binomial"], "call:100", "--report", "-")
    report = RunReport.from_json(out)
    assert code == 0
    assert report.result["oracle"] == pytest.approx(5.25)
    assert report.result["deviation"] <= 1e-8
    assert all(v["agree"] for v in report.verdicts)
    assert report.result["awip_oracle"] == {"0": True, "1": True}
    assert _run(capsys, "oracle", files["binomial"], "call:100", "--node", "zz")[0] == 1


# -- binomial -----------------------------------------------------------------

def test_binomial_table(capsys):
    code, out, _ = _run(capsys, "binomial", "call:100", "--s0", "100", "--kd", "0.9", "--ku", "1.2", "--steps", "1")
    assert code == 0
    rows = list(csv.DictReader(io.StringIO(out)))
    assert float(rows[0]["value"]) == pytest.approx(20 / 3)
    code, out, _ = _run(capsys, "binomial", "call:90", "--s0", "100", "--kd", "1", "--ku", "1", "--steps", "3")
    assert float(next(csv.DictReader(io.StringIO(out)))["value"]) == 10.0


def test_binomial_ip_and_bad_payoff(capsys):
    assert _run(capsys, "binomial", "call:100", "--s0", "100", "--kd", "1.1", "--ku", "1.2", "--steps", "2")[0] == 2
    assert _run(capsys, "binomial", "call:100", "--s0", "100", "--kd", "0.9", "--ku", "0.95", "--steps", "2")[0] == 2
    assert _run(capsys, "binomial", "pwl:0,0;1,5;2,6", "--s0", "1", "--kd", "0.9", "--ku", "1.1", "--steps", "2")[0] == 1


def test_binomial_multipliers_file(tmp_path, capsys):
    m = tmp_path / "m.csv"
    m.write_text("kd,ku\n0.9,1.1\n0.8,inf\n", encoding="utf-8")
    out_path = tmp_path / "v.csv"
    code, out, _ = _run(capsys, "binomial", "put:100", "--s0", "100", "--multipliers", m, "--output", out_path)
    assert code == 0 and out.startswith("value: ")
    assert out_path.read_text(encoding="utf-8").startswith("time,state,price,value,theta")


# -- calibrate -------------------------------------------------------------------

def test_calibrate(tmp_path, capsys):
    series = tmp_path / "s.csv"
    series.write_text("date,price\nd1,100\nd2,110\nd3,99\n", encoding="utf-8")
    tree_path = tmp_path / "t.json"
    code, out, _ = _run(capsys, "calibrate", series, "--window", "2", "--emit-tree", "2", "--output", tree_path)
    assert code == 0
    row = next(csv.DictReader(io.StringIO(out)))
    assert float(row["kd"]) == pytest.approx(0.9) and float(row["ku"]) == pytest.approx(1.1)
    tree = load_market(tree_path)
    assert tree.horizon == 2 and tree.price("r")[0] == 99.0


def test_calibrate_errors(tmp_path, capsys):
    series = tmp_path / "s.csv"
    series.write_text("date,price\nd1,100\nd2,x\n", encoding="utf-8")
    assert _run(capsys, "calibrate", series, "--window", "1")[0] == 1
    series.write_text("date,price\nd1,1\nd2,2\nd3,3\n", encoding="utf-8")
    assert _run(capsys, "calibrate", series, "--window", "1")[0] == 2
    assert _run(capsys, "calibrate", series, "--window", "1", "--emit-tree", "2")[0] == 1


# -- report ----------------------------------------------------------------------

def test_report_round_trip():
    r = RunReport(command=["price", "x.json"], market={"nodes": 3},
                  result={"value": -math.inf, "hedge": [0.5], "node": "inf", "ok": True},
                  surface=[{"time": 0, "node": "r", "value": 1.25, "theta": None}],
                  timing={"seconds": 0.1})
    text = r.to_json()
    assert RunReport.from_json(text) == r
    assert RunReport.from_json(text).to_json() == text
    assert list(json.loads(text)) == ["schema_version", "command", "market", "result", "verdicts",
                                      "surface", "certificates", "timing"]


def test_report_rejects_bad_documents():
    good = json.loads(RunReport(command=[]).to_json())
    with pytest.raises(FormatError):
        RunReport.from_json("[")
    with pytest.raises(FormatError):
        RunReport.from_dict({**good, "schema_version": 99})
    with pytest.raises(FormatError):
        RunReport.from_dict({k: v for k, v in good.items() if k != "timing"})
    with pytest.raises(FormatError):
        RunReport.from_dict({**good, "extra": 1})


def test_number_formatting():
    assert format_number(-math.inf) == "-inf"
    assert format_number(0.1) == "0.10000000000000001"
    assert table_to_csv(["a", "b"], [(1.5, None), (-math.inf, math.nan)]) == "a,b\n1.5,\n-inf,\n"
