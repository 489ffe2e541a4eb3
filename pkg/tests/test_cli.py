import json
import subprocess
import sys
from fractions import Fraction

import pytest

from seqbet import io
from seqbet.betting import StrategyTable
from seqbet.cli import main
from seqbet.core import words_of_length

P10 = "0000000000"


def write(path, doc):
    path.write_text(json.dumps(doc))
    return str(path)


def zero_bettor_doc(depth):
    nodes = {"": ("", Fraction(1))}
    for n in range(depth):
        for v in words_of_length(n):
            m = nodes[v][1]
            nodes[v + "0"], nodes[v + "1"] = (v + "0", m), (v + "1", Fraction(0))
    return io.to_json(StrategyTable(nodes))


def no_bettor_doc(depth):
    nodes = {w: (w, Fraction(1, 1 << n)) for n in range(depth + 1)
             for w in words_of_length(n)}
    return io.to_json(StrategyTable(nodes))


@pytest.fixture(scope="module")
def built(tmp_path_factory):
    d = tmp_path_factory.mktemp("worked")
    spec = write(d / "spec.json", {"w0": "", "mass_a0": "1", "mass_b0": "1", "cs": "1/2",
                                   "P": [P10]})
    code = main(["construct", "--input", spec, "--output", str(d / "out")])
    return code, d


def test_construct_worked_spec(built, capsys):
    code, d = built
    assert code == 0
    trace = io.load(d / "out" / "trace.json")
    (sp,) = [s for s in trace.spawns() if s.instance == 0]
    assert sp.m_b / Fraction(1, 1024) == Fraction(17, 2)
    assert (d / "out" / "tree_a.json").exists() and (d / "out" / "tree_b.json").exists()


def test_construct_prints_summary(tmp_path, capsys):
    spec = write(tmp_path / "spec.json", {"P": [P10]})
    assert main(["construct", "--input", spec, "--output", str(tmp_path)]) == 0
    out = capsys.readouterr().out
    assert out.splitlines()[0] == "instance=0 n=1 ltp=1 max_spawn_capital=17/2"


def test_construct_rejects_large_P(tmp_path, capsys):
    spec = write(tmp_path / "spec.json", {"P": ["00000000"]})
    assert main(["construct", "--input", spec, "--output", str(tmp_path)]) == 1
    assert "1/384" in capsys.readouterr().err


def test_construct_empty_P(tmp_path):
    spec = write(tmp_path / "spec.json", {"P": []})
    assert main(["construct", "--input", spec, "--output", str(tmp_path)]) == 0
    assert list(io.load(tmp_path / "trace.json").iterations()) == []


def test_construct_limit_exit(tmp_path):
    spec = write(tmp_path / "spec.json", {"P": ["000000000000", "101010101010"]})
    code = main(["construct", "--input", spec, "--output", str(tmp_path),
                 "--max-iterations", "1"])
    assert code == 3
    assert io.load(tmp_path / "trace.json").complete is False


def test_config_file_and_flag_precedence(tmp_path):
    spec = write(tmp_path / "spec.json", {"P": ["000000000000", "101010101010"]})
    conf = write(tmp_path / "conf.json", {"input": spec, "output": str(tmp_path / "o"),
                                          "max_iterations": 1})
    assert main(["construct", "--config", conf]) == 3
    assert main(["construct", "--config", conf, "--max-iterations", "10"]) == 0


def test_verify_fresh_mutated_missing(built, tmp_path, capsys):
    _, d = built
    trace = str(d / "out" / "trace.json")
    assert main(["verify", "--input", trace, "--output", str(tmp_path / "r.json")]) == 0
    assert json.loads((tmp_path / "r.json").read_text())["ok"] is True
    doc = json.loads(open(trace).read())
    doc["instances"][0]["iterations"][0]["spawns"][0]["m_b"] = "1/4096"
    bad = write(tmp_path / "bad.json", doc)
    capsys.readouterr()
    assert main(["verify", "--input", bad]) == 2
    assert "doubling: fail" in capsys.readouterr().out
    assert main(["verify", "--input", str(tmp_path / "nope.json")]) == 1


def _capitals(path):
    return [s["capital"] for s in json.loads(open(path).read())["steps"]]


def test_play_zero_bettor(tmp_path):
    strat = write(tmp_path / "s.json", zero_bettor_doc(3))
    out = str(tmp_path / "t.json")
    assert main(["play", "--input", strat, "--bits", "000", "--output", out]) == 0
    assert _capitals(out) == ["1/1", "2/1", "4/1", "8/1"]
    assert main(["play", "--input", strat, "--bits", "111", "--output", out]) == 0
    assert _capitals(out) == ["1/1", "0/1", "0/1", "0/1"]
    assert main(["play", "--input", strat, "--bits", "01x"]) == 1


def test_play_constructed_tree_reaches_certified_capital(built, tmp_path):
    _, d = built
    out = str(tmp_path / "t.json")
    bits = P10 + "0" * 30
    assert main(["play", "--input", str(d / "out" / "tree_b.json"), "--bits", bits,
                 "--output", out]) == 0
    steps = json.loads(open(out).read())["steps"]
    assert steps[-1]["capital"] == "17/2"


def test_convert_chain(tmp_path):
    strat = write(tmp_path / "s.json", zero_bettor_doc(2))
    mp = str(tmp_path / "mp.json")
    assert main(["convert", "--input", strat, "--to", "mp", "--depth", "2",
                 "--output", mp]) == 0
    vals = dict(json.loads(open(mp).read())["values"])
    assert vals == {"": "1/1", "0": "2/1", "1": "0/1", "00": "4/1", "01": "0/1",
                    "10": "0/1", "11": "0/1"}
    back = str(tmp_path / "back.json")
    assert main(["convert", "--input", mp, "--output", back]) == 0
    assert io.load(back).capital("1") == 2
    nm = str(tmp_path / "nm.json")
    assert main(["convert", "--input", strat, "--to", "nm", "--output", nm]) == 0
    assert main(["convert", "--input", nm, "--depth", "2", "--output", back]) == 0
    assert io.load(back) == io.load(strat)
    assert main(["convert", "--input", mp, "--to", "nm"]) == 1


def test_mltest_no_bet(tmp_path):
    strat = write(tmp_path / "s.json", no_bettor_doc(4))
    out = str(tmp_path / "m.json")
    assert main(["mltest", "--input", strat, "--levels", "4", "--output", out]) == 0
    assert json.loads(open(out).read())["path"] == ["0", "00", "000", "0000"]
    assert main(["mltest", "--input", strat, "--levels", "5"]) == 1


def test_construct_is_deterministic(tmp_path):
    spec = write(tmp_path / "spec.json", {"P": ["000000000000", "101010101010"]})
    outs = []
    for run in ("a", "b"):
        res = subprocess.run([sys.executable, "-m", "seqbet", "construct", "--input", spec,
                              "--output", str(tmp_path / run)], capture_output=True, text=True)
        assert res.returncode == 0, res.stderr
        files = [(tmp_path / run / f).read_bytes()
                 for f in ("trace.json", "tree_a.json", "tree_b.json")]
        outs.append((res.stdout, files))
    assert outs[0] == outs[1]
