import json
import random
from fractions import Fraction

import pytest

from seqbet import io
from seqbet.betting import NonmonotonicStrategy, random_sequence_set_table
from seqbet.construction import Limits, run_construction
from seqbet.core import ClopenSet
from seqbet.equivalences import mltest_from_strategy, strategy_to_mp
from seqbet.errors import InputError
from seqbet.verify import run_all


def round_trip(obj):
    text = io.dumps(obj)
    back = io.from_json(json.loads(text))
    assert io.dumps(back) == text
    return back


def test_strategy_and_process_round_trip():
    t = random_sequence_set_table(random.Random(5), 4)
    assert round_trip(t) == t
    p = strategy_to_mp(t, 5)
    assert round_trip(p) == p


def test_nonmonotonic_and_mltest_round_trip():
    b = NonmonotonicStrategy({"": 1, "0": Fraction(3, 2), "1": Fraction(1, 2)}, {"": 4})
    assert round_trip(b) == b
    levels = mltest_from_strategy(random_sequence_set_table(random.Random(1), 3), 3)
    back = round_trip(levels)
    assert back.levels == levels.levels and back.capitals == levels.capitals


def test_trace_round_trip_keeps_verification():
    full = ClopenSet.full()
    tr = run_construction(("", full, 1), ("", full, 1), ["0000000000"])
    back = round_trip(tr)
    assert back.nodes_a == tr.nodes_a and back.nodes_b == tr.nodes_b
    assert all(r.ok for r in run_all(back, selections=20))


def test_rationals_are_strings():
    t = random_sequence_set_table(random.Random(2), 2)
    doc = json.loads(io.dumps(t))
    assert all(isinstance(n["mass"], str) and "/" in n["mass"] for n in doc["nodes"])


def test_spec_defaults_and_errors():
    spec = io.spec_from_json({"P": ["0000000000"]})
    assert spec["w0"] == "" and spec["cs"] == Fraction(1, 2)
    assert spec["mass_a0"] == spec["mass_b0"] == 1
    assert spec["limits"] == Limits()
    with pytest.raises(InputError):
        io.spec_from_json({"limits": {"bogus": 1}})
    with pytest.raises(InputError):
        io.spec_from_json({"cs": "half"})


def test_bad_documents(tmp_path):
    with pytest.raises(InputError, match="kind"):
        io.from_json({"nodes": []})
    with pytest.raises(InputError, match="malformed"):
        io.from_json({"kind": "strategy", "nodes": [{"word": ""}]})
    bad = tmp_path / "x.json"
    bad.write_text("{not json")
    with pytest.raises(InputError, match="not valid JSON"):
        io.load(bad)
    with pytest.raises(InputError, match="cannot read"):
        io.load(tmp_path / "missing.json")
