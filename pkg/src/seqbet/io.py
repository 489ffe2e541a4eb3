"""JSON serialization of every artifact the package produces.

Rationals are written as ``"n/d"`` strings, clopen sets as length-lex lists
of generator words.  Keys are sorted so that equal objects give identical
bytes.
"""

import json

from .betting import MartingaleProcessTable, NonmonotonicStrategy, StrategyTable
from .construction import (ConstructionTrace, GranularityParams, InstanceParams,
                           InstanceRecord, IterationRecord, Limits, MassAssignment,
                           NodeRecord, SpawnRecord)
from .core import ClopenSet, format_rational, length_lex_key, parse_rational
from .equivalences import MLTestLevels
from .errors import InputError

R = format_rational


def _q(text):
    return parse_rational(text)


def _set(gens):
    if not isinstance(gens, list):
        raise InputError(f"expected a list of generator words, got {type(gens).__name__}")
    return ClopenSet(gens)


def _ll(words):
    return sorted(words, key=length_lex_key)


# -- strategy-like objects -------------------------------------------------


def strategy_to_json(t):
    return {"kind": "strategy", "root": t.root,
            "nodes": [{"word": w, "set": list(s.generators), "mass": R(m)}
                      for w, (s, m) in t.items()]}


def strategy_from_json(d):
    return StrategyTable({n["word"]: (_set(n["set"]), _q(n["mass"])) for n in d["nodes"]},
                         d.get("root", ""))


def mp_to_json(p):
    return {"kind": "martingale-process", "depth": p.depth,
            "values": [[w, R(p.values[w])] for w in _ll(p.values)]}


def mp_from_json(d):
    return MartingaleProcessTable(d["depth"], {w: _q(v) for w, v in d["values"]})


def nm_to_json(b):
    return {"kind": "nonmonotonic",
            "martingale": [[w, R(b.martingale[w])] for w in _ll(b.martingale)],
            "scan": [[w, b.scan[w]] for w in _ll(b.scan)]}


def nm_from_json(d):
    return NonmonotonicStrategy({w: _q(v) for w, v in d["martingale"]},
                                {w: int(p) for w, p in d["scan"]})


def mltest_to_json(t):
    return {"kind": "mltest", "levels": [list(s.generators) for s in t.levels],
            "path": list(t.path), "capitals": [R(c) for c in t.capitals]}


def mltest_from_json(d):
    return MLTestLevels([_set(g) for g in d["levels"]], list(d["path"]),
                        [_q(c) for c in d["capitals"]])


# -- construction input ----------------------------------------------------


def spec_from_json(d):
    """Construction input: ``{w0, mass_a0, mass_b0, cs, P, limits}``."""
    try:
        w0 = d.get("w0", "")
        spec = {
            "w0": w0,
            "mass_a0": _q(d.get("mass_a0", "1")),
            "mass_b0": _q(d.get("mass_b0", "1")),
            "cs": _q(d.get("cs", "1/2")),
            "P": list(d.get("P", [])),
            "limits": Limits(**d.get("limits", {})),
        }
    except (TypeError, AttributeError) as exc:
        raise InputError(f"malformed construction spec: {exc}") from exc
    return spec


# -- traces ----------------------------------------------------------------


def _node(r):
    return {"word": r.word, "set": list(r.sset.generators), "m": R(r.m), "ms": R(r.ms),
            "me": R(r.me), "L": R(r.L), "kind": r.kind, "parent": r.parent,
            "instance": r.instance}


def _node_back(d):
    return NodeRecord(d["word"], _set(d["set"]), _q(d["m"]), _q(d["ms"]), _q(d["me"]),
                      _q(d["L"]), d["kind"], d["parent"], d["instance"])


def _gp(g):
    return None if g is None else {"d": g.d, "m_split": g.m_split, "h": g.h}


def _gp_back(d):
    return None if d is None else GranularityParams(d["d"], d["m_split"], d["h"])


def _params(p):
    return {"w0": list(p.w0.generators), "m_a0": R(p.m_a0), "m_b0": R(p.m_b0), "m0": R(p.m0),
            "c": R(p.c), "cs": R(p.cs), "const": R(p.const)}


def _params_back(d):
    return InstanceParams(_set(d["w0"]), _q(d["m_a0"]), _q(d["m_b0"]), _q(d["m0"]),
                          _q(d["c"]), _q(d["cs"]), _q(d["const"]))


def _iteration(it):
    return {
        "instance": it.instance, "n": it.n, "p": it.p,
        "lts_a": it.lts_a, "lts_b": it.lts_b, "ltn_a": it.ltn_a,
        "prep_params": {w: _gp(g) for w, g in it.prep_params.items()},
        "assignments": [{"pair_index": x.pair_index, "a": x.a_word, "b": x.b_word,
                         "inter": list(x.inter.generators), "dA": R(x.dA), "dB": R(x.dB)}
                        for x in it.assignments],
        "ms_after_a": {w: R(v) for w, v in it.ms_after_a.items()},
        "ms_after_b": {w: R(v) for w, v in it.ms_after_b.items()},
        "distri_params": _gp(it.distri_params),
        "ltp": [list(x) for x in it.ltp],
        "spawns": [{"cylinder": s.cylinder, "m_a": R(s.m_a), "m_b": R(s.m_b),
                    "parent_pair": list(s.parent_pair), "instance": s.instance,
                    "child_instance": s.child_instance} for s in it.spawns],
        "next_lts_a": it.next_lts_a, "next_lts_b": it.next_lts_b,
    }


def _iteration_back(d):
    it = IterationRecord(d["instance"], d["n"], d["p"], list(d["lts_a"]), list(d["lts_b"]))
    it.ltn_a = list(d["ltn_a"])
    it.prep_params = {w: _gp_back(g) for w, g in d["prep_params"].items()}
    it.assignments = [MassAssignment(x["pair_index"], x["a"], x["b"], _set(x["inter"]),
                                     _q(x["dA"]), _q(x["dB"])) for x in d["assignments"]]
    it.ms_after_a = {w: _q(v) for w, v in d["ms_after_a"].items()}
    it.ms_after_b = {w: _q(v) for w, v in d["ms_after_b"].items()}
    it.distri_params = _gp_back(d["distri_params"])
    it.ltp = [tuple(x) for x in d["ltp"]]
    it.spawns = [SpawnRecord(s["cylinder"], _q(s["m_a"]), _q(s["m_b"]),
                             tuple(s["parent_pair"]), s["instance"], s["child_instance"])
                 for s in d["spawns"]]
    it.next_lts_a = list(d["next_lts_a"])
    it.next_lts_b = list(d["next_lts_b"])
    return it


def trace_to_json(tr):
    return {
        "kind": "trace", "complete": tr.complete, "note": tr.note,
        "instances": [{"id": i.id, "parent": i.parent, "a0": i.a0, "b0": i.b0, "P": i.P,
                       "params": _params(i.params),
                       "iterations": [_iteration(it) for it in i.iterations]}
                      for i in tr.instances],
        "nodes_a": [_node(tr.nodes_a[w]) for w in _ll(tr.nodes_a)],
        "nodes_b": [_node(tr.nodes_b[w]) for w in _ll(tr.nodes_b)],
    }


def trace_from_json(d):
    tr = ConstructionTrace(complete=d["complete"], note=d.get("note", ""))
    for i in d["instances"]:
        rec = InstanceRecord(i["id"], _params_back(i["params"]), i["a0"], i["b0"],
                             list(i["P"]), i["parent"])
        rec.iterations = [_iteration_back(it) for it in i["iterations"]]
        tr.instances.append(rec)
    tr.nodes_a = {n["word"]: _node_back(n) for n in d["nodes_a"]}
    tr.nodes_b = {n["word"]: _node_back(n) for n in d["nodes_b"]}
    return tr


# -- reports ---------------------------------------------------------------


def report_to_json(reports):
    return {"kind": "report", "ok": all(r.ok for r in reports),
            "checks": [{"check_name": r.check_name, "status": r.status,
                        "witnesses": [list(w) for w in r.witnesses], "info": r.info}
                       for r in reports]}


# -- generic entry points --------------------------------------------------

_WRITERS = [
    (StrategyTable, strategy_to_json),
    (MartingaleProcessTable, mp_to_json),
    (NonmonotonicStrategy, nm_to_json),
    (MLTestLevels, mltest_to_json),
    (ConstructionTrace, trace_to_json),
]

_READERS = {
    "strategy": strategy_from_json,
    "martingale-process": mp_from_json,
    "nonmonotonic": nm_from_json,
    "mltest": mltest_from_json,
    "trace": trace_from_json,
}


def to_json(obj):
    for cls, fn in _WRITERS:
        if isinstance(obj, cls):
            return fn(obj)
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def dumps(data):
    if not isinstance(data, (dict, list)):
        data = to_json(data)
    return json.dumps(data, sort_keys=True, indent=1, ensure_ascii=False) + "\n"


def from_json(d):
    if not isinstance(d, dict) or d.get("kind") not in _READERS:
        raise InputError("unrecognized document: missing or unknown 'kind'")
    try:
        return _READERS[d["kind"]](d)
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed {d['kind']} document: {exc!r}") from exc


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def load(path):
    return from_json(read_json(path))


def save(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(dumps(obj))
