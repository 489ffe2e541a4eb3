"""Command line entry point: ``seqbet construct|verify|play|convert|mltest``.

Exit status: 0 success, 1 invalid input, 2 failed invariant or check,
3 run limit or budget exhausted.
"""

import argparse
import os
import sys

from . import io
from .betting import (MartingaleProcessTable, NonmonotonicStrategy, SequenceOracle,
                      StrategyTable, play, play_nonmonotonic, validate_strategy)
from .construction import Limits, NodeRecord, run_construction
from .core import ClopenSet, format_rational, parse_rational
from .equivalences import (StepBudget, mltest_from_strategy, mp_to_strategy, nm_to_seqset,
                           seqset_to_nm, strategy_to_mp)
from .errors import (BudgetError, InputError, InternalError, LimitError, OracleError,
                     RefinementError)
from .verify import run_all

EXIT_OK, EXIT_INPUT, EXIT_CHECK, EXIT_LIMIT = 0, 1, 2, 3

# flag name -> (type, default)
_OPTIONS = {
    "input": (str, None),
    "output": (str, None),
    "cs": (str, None),
    "max_iterations": (int, None),
    "max_instances": (int, None),
    "max_param_search": (int, None),
    "budget": (int, None),
    "levels": (int, 8),
    "seed": (int, 0),
    "bits": (str, None),
    "bits_file": (str, None),
    "depth": (int, 6),
    "to": (str, None),
    "max_steps": (int, None),
    "selections": (int, 100),
}


def build_parser():
    parser = argparse.ArgumentParser(prog="seqbet", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file with default option values")
    sub = parser.add_subparsers(dest="command", required=True)
    specs = {
        "construct": ["input", "output", "cs", "max_iterations", "max_instances",
                      "max_param_search"],
        "verify": ["input", "output", "seed", "selections"],
        "play": ["input", "output", "bits", "bits_file", "max_steps"],
        "convert": ["input", "output", "to", "depth", "budget"],
        "mltest": ["input", "output", "levels"],
    }
    for name, opts in specs.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON file with default option values")
        for opt in opts:
            typ, _ = _OPTIONS[opt]
            p.add_argument("--" + opt.replace("_", "-"), type=typ, default=None)
    return parser


def resolve(args):
    """Merge config-file values under the command-line flags."""
    conf = {}
    if args.config:
        raw = io.read_json(args.config)
        if not isinstance(raw, dict):
            raise InputError("config file must hold a JSON object")
        conf = {k.replace("-", "_"): v for k, v in raw.items()}
    out = {"command": args.command}
    for opt, (typ, default) in _OPTIONS.items():
        val = getattr(args, opt, None)
        if val is None and opt in conf:
            val = conf[opt] if conf[opt] is None else typ(conf[opt])
        out[opt] = default if val is None else val
    return out


def _emit(text, path):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _need_input(cfg):
    if not cfg["input"]:
        raise InputError("--input is required")
    return cfg["input"]


# -- commands --------------------------------------------------------------


def cmd_construct(cfg):
    spec = io.spec_from_json(io.read_json(_need_input(cfg)))
    limits = spec["limits"]
    for opt in ("max_iterations", "max_instances", "max_param_search"):
        if cfg[opt] is not None:
            setattr(limits, opt, cfg[opt])
    cs = parse_rational(cfg["cs"]) if cfg["cs"] else spec["cs"]
    w0 = spec["w0"]
    root_a = NodeRecord(w0, ClopenSet.cylinder(w0), spec["mass_a0"], spec["mass_a0"], 0)
    root_b = NodeRecord(w0, ClopenSet.cylinder(w0), spec["mass_b0"], spec["mass_b0"], 0)

    def summary(it):
        best = max((max(s.m_a, s.m_b) / ClopenSet.cylinder(s.cylinder).measure()
                    for s in it.spawns), default=None)
        shown = format_rational(best) if best is not None else "-"
        print(f"instance={it.instance} n={it.n} ltp={len(it.ltp)} max_spawn_capital={shown}")

    status = EXIT_OK
    try:
        trace = run_construction(root_a, root_b, spec["P"], cs, limits, on_iteration=summary)
    except LimitError as exc:
        print(f"limit reached: {exc}", file=sys.stderr)
        trace, status = exc.trace, EXIT_LIMIT
    out = cfg["output"] or "."
    os.makedirs(out, exist_ok=True)
    io.save(trace, os.path.join(out, "trace.json"))
    io.save(trace.tree_a(), os.path.join(out, "tree_a.json"))
    io.save(trace.tree_b(), os.path.join(out, "tree_b.json"))
    return status


def cmd_verify(cfg):
    trace = io.load(_need_input(cfg))
    if not hasattr(trace, "instances"):
        raise InputError("verify needs a trace file")
    reports = run_all(trace, seed=cfg["seed"], selections=cfg["selections"])
    for r in reports:
        print(f"{r.check_name}: {r.status}"
              + (f" ({len(r.witnesses)} witnesses, first: {r.witnesses[0]})" if r.witnesses else ""))
    if cfg["output"]:
        _emit(io.dumps(io.report_to_json(reports)), cfg["output"])
    return EXIT_OK if all(r.ok for r in reports) else EXIT_CHECK


def _bits(cfg):
    if cfg["bits"] is not None:
        bits = cfg["bits"].strip()
    elif cfg["bits_file"]:
        try:
            with open(cfg["bits_file"], encoding="utf-8") as fh:
                bits = "".join(fh.read().split())
        except OSError as exc:
            raise InputError(f"cannot read {cfg['bits_file']}: {exc.strerror}") from exc
    else:
        raise InputError("give --bits or --bits-file")
    return SequenceOracle.from_bits(bits), len(bits)


def cmd_play(cfg):
    obj = io.load(_need_input(cfg))
    alpha, n = _bits(cfg)
    steps = cfg["max_steps"] if cfg["max_steps"] is not None else n
    if isinstance(obj, StrategyTable):
        traj = play(obj, alpha, steps)
    elif isinstance(obj, NonmonotonicStrategy):
        traj = play_nonmonotonic(obj, alpha, steps)
    else:
        raise InputError("play needs a strategy or nonmonotonic strategy file")
    doc = {"kind": "trajectory",
           "steps": [{"step": i, "word": w, "capital": format_rational(c)}
                     for i, (w, c) in enumerate(traj.steps)]}
    _emit(io.dumps(doc), cfg["output"])
    return EXIT_OK


def cmd_convert(cfg):
    obj = io.load(_need_input(cfg))
    budget = StepBudget(max_expansion_length=cfg["budget"]) if cfg["budget"] else StepBudget()
    target = cfg["to"]
    if isinstance(obj, StrategyTable):
        target = target or "mp"
        if target == "mp":
            out = strategy_to_mp(obj, cfg["depth"], budget)
        elif target == "nm":
            out = seqset_to_nm(obj)
        else:
            raise InputError(f"cannot convert a strategy to {target!r}")
    elif isinstance(obj, MartingaleProcessTable):
        if target not in (None, "strategy"):
            raise InputError(f"cannot convert a martingale process to {target!r}")
        out = mp_to_strategy(obj, budget)
    elif isinstance(obj, NonmonotonicStrategy):
        if target not in (None, "seqset", "strategy"):
            raise InputError(f"cannot convert a nonmonotonic strategy to {target!r}")
        if obj.validate().violations:
            raise InputError("nonmonotonic strategy is invalid")
        out = nm_to_seqset(obj, cfg["depth"])
    else:
        raise InputError("convert needs a strategy, martingale process or nonmonotonic file")
    _emit(io.dumps(out), cfg["output"])
    return EXIT_OK


def cmd_mltest(cfg):
    obj = io.load(_need_input(cfg))
    if not isinstance(obj, StrategyTable):
        raise InputError("mltest needs a strategy file")
    rep = validate_strategy(obj, require_sequence_set=True)
    if not rep.ok:
        raise InputError(f"strategy violates {', '.join(rep.laws())}")
    _emit(io.dumps(mltest_from_strategy(obj, cfg["levels"])), cfg["output"])
    return EXIT_OK


COMMANDS = {"construct": cmd_construct, "verify": cmd_verify, "play": cmd_play,
            "convert": cmd_convert, "mltest": cmd_mltest}


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        return COMMANDS[cfg["command"]](cfg)
    except (InputError, RefinementError, OracleError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except InternalError as exc:
        print(f"invariant violated: {exc}", file=sys.stderr)
        return EXIT_CHECK
    except (LimitError, BudgetError) as exc:
        print(f"limit reached: {exc}", file=sys.stderr)
        return EXIT_LIMIT


if __name__ == "__main__":
    sys.exit(main())
