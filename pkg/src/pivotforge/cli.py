"""Command line front end: ``pivotforge generate|run|audit|lockstep|decompose``.

Exit codes: 0 success, 1 usage error, 2 construction or precondition error,
3 audit failure, 4 iteration cap exceeded.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from . import audits as audit_mod
from . import experiments as ex
from . import serialize
from .lowerbound.adversarial import ConstructionError
from .lowerbound.decompose import DecomposeError, decompose
from .lowerbound.gadgets import GadgetError
from .lowerbound.mdp_families import ConstructionError as MDPConstructionError
from .reductions import ReductionError, lockstep_check
from .trace import DEFAULT_CAP, EngineError

EXIT_OK, EXIT_USAGE, EXIT_CONSTRUCTION, EXIT_AUDIT, EXIT_CAP = 0, 1, 2, 3, 4

CONSTRUCTION_ERRORS = (ConstructionError, MDPConstructionError, GadgetError, DecomposeError,
                       ReductionError, EngineError, serialize.SchemaError)


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _params(items) -> dict:
    out = {}
    for it in items or []:
        if "=" not in it:
            raise UsageError(f"parameter {it!r} must look like key=value")
        k, v = it.split("=", 1)
        out[k] = v
    return out


def _audit_list(text):
    if not text:
        return []
    names = [a.strip() for a in text.split(",") if a.strip()]
    for a in names:
        if a not in audit_mod.AUDITS:
            raise UsageError(f"unknown audit {a!r}; choose from {', '.join(audit_mod.TRACE_AUDITS)}")
    return names


def _emit(text, out=None):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _csv(rows) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=ex.CSV_COLUMNS, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


# ---------------------------------------------------------------- commands

def cmd_generate(args) -> int:
    inst = ex.generate(args.family, _params(args.params))
    _emit(serialize.dump(inst.to_dict()), args.out)
    return EXIT_OK


def _source_spec(source, params):
    if os.path.exists(source):
        if params:
            raise UsageError("key=value parameters only apply to generator families")
        return {"file": source}
    return {"family": source, "params": _params(params)}


def _run_one(spec):
    return ex.run_experiment(spec)


def cmd_run(args) -> int:
    if args.config:
        with open(args.config) as fh:
            specs = json.load(fh)
        if not isinstance(specs, list):
            raise UsageError("config file must hold a JSON array of experiment specs")
    elif args.source:
        specs = [{"instance": _source_spec(args.source, args.params)}]
    else:
        raise UsageError("give an instance (family or file) or --config")
    for s in specs:
        if args.rule is not None:
            s["rule"] = args.rule
        if args.cap is not None:
            s["cap"] = args.cap
        if args.audits is not None:
            s["audits"] = _audit_list(args.audits)
        if args.valuations:
            s["valuations"] = True
    if args.jobs > 1 and len(specs) > 1:
        with ProcessPoolExecutor(args.jobs) as pool:
            results = list(pool.map(_run_one, specs))
    else:
        results = [_run_one(s) for s in specs]
    if args.out:
        if len(results) == 1:
            serialize.dump(results[0].trace_doc, args.out)
        else:
            os.makedirs(args.out, exist_ok=True)
            for i, r in enumerate(results, 1):
                serialize.dump(r.trace_doc, os.path.join(args.out, f"trace-{i:03d}.json"))
    rows = [r.row for r in results]
    if args.format == "json":
        _emit(json.dumps(rows, indent=1) + "\n")
    else:
        _emit(_csv(rows))
    if any(r.capped for r in results):
        return EXIT_CAP
    if not all(r.audits_ok for r in results):
        return EXIT_AUDIT
    return EXIT_OK


def cmd_audit(args) -> int:
    with open(args.trace) as fh:
        doc = json.load(fh)
    if "trace" not in doc or "instance" not in doc:
        raise UsageError(f"{args.trace} is not a trace file written by 'run --out'")
    names = _audit_list(args.audits) if args.audits else list(doc.get("audits", {}))
    if not names:
        raise UsageError("no audits requested and none recorded in the trace")
    report = audit_mod.run_audits(doc["trace"], names, doc["instance"].get("meta", {}))
    if args.format == "csv":
        lines = ["audit,pass,first_failure"]
        lines += [f"{n},{str(r['pass']).lower()},{r['first_failure'] if r['first_failure'] is not None else ''}"
                  for n, r in report.items()]
        _emit("\n".join(lines) + "\n", args.out)
    else:
        _emit(json.dumps(report, indent=1) + "\n", args.out)
    return EXIT_OK if all(r["pass"] for r in report.values()) else EXIT_AUDIT


def cmd_lockstep(args) -> int:
    inst = ex.instance_from_spec(_source_spec(args.source, args.params))
    if inst.kind != "mdp":
        raise UsageError("lockstep needs an MDP instance")
    rule, _ = ex.rule_for(inst, args.rule)
    rep = lockstep_check(inst.model, rule, inst.start, args.cap if args.cap is not None else DEFAULT_CAP)
    if args.format == "csv":
        cols = ["iter", "action", "variable", "rc_mdp", "rc_lp", "obj_mdp", "obj_lp", "match"]
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n", extrasaction="ignore")
        w.writeheader()
        for r in rep.rows:
            w.writerow(r)
        _emit(buf.getvalue(), args.out)
    else:
        _emit(json.dumps(rep.to_dict(), indent=1) + "\n", args.out)
    return EXIT_OK if rep.ok else EXIT_AUDIT


def cmd_decompose(args) -> int:
    try:
        seq = [int(x) for x in args.seq.split(",") if x.strip()]
    except ValueError:
        raise UsageError("sequence must be comma-separated integers") from None
    cert = decompose(seq, args.m, args.ell)
    out = {"sequence": seq, "m": args.m, "ell": args.ell, "case": cert.kind,
           "certificate": cert.to_dict()}
    _emit(json.dumps(out, indent=1) + "\n", args.out)
    return EXIT_OK


# ------------------------------------------------------------------ parser

def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="pivotforge", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    g = sub.add_parser("generate", help="write an instance file")
    g.add_argument("family", choices=sorted(ex.FAMILIES))
    g.add_argument("params", nargs="*", help="generator parameters as key=value")
    g.add_argument("--out", help="output file (default: stdout)")
    g.set_defaults(func=cmd_generate)

    r = sub.add_parser("run", help="run an experiment and print a summary row")
    r.add_argument("source", nargs="?", help="family name or instance file")
    r.add_argument("params", nargs="*", help="generator parameters as key=value")
    r.add_argument("--config", help="JSON array of experiment specs")
    r.add_argument("--rule", help="rule name (bland, dantzig, largest-increase, steepest-edge, "
                                  "f1, f-identity, f-sqrt-ceil) or JSON rule spec")
    r.add_argument("--cap", type=int, help="iteration cap")
    r.add_argument("--audits", help="comma-separated: " + ",".join(audit_mod.TRACE_AUDITS))
    r.add_argument("--out", help="trace file (or directory for several specs)")
    r.add_argument("--valuations", action="store_true",
                   help="store exact values at every step (traces store Bland ranks otherwise)")
    r.add_argument("--format", choices=("csv", "json"), default="csv")
    r.add_argument("--jobs", type=int, default=1, help="parallel runs for --config")
    r.set_defaults(func=cmd_run)

    a = sub.add_parser("audit", help="re-check audits on a saved trace")
    a.add_argument("trace")
    a.add_argument("--audits", help="comma-separated audit names (default: those recorded)")
    a.add_argument("--out")
    a.add_argument("--format", choices=("csv", "json"), default="json")
    a.set_defaults(func=cmd_audit)

    lk = sub.add_parser("lockstep", help="policy iteration vs simplex on the flux LP")
    lk.add_argument("source", help="MDP family name or MDP file")
    lk.add_argument("params", nargs="*")
    lk.add_argument("--rule")
    lk.add_argument("--cap", type=int)
    lk.add_argument("--out")
    lk.add_argument("--format", choices=("csv", "json"), default="json")
    lk.set_defaults(func=cmd_lockstep)

    d = sub.add_parser("decompose", help="clustered/dispersed certificate of a rank sequence")
    d.add_argument("seq", help="comma-separated ranks, e.g. 1,16")
    d.add_argument("--m", type=int, required=True)
    d.add_argument("--ell", type=int, required=True)
    d.add_argument("--out")
    d.set_defaults(func=cmd_decompose)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:      # --help, or a usage error already reported
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if not getattr(args, "func", None):
        parser.print_help(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except (UsageError, ex.SpecError, json.JSONDecodeError, FileNotFoundError) as exc:
        print(f"pivotforge: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except CONSTRUCTION_ERRORS as exc:
        print(f"pivotforge: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION
    except ValueError as exc:
        print(f"pivotforge: {exc}", file=sys.stderr)
        return EXIT_CONSTRUCTION


if __name__ == "__main__":
    sys.exit(main())
