"""Command-line interface.

Exit codes: 0 success, 1 not found / unsatisfiable / not a member,
2 usage or input error, 3 budget exceeded. Errors go to stderr as JSON.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import generators as gen
from .cnf import CnfFormula, parse_dimacs, sorted_literals, to_dimacs
from .csp import CspInstance, parse_csp, to_json as csp_to_json
from .csp_backdoor import (
    csp_leaf_bound,
    detect_strong_csp,
    detect_weak_csp,
    evaluate_strong_csp,
    evaluate_weak_csp,
    min_partition_backdoor,
    oracle_csp,
    verify_strong_csp,
)
from .errors import BackdoorError, BudgetExceeded, ClassMismatch, ClosureError
from .polymorphism import PolyProperty, parse_props
from .sat_backdoor import (
    detect_strong,
    detect_weak_bounded,
    evaluate_backdoor,
    leaf_bound,
    oracle_backdoor,
    verify_strong,
    verify_weak,
)
from .schaefer import (
    HeteroClass,
    SchaeferClass,
    all_hetero_classes,
    contains_bad_pair,
    dichotomy,
    formula_in_hetero,
    parse_classes,
)

OK, NOT_FOUND, USAGE, BUDGET = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(doc, out=None):
    out = out or sys.stdout
    out.write(json.dumps(doc, indent=2, default=str) + "\n")


def _fail(kind: str, message: str, **extra) -> None:
    doc = {"error": kind, "message": message}
    doc.update(extra)
    sys.stderr.write(json.dumps(doc, default=str) + "\n")


# -- input handling ----------------------------------------------------------

def _read(path: str | None) -> str:
    if path in (None, "-"):
        return sys.stdin.read()
    try:
        with open(path) as fh:
            return fh.read()
    except OSError as e:
        raise UsageError(f"cannot read {path}: {e.strerror}") from None


def _sniff(path: str | None, text: str, fmt: str | None) -> str:
    if fmt:
        return fmt
    if path not in (None, "-"):
        ext = os.path.splitext(path)[1].lower()
        if ext == ".cnf":
            return "cnf"
        if ext == ".json":
            return "csp"
    return "csp" if text.lstrip().startswith("{") else "cnf"


def _load(path, fmt=None):
    """('cnf', formula) or ('csp', instance)."""
    text = _read(path)
    kind = _sniff(path, text, fmt)
    if kind == "cnf":
        return kind, parse_dimacs(text)
    if kind == "csp":
        return kind, parse_csp(text)
    raise UsageError(f"unknown format {kind!r}")


def _hetero(args) -> HeteroClass:
    if not args.cls:
        raise UsageError("CNF input needs --class")
    return parse_classes(args.cls)


def _props(args) -> tuple:
    if not args.props:
        raise UsageError("CSP input needs --props")
    return parse_props(args.props)


def _backdoor(text: str, kind: str, inst=None) -> frozenset:
    items = [t for t in (text or "").split(",") if t.strip()]
    if kind == "cnf":
        try:
            return frozenset(abs(int(t)) for t in items)
        except ValueError:
            raise UsageError("CNF backdoor variables must be integers") from None
    known = set(inst.variables)
    for t in items:
        if t.strip() not in known:
            raise UsageError(f"unknown variable {t.strip()!r}")
    return frozenset(t.strip() for t in items)


def _clause_json(clause):
    return None if clause is None else sorted_literals(clause)


# -- subcommands -------------------------------------------------------------

def cmd_classify(args) -> int:
    kind, formula = _load(args.input, args.format)
    if kind != "cnf":
        raise UsageError("classify takes a CNF formula")
    hetero = _hetero(args)
    verdict = formula_in_hetero(formula, hetero)
    _emit({
        "member": verdict.member,
        "class": hetero.tags,
        "witness": verdict.witness.tag if verdict.witness is not None else None,
        "violations": {s.tag: _clause_json(c) for s, c in (verdict.violations or {}).items()},
    })
    return OK if verdict.member else NOT_FOUND


def _detect_cnf(args, formula: CnfFormula):
    hetero = _hetero(args)
    if args.oracle:
        outcome = oracle_backdoor(formula, args.k, hetero, args.mode)
    elif args.mode == "strong":
        outcome = detect_strong(formula, args.k, hetero)
    else:
        outcome = detect_weak_bounded(formula, args.k, hetero)
    if outcome.found:
        if args.mode == "strong":
            ok = bool(verify_strong(formula, outcome.backdoor, hetero))
        else:
            ok = verify_weak(formula, outcome.backdoor, hetero) is not None
        if not ok:
            raise RuntimeError(f"backdoor {outcome.sorted_backdoor()} failed re-verification")
    return outcome


def _detect_csp(args, inst: CspInstance):
    props = _props(args)
    if args.oracle:
        outcome = oracle_csp(inst, args.k, props, args.mode)
    elif args.mode == "strong":
        outcome = detect_strong_csp(inst, args.k, props)
    else:
        outcome = detect_weak_csp(inst, args.k, props)
    if outcome.found:
        if args.mode == "strong":
            ok = verify_strong_csp(inst, outcome.backdoor, props) is None
        else:
            ok = evaluate_weak_csp(inst, outcome.backdoor, props) is not None
        if not ok:
            raise RuntimeError(f"backdoor {outcome.sorted_backdoor()} failed re-verification")
    return outcome


def cmd_detect(args) -> int:
    if args.k < 0:
        raise UsageError("-k must be nonnegative")
    kind, obj = _load(args.input, args.format)
    outcome = _detect_cnf(args, obj) if kind == "cnf" else _detect_csp(args, obj)
    doc = outcome.to_json()
    doc["k"] = args.k
    _emit(doc)
    return OK if outcome.found else NOT_FOUND


def cmd_verify(args) -> int:
    kind, obj = _load(args.input, args.format)
    B = _backdoor(args.backdoor, kind, obj)
    if kind == "cnf":
        hetero = _hetero(args)
        if args.mode == "strong":
            v = verify_strong(obj, B, hetero)
            doc = {"ok": v.ok, "witnesses": {k: (s.tag if s is not None else None) for k, s in v.witnesses.items()}}
            if not v.ok:
                doc["falsifying"] = v.falsifying
                doc["violations"] = {s.tag: _clause_json(c) for s, c in v.violations.items()}
        else:
            tau = verify_weak(obj, B, hetero)
            doc = {"ok": tau is not None, "assignment": tau}
    else:
        props = _props(args)
        if args.mode == "strong":
            tau = verify_strong_csp(obj, B, props)
            doc = {"ok": tau is None, "falsifying": tau}
        else:
            sol = evaluate_weak_csp(obj, B, props)
            doc = {"ok": sol is not None, "solution": sol}
    doc.update({"backdoor": sorted(B, key=str), "mode": args.mode})
    _emit(doc)
    return OK if doc["ok"] else NOT_FOUND


def cmd_solve(args) -> int:
    kind, obj = _load(args.input, args.format)
    B = _backdoor(args.backdoor, kind, obj)
    if kind == "cnf":
        res = evaluate_backdoor(obj, B, _hetero(args), args.mode)
        sat = res is not None and res.satisfiable
        model = res.model if sat else None
    else:
        props = _props(args)
        if args.mode == "strong":
            model = evaluate_strong_csp(obj, B, props)
        else:
            model = evaluate_weak_csp(obj, B, props)
        sat = model is not None
    status = "SAT" if sat else ("UNSAT" if args.mode == "strong" else "UNKNOWN")
    _emit({"status": status, "model": model, "backdoor": sorted(B, key=str)})
    return OK if sat else NOT_FOUND


def cmd_dichotomy(args) -> int:
    if args.all:
        for h in all_hetero_classes():
            print(f"{','.join(h.tags)}\t{dichotomy(h)}")
        return OK
    if not args.cls:
        raise UsageError("dichotomy needs --class or --all")
    print(dichotomy(parse_classes(args.cls)))
    return OK


def cmd_compare(args) -> int:
    kind, inst = _load(args.input, args.format)
    if kind != "csp":
        raise UsageError("compare-partition takes a CSP instance")
    rows = []
    for p in _props(args):
        strong = oracle_csp(inst, len(inst.variables), [p])
        part = min_partition_backdoor(inst, p)
        row = {"property": p.tag, "strong": len(strong.backdoor), "strong_backdoor": strong.sorted_backdoor()}
        row.update({f"partition_{k}": v for k, v in part.to_json().items()})
        rows.append(row)
    _emit(rows)
    return OK


def _bench_cnf(path, formula, args, out):
    classes = [parse_classes(args.cls)] if args.cls else [h for h in all_hetero_classes() if not contains_bad_pair(h)]
    ok = True
    for h in classes:
        res = detect_strong(formula, args.k, h)
        alg = res.extra["algorithm"]
        bound = leaf_bound(alg, args.k, h, res.extra.get("r", formula.max_clause_length))
        good = res.stats.leaves <= bound
        ok &= good
        out.append((os.path.basename(path), ",".join(h.tags), alg, res.found,
                    res.stats.nodes_expanded, res.stats.leaves, bound, "ok" if good else "EXCEEDED"))
    return ok


def _bench_csp(path, inst, args, out):
    props = parse_props(args.props or "majority")
    res = detect_strong_csp(inst, args.k, props)
    bound = csp_leaf_bound(inst, args.k, props)
    good = res.stats.leaves <= bound
    out.append((os.path.basename(path), ",".join(p.tag for p in props), "csp-strong", res.found,
                res.stats.nodes_expanded, res.stats.leaves, bound, "ok" if good else "EXCEEDED"))
    return good


def cmd_bench(args) -> int:
    if not os.path.isdir(args.corpus):
        raise UsageError(f"{args.corpus} is not a directory")
    rows = []
    ok = True
    for name in sorted(os.listdir(args.corpus)):
        path = os.path.join(args.corpus, name)
        if not name.endswith((".cnf", ".json")):
            continue
        kind, obj = _load(path)
        ok &= (_bench_cnf if kind == "cnf" else _bench_csp)(path, obj, args, rows)
    header = ("file", "class", "algorithm", "found", "nodes", "leaves", "bound", "check")
    table = [header] + [tuple(str(x) for x in r) for r in rows]
    widths = [max(len(r[i]) for r in table) for i in range(len(header))]
    for r in table:
        print("  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip())
    return OK if ok else NOT_FOUND


# gen ------------------------------------------------------------------------

def _sets(args):
    return gen.parse_set_system(_read(args.sets))


def _gen_text(args) -> str:
    f = args.family
    if f == "intro":
        return to_dimacs(gen.intro_family(args.n))
    if f == "obstruction":
        clause = gen.obstruction(SchaeferClass.from_tag(args.source), SchaeferClass.from_tag(args.target))
        return to_dimacs(CnfFormula([clause]))
    if f == "hs-strong":
        return to_dimacs(gen.hs_to_strong_sat(_sets(args), pad=not args.no_pad))
    if f == "hs-weak":
        return to_dimacs(gen.hs_to_weak_sat(_sets(args), SchaeferClass.from_tag(args.s)))
    if f == "weak-pad":
        kind, formula = _load(args.cnf, "cnf")
        return to_dimacs(gen.weak_obstruction_pad(formula, args.k, SchaeferClass.from_tag(args.s),
                                                  parse_classes(args.cls)))
    if f == "hs-csp-boolean":
        return csp_to_json(gen.hs_to_csp_boolean(_sets(args), args.props))
    if f == "gadget":
        return csp_to_json(gen.closure_gadget(args.c, args.k, literal=args.literal))
    if f == "hs-csp-arity2":
        return csp_to_json(gen.hs_to_csp_arity2(_sets(args), args.c))
    if f == "partition-gap":
        return csp_to_json(gen.partition_gap_instance(args.n, args.c))
    if f == "random-cnf":
        return to_dimacs(gen.random_cnf(args.seed, args.max_vars, args.max_clauses, args.max_len))
    if f == "random-csp":
        return csp_to_json(gen.random_csp(args.seed, args.max_vars, args.max_constraints,
                                          args.max_arity, args.max_domain))
    if f == "random-sets":
        return gen.format_set_system(gen.random_set_system(args.seed, args.max_universe, args.max_sets, args.k))
    raise UsageError(f"unknown family {f!r}")


def cmd_gen(args) -> int:
    text = _gen_text(args)
    if not text.endswith("\n"):
        text += "\n"
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)
    return OK


# -- parser ------------------------------------------------------------------

def _input_args(p, classes=True, props=True):
    p.add_argument("input", nargs="?", default="-", help="DIMACS (.cnf) or CSP JSON (.json); '-' for stdin")
    p.add_argument("--format", choices=["cnf", "csp"], help="override detection by extension")
    if classes:
        p.add_argument("--class", dest="cls", help="comma-separated Schaefer classes")
    if props:
        p.add_argument("--props", help="comma-separated polymorphism properties")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="backdoors", description="Backdoor sets into heterogeneous base classes.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("classify", help="class membership of a CNF formula")
    _input_args(p, props=False)
    p.set_defaults(run=cmd_classify)

    p = sub.add_parser("detect", help="find a backdoor of size at most k")
    _input_args(p)
    p.add_argument("--mode", choices=["strong", "weak"], default="strong")
    p.add_argument("-k", type=int, required=True)
    p.add_argument("--oracle", action="store_true", help="use the brute-force oracle")
    p.set_defaults(run=cmd_detect)

    for name, fn, text in (("verify", cmd_verify, "check a candidate backdoor"),
                           ("solve", cmd_solve, "decide satisfiability through a backdoor")):
        p = sub.add_parser(name, help=text)
        _input_args(p)
        p.add_argument("--backdoor", required=True, help="comma-separated variables (may be empty)")
        p.add_argument("--mode", choices=["strong", "weak"], default="strong")
        p.set_defaults(run=fn)

    p = sub.add_parser("dichotomy", help="complexity of strong detection for a union")
    p.add_argument("--class", dest="cls")
    p.add_argument("--all", action="store_true", help="print all 31 unions")
    p.set_defaults(run=cmd_dichotomy)

    p = sub.add_parser("compare-partition", help="strong vs partition backdoor sizes")
    _input_args(p, classes=False)
    p.set_defaults(run=cmd_compare)

    p = sub.add_parser("bench", help="search-tree sizes against their bounds")
    p.add_argument("--corpus", required=True)
    p.add_argument("--class", dest="cls")
    p.add_argument("--props")
    p.add_argument("-k", type=int, default=2)
    p.set_defaults(run=cmd_bench)

    p = sub.add_parser("gen", help="generate instances")
    fam = p.add_subparsers(dest="family", parser_class=_Parser)
    fam.required = True

    def family(name, text):
        q = fam.add_parser(name, help=text)
        q.add_argument("-o", "--output", help="output file (default stdout)")
        q.set_defaults(run=cmd_gen)
        return q

    q = family("intro", "formula with a size-1 heterogeneous backdoor")
    q.add_argument("-n", type=int, required=True)
    q = family("obstruction", "one clause inside a class and outside another")
    q.add_argument("--from", dest="source", required=True)
    q.add_argument("--to", dest="target", required=True)
    q = family("hs-strong", "hitting set to strong backdoor (CNF)")
    q.add_argument("sets", help="set-system file ('-' for stdin)")
    q.add_argument("--no-pad", action="store_true")
    q = family("hs-weak", "hitting set to weak single-class backdoor (CNF)")
    q.add_argument("sets")
    q.add_argument("--s", required=True, help="target class")
    q = family("weak-pad", "add obstructions isolating one class of a union")
    q.add_argument("cnf")
    q.add_argument("-k", type=int, required=True)
    q.add_argument("--s", required=True)
    q.add_argument("--class", dest="cls", required=True)
    q = family("hs-csp-boolean", "hitting set to strong backdoor (Boolean CSP)")
    q.add_argument("sets")
    q.add_argument("--props", required=True)
    q = family("gadget", "binary instance outside a class, inside after any assignment")
    q.add_argument("--c", required=True, choices=["minmax", "majority", "minority", "malcev"])
    q.add_argument("-k", type=int, default=3)
    q.add_argument("--literal", action="store_true", help="tables exactly as usually stated")
    q = family("hs-csp-arity2", "hitting set to strong backdoor (binary CSP)")
    q.add_argument("sets")
    q.add_argument("--c", required=True, choices=["minmax", "majority", "minority", "malcev"])
    q = family("partition-gap", "strong backdoor 1, large partition backdoors")
    q.add_argument("-n", type=int, default=10)
    q.add_argument("--c", default="majority", choices=[p.tag for p in PolyProperty])
    q = family("random-cnf", "seeded random CNF")
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--max-vars", type=int, default=12)
    q.add_argument("--max-clauses", type=int, default=20)
    q.add_argument("--max-len", type=int, default=4)
    q = family("random-csp", "seeded random CSP")
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--max-vars", type=int, default=7)
    q.add_argument("--max-constraints", type=int, default=6)
    q.add_argument("--max-arity", type=int, default=3)
    q.add_argument("--max-domain", type=int, default=3)
    q = family("random-sets", "seeded random set system")
    q.add_argument("--seed", type=int, required=True)
    q.add_argument("--max-universe", type=int, default=8)
    q.add_argument("--max-sets", type=int, default=5)
    q.add_argument("-k", type=int)
    return parser


def run_command(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.run(args)
    except UsageError as e:
        _fail("usage", str(e))
        return USAGE
    except BudgetExceeded as e:
        hint = "the brute-force --oracle path decides membership without enumerating families"
        _fail("budget", str(e), hint=hint)
        return BUDGET
    except (ClassMismatch, ClosureError) as e:
        _fail("not-a-backdoor", str(e), assignment=getattr(e, "assignment", None))
        return NOT_FOUND
    except (BackdoorError, ValueError, KeyError) as e:
        _fail("input", str(e))
        return USAGE


def main() -> None:
    sys.exit(run_command())
