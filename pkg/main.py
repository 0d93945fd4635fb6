#!/usr/bin/env python3
"""valkit: ordered abelian groups, Hahn series and valued-field descriptors from the command line.

Every subcommand goes through ``execute_command(command, args)``, which the
Flask app calls too; it returns ``{'success': True, 'command': ..., ...}`` or
``{'success': False, 'error': ...}``.
"""
import argparse
import json
import logging
import os
import random
import re
import sys
from fractions import Fraction
from typing import Any, Dict, List, Optional

from dotenv import load_dotenv

from errors import UsageError, ValkitError
from hahn import (BallFamily, bounded_closure_check, compare, parse_field, parse_series, parse_set_descriptor,
                  sample_series, series_arith, typeV_check, uniformity_check, val_data)
from hensel import (SeriesDomain, conjugate_form, find_nonvanishing_point, hensel_form_check, jacobian,
                    newton_lift, no_root_check, parse_domain, parse_minpoly, parse_poly, residue_start)
from oag import (DEFAULT_OMEGA_DEPTH, aux_sort_Sp, convex_chain, dp_profile,
                 group_arith, h_subgroup, is_nonsingular, mod_p_index, parse_element, parse_group)
from oag_logic import decide, format_formula, normal_form_one_var, parse_formula, qe
from ordcut import cut_membership, density_check, gap_value, parse_pair, sample_elements, valuation_report
from perfectness import frobenius_check, injectivity_scan, is_pth_power, parse_rational_function, tau_eval
from report_builders.cuts import build_cut_report
from report_builders.fields import build_field_report
from report_builders.groups import build_group_report
from report_builders.logic import build_logic_report
from report_builders.perfectness import build_perfectness_report
from report_builders.series import build_series_report
from report_store import ReportStore
from valstruct import (canonical_henselian, canonical_p_henselian, classify_field, coarsening_chain,
                       dp_minimality_verdict, galois_descriptor, parse_valued_field, trichotomy)

load_dotenv()

logger = logging.getLogger(__name__)

ACTIONS = {
    "oag": ("info", "arith", "h", "profile"),
    "qe": ("qe", "decide", "normal"),
    "hahn": ("arith", "val", "compare", "uniformity", "typev", "closure"),
    "hensel": ("lift", "check", "conj"),
    "valfield": ("chain", "classify", "canonical", "dp", "trichotomy"),
    "cut": ("gap", "member", "density", "report"),
    "galois": ("shape",),
    "perfect": ("pth", "tau", "scan", "frobenius"),
    "history": ("list",),
}

REQUIRED = {
    ("oag", "info"): ("group",),
    ("oag", "arith"): ("group", "op", "x"),
    ("oag", "h"): ("group", "x", "prime"),
    ("oag", "profile"): ("group",),
    ("qe", "qe"): ("group", "formula"),
    ("qe", "decide"): ("group", "formula"),
    ("qe", "normal"): ("group", "formula"),
    ("hahn", "arith"): ("field", "op", "x"),
    ("hahn", "val"): ("field", "x"),
    ("hahn", "compare"): ("field", "x", "y"),
    ("hahn", "uniformity"): ("field",),
    ("hahn", "typev"): ("field", "desc"),
    ("hahn", "closure"): ("field", "desc", "other"),
    ("hensel", "lift"): ("field", "poly", "prec"),
    ("hensel", "check"): ("field", "poly"),
    ("hensel", "conj"): ("alpha",),
    ("valfield", "chain"): ("field",),
    ("valfield", "classify"): ("field",),
    ("valfield", "canonical"): ("field",),
    ("valfield", "dp"): ("field",),
    ("valfield", "trichotomy"): ("field",),
    ("cut", "gap"): ("field", "alpha"),
    ("cut", "member"): ("field", "alpha", "kind", "x"),
    ("cut", "density"): ("field", "alpha", "eps"),
    ("cut", "report"): ("field", "alpha"),
    ("galois", "shape"): ("group",),
    ("perfect", "pth"): ("x",),
    ("perfect", "tau"): ("x", "y", "z"),
    ("perfect", "scan"): ("z",),
    ("perfect", "frobenius"): (),
    ("history", "list"): (),
}

BUILDERS = {
    "oag": build_group_report,
    "galois": build_group_report,
    "qe": build_logic_report,
    "hahn": build_series_report,
    "hensel": build_series_report,
    "valfield": build_field_report,
    "cut": build_cut_report,
    "perfect": build_perfectness_report,
}

FLAG_TOKEN = re.compile(r"\w+(?:\([^)]*\))?")


def configure_logging():
    logging.basicConfig(stream=sys.stderr, format="%(message)s",
                        level=os.getenv("VALKIT_LOG_LEVEL", "WARNING").upper())


def get_report_store() -> ReportStore:
    return ReportStore(os.getenv("VALKIT_DB_PATH", "valkit_reports.db"))


# -- argument helpers ----------------------------------------------------------------

def missing_arguments(command: str, action: Optional[str], args: Dict[str, Any]) -> List[str]:
    return [name for name in REQUIRED.get((command, action), ()) if args.get(name) in (None, "")]


def _int(args: Dict[str, Any], key: str, default: Optional[int] = None) -> Optional[int]:
    value = args.get(key)
    if value in (None, ""):
        return default
    try:
        return int(value)
    except (TypeError, ValueError):
        raise UsageError(f"--{key.replace('_', '-')} expects an integer, got {value!r}")


def _seed(args: Dict[str, Any]) -> int:
    return _int(args, "seed", int(os.getenv("VALKIT_SEED", "0")))


def _flag(value) -> bool:
    if isinstance(value, str):
        return value.lower() in ("1", "true", "yes")
    return bool(value)


def _split(text, sep: str = ";") -> List[str]:
    if isinstance(text, (list, tuple)):
        return [str(part).strip() for part in text]
    return [part.strip() for part in str(text).split(sep) if part.strip()]


def _precision(domain, text):
    """Integer precision, or an element literal for higher-rank Hahn fields."""
    text = str(text).strip()
    if isinstance(domain, SeriesDomain) and text.startswith("("):
        return parse_element(text, domain.field.group)
    try:
        return int(text)
    except ValueError:
        raise UsageError(f"--prec expects an integer or an element literal, got {text!r}")


# -- subcommands -------------------------------------------------------------------------

def run_oag(action: str, args: Dict[str, Any]) -> Dict[str, Any]:
    g = parse_group(args["group"])
    if action == "info":
        p = _int(args, "prime", 2)
        index, r_p = mod_p_index(g, p)
        nonsingular, witness = is_nonsingular(g)
        chain = convex_chain(g, _int(args, "depth", DEFAULT_OMEGA_DEPTH))
        s_p = None if g.has_omega else [
            {"subgroup": None if h is None else h.label, "representative": str(rep)} for h, rep in aux_sort_Sp(g, p)]
        return {"group": str(g), "prime": p, "index": index, "r_p": r_p, "non_singular": nonsingular,
                "witness_prime": witness, "chain": [h.label for h in chain], "S_p": s_p}

    elif action == "arith":
        op = args["op"]
        a = parse_element(args["x"], g)
        b = parse_element(args["y"], g) if args.get("y") and op != "scalar" else None
        if op in ("add", "sub", "cmp") and b is None:
            raise UsageError(f"{op} needs --y")
        result = group_arith(op, a, b, _int(args, "k"))
        return {"group": str(g), "op": op, "x": str(a), "y": None if b is None else str(b),
                "result": result.name if op == "cmp" else str(result)}

    elif action == "h":
        p = _int(args, "prime")
        a = parse_element(args["x"], g)
        h = h_subgroup(a, p)
        return {"group": str(g), "element": str(a), "prime": p, "defined": h is not None,
                "subgroup": None if h is None else h.label}

    elif action == "profile":
        return dp_profile(g, _int(args, "prime", 13))

    raise UsageError(f"unknown oag action {action!r}")


def run_qe(action: str, args: Dict[str, Any]) -> Dict[str, Any]:
    g = parse_group(args["group"])
    f = parse_formula(args["formula"], g)
    cap = _int(args, "dnf_cap")
    if action == "decide" or _flag(args.get("decide")):
        return {"group": str(g), "formula": format_formula(f), "action": "decide", "decision": decide(f, g, cap)}
    if action == "normal":
        nf = normal_form_one_var(f, g, cap)
        return {
            "group": str(g),
            "formula": format_formula(f),
            "action": "normal",
            "variable": nf.variable,
            "result": format_formula(nf.tree),
            "convex_leaves": [{"formula": format_formula(leaf.formula), "shape": leaf.shape,
                               "anchor": None if leaf.anchor is None else str(leaf.anchor)}
                              for leaf in nf.convex_leaves],
            "congruence_leaves": [format_formula(c) for c in nf.congruence_leaves],
        }
    return {"group": str(g), "formula": format_formula(f), "action": "qe", "result": format_formula(qe(f, g, cap))}


def run_hahn(action: str, args: Dict[str, Any]) -> Dict[str, Any]:
    field = parse_field(args["field"])
    rng = random.Random(_seed(args))
    if action == "arith":
        op = args["op"]
        x = parse_series(args["x"], field)
        if op in ("add", "sub", "mul"):
            if not args.get("y"):
                raise UsageError(f"{op} needs --y")
            result = series_arith(op, x, parse_series(args["y"], field))
        elif op == "inv":
            result = x.invert(_precision(SeriesDomain(field), args.get("prec", 4)))
        elif op == "div":
            if not args.get("y"):
                raise UsageError("div needs --y")
            result = x.divide(parse_series(args["y"], field), _precision(SeriesDomain(field), args.get("prec", 4)))
        else:
            raise UsageError(f"unknown series operation {op!r}; use add, sub, mul, div or inv")
        return {"field": str(field), "op": op, "x": str(x), "y": args.get("y"), "result": str(result)}

    elif action == "val":
        x = parse_series(args["x"], field)
        data = val_data(x)
        return {"field": str(field), "series": str(x), "valuation": str(data.valuation),
                "leading": str(data.leading), "residue": str(data.residue)}

    elif action == "compare":
        x, y = parse_series(args["x"], field), parse_series(args["y"], field)
        return {"field": str(field), "x": str(x), "y": str(y), "order": compare(x, y).name}

    elif action == "uniformity":
        n = min(_int(args, "samples", 6), 12)
        points = [sample_series(field, rng) for _ in range(n)]
        pairs = [(points[i], points[j]) for i in range(n) for j in range(i + 1, n)]
        g = field.group
        radii = [g.zero()] + [g.unit(i, j) for i in range(g.rank) for j in (-1, 1)]
        report = uniformity_check(BallFamily(g), pairs, radii)
        report.pop("membership")
        return {"field": str(field), **report}

    elif action == "typev":
        return {"field": str(field), **typeV_check(parse_set_descriptor(args["desc"], field.group), rng,
                                                  _int(args, "samples", 20))}

    elif action == "closure":
        a = parse_set_descriptor(args["desc"], field.group)
        b = parse_set_descriptor(args["other"], field.group)
        return {"field": str(field), "a": str(a), "b": str(b),
                **bounded_closure_check(a, b, rng, _int(args, "samples", 50))}

    raise UsageError(f"unknown hahn action {action!r}")


def run_hensel(action: str, args: Dict[str, Any]) -> Dict[str, Any]:
    if action == "conj":
        form = conjugate_form(parse_minpoly(args["alpha"]), _flag(args.get("assert_irreducible")))
        point = find_nonvanishing_point(form.G)
        out = {"alpha": args["alpha"], "degree": form.degree, **form.to_json(),
               "jacobian_point": list(point), "jacobian_value": str(jacobian(list(form.G), point))}
        if args.get("point"):
            try:
                c = [Fraction(v) for v in _split(args["point"], ",")]
            except ValueError:
                raise UsageError(f"--point expects rationals like 0,1,1/2, got {args['point']!r}")
            out["c"] = [str(v) for v in c]
            out["no_rational_root"] = no_root_check(form, c)
        return out

    domain = parse_domain(args["field"])
    f = parse_poly(args["poly"], domain)
    if action == "check":
        ok = hensel_form_check(f)
        return {"field": str(domain), "poly": str(f), "hensel_form": ok,
                "residue_root": domain.format(residue_start(f)) if ok else None}

    elif action == "lift":
        start = args.get("start")
        a0 = residue_start(f) if start in (None, "") else start
        approx, cert = newton_lift(f, a0, _precision(domain, args["prec"]))
        return {"field": str(domain), "poly": str(f), "start": domain.format(domain.coerce(a0)),
                "approximation": domain.format(approx), "certificate": cert.to_json()}

    raise UsageError(f"unknown hensel action {action!r}")


def run_valfield(action: str, args: Dict[str, Any]) -> Dict[str, Any]:
    K = parse_valued_field(args["field"], FLAG_TOKEN.findall(args.get("flags") or ""))
    out = {"field": str(K), "descriptor": K.to_json()}
    if action == "chain":
        return {**out, **coarsening_chain(K).to_json()}
    elif action == "classify":
        return {**out, "flags": classify_field(K).names()}
    elif action == "canonical":
        p = _int(args, "prime")
        v = canonical_henselian(K) if p is None else canonical_p_henselian(K, p)
        return {**out, "prime": p, "valuation": v.to_json()}
    elif action == "dp":
        return {**out, **dp_minimality_verdict(K)}
    elif action == "trichotomy":
        return {**out, **trichotomy(K)}
    raise UsageError(f"unknown valfield action {action!r}")


def run_cut(action: str, args: Dict[str, Any]) -> Dict[str, Any]:
    pair = parse_pair(args["field"], args["alpha"], args.get("group"))
    cut = gap_value(pair)
    out = {**pair.to_json(), **cut.to_json()}
    if action == "gap":
        return out
    elif action == "member":
        x = parse_series(args["x"], pair.base)
        kind = str(args["kind"]).upper()
        return {**out, "kind": kind, "x": str(x), "member": cut_membership(kind, x, pair, cut)}
    elif action == "density":
        eps = [parse_series(text, pair.base) for text in _split(args["eps"])]
        return {**out, **density_check(pair, eps)}
    elif action == "report":
        rng = random.Random(_seed(args))
        samples = sample_elements(pair.base, rng, _int(args, "samples", 200))
        return valuation_report(pair, samples, rng)
    raise UsageError(f"unknown cut action {action!r}")


def run_galois(args: Dict[str, Any]) -> Dict[str, Any]:
    return galois_descriptor(parse_group(args["group"]), _int(args, "prime", 13)).to_json()


def run_perfect(action: str, args: Dict[str, Any]) -> Dict[str, Any]:
    p = _int(args, "char", 2)
    rng = random.Random(_seed(args))
    if action == "pth":
        f = parse_rational_function(args["x"], p)
        ok, root = is_pth_power(f, p)
        return {"p": p, "f": str(f), "is_pth_power": ok, "root": None if root is None else str(root)}
    elif action == "tau":
        x, y, z = (parse_rational_function(args[k], p) for k in ("x", "y", "z"))
        return {"p": p, "x": str(x), "y": str(y), "z": str(z), "value": str(tau_eval(x, y, z, p)),
                "z_is_pth_power": is_pth_power(z, p)[0]}
    elif action == "scan":
        z = parse_rational_function(args["z"], p)
        return injectivity_scan(z, p, _int(args, "samples", 1000), rng)
    elif action == "frobenius":
        return frobenius_check(p, _int(args, "samples", 200), rng)
    raise UsageError(f"unknown perfect action {action!r}")


def run_history(args: Dict[str, Any]) -> Dict[str, Any]:
    store = get_report_store()
    limit = _int(args, "limit", 10)
    if args.get("command_filter"):
        reports = store.get_reports_for_command(args["command_filter"], limit)
    else:
        reports = store.get_recent_reports(limit)
    return {"reports": reports, "count": len(reports)}


def execute_command(command: str, args: Dict[str, Any]) -> Dict[str, Any]:
    """Run one subcommand; domain errors come back as {'success': False, 'error': ...}"""
    action = args.get("action") or ACTIONS.get(command, (None,))[0]
    try:
        if command not in ACTIONS:
            raise UsageError(f"unknown command {command!r}; use one of {', '.join(ACTIONS)}")
        if action not in ACTIONS[command]:
            raise UsageError(f"unknown {command} action {action!r}; use one of {', '.join(ACTIONS[command])}")
        missing = missing_arguments(command, action, args)
        if missing:
            raise UsageError(f"{command} {action} needs " + ", ".join(f"--{m.replace('_', '-')}" for m in missing))
        logger.info(f"🔍 Running {command} {action}")

        if command == "oag":
            payload = run_oag(action, args)
        elif command == "qe":
            payload = run_qe(action, args)
        elif command == "hahn":
            payload = run_hahn(action, args)
        elif command == "hensel":
            payload = run_hensel(action, args)
        elif command == "valfield":
            payload = run_valfield(action, args)
        elif command == "cut":
            payload = run_cut(action, args)
        elif command == "galois":
            payload = run_galois(args)
        elif command == "perfect":
            payload = run_perfect(action, args)
        else:
            payload = run_history(args)

        return {"success": True, "command": command, "action": action, **payload}

    except ValkitError as e:
        logger.error(f"❌ {command} {action}: {e}")
        return {"success": False, "command": command, "action": action, "error": str(e),
                "usage": isinstance(e, UsageError)}


def build_report(result: Dict[str, Any]) -> str:
    builder = BUILDERS.get(result["command"])
    if builder is None:
        lines = [f"#{r['id']} {r['created_at']} {r['command']} {r['args'].get('action', '')}"
                 for r in result.get("reports", [])]
        return "\n".join(lines) if lines else "No recorded reports"
    return builder(result)


# -- argument parser ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--group", help="group descriptor, e.g. lex(Z,Q); for cut: the extension group")
    common.add_argument("--formula", help="first-order formula")
    common.add_argument("--field", help="field descriptor, e.g. Q((t^lex(Z))) or Q_5")
    common.add_argument("--poly", help="univariate polynomial in X")
    common.add_argument("--alpha", help="algebraic number (sqrt(2), i, Z^3 - 2) or cut element")
    common.add_argument("--prime", type=int, help="prime p (for galois: the prime bound)")
    common.add_argument("--prec", help="target precision")
    common.add_argument("--json", action="store_true", help="print the JSON result")
    common.add_argument("--seed", type=int, help="random seed (default VALKIT_SEED or 0)")
    common.add_argument("--assert-irreducible", action="store_true", help="skip the irreducibility check")
    common.add_argument("--start", help="starting approximation for hensel lift")
    common.add_argument("--point", help="comma separated coordinates c0,c1,...")
    common.add_argument("--eps", help="semicolon separated positive series")
    common.add_argument("--samples", type=int, help="sample count")
    common.add_argument("--char", type=int, help="characteristic p for rational functions")
    common.add_argument("--z", help="rational function z")
    common.add_argument("--x", help="element, series or rational function")
    common.add_argument("--y", help="second operand")
    common.add_argument("--k", type=int, help="integer multiplier for scalar")
    common.add_argument("--depth", type=int, help="omega steps listed in a Zomega chain")
    common.add_argument("--dnf-cap", type=int, help="DNF cell cap (default VALKIT_DNF_CAP)")
    common.add_argument("--record", action="store_true", help="store the result in the report ledger")
    common.add_argument("--decide", action="store_true", help="decide a sentence instead of eliminating")
    common.add_argument("--op", help="operation name")
    common.add_argument("--other", help="second set descriptor")
    common.add_argument("--desc", help="set descriptor, e.g. BALL(1)")
    common.add_argument("--flags", help="coefficient field flags, e.g. euclidean,p_closed(3)")
    common.add_argument("--kind", help="cut set: D, A or O")

    parser = argparse.ArgumentParser(prog="valkit", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for command, actions in ACTIONS.items():
        p = sub.add_parser(command, parents=[common])
        p.add_argument("action", nargs="?", choices=actions, default=actions[0])
        if command == "history":
            p.add_argument("--command", dest="command_filter", help="only runs of this command")
            p.add_argument("--limit", type=int, help="number of rows")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    configure_logging()

    args = {k: v for k, v in vars(ns).items()
            if v is not None and v is not False and k not in ("command", "json", "record")}
    missing = missing_arguments(ns.command, ns.action, args)
    if missing:
        parser.error(f"{ns.command} {ns.action} needs " + ", ".join(f"--{m.replace('_', '-')}" for m in missing))

    result = execute_command(ns.command, args)
    if not result["success"]:
        print(f"❌ {result['error']}", file=sys.stderr)
        return 2 if result.get("usage") else 1

    if ns.record and ns.command != "history":
        get_report_store().save_report(ns.command, args, result, _seed(args))

    if ns.json:
        print(json.dumps(result, indent=2, default=str))
    else:
        print(build_report(result))
    return 0


if __name__ == "__main__":
    sys.exit(main())
