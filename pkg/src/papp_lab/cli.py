"""Command-line interface: ``papp-lab {eval,check,encode,solve,demo}``."""

from __future__ import annotations

import argparse
import json
import math
import os
import shutil
import sys
import tempfile
import time
from typing import Sequence

from . import __version__
from .axioms import AXIOM_ALIASES, find_violations, normalize_axiom
from .constructions import (
    CounterexampleBundle,
    build_divisor_mp_counterexample,
    build_seq_thiele_counterexample,
    build_thiele_counterexample,
)
from .core import Committee, DomainSpec, ProfileDomain, enumerate_ballots, profile_from_json
from .rules import (
    DivisorFunction,
    SeqThieleRule,
    ThieleRule,
    TieBreakOrder,
    majoritarian_portioning,
    parse_rule,
    thiele_score,
)
from .sat import EncodeOptions, SolverError, encode, encode_appendix_c, solve, write_dimacs, write_gcnf, write_varmap

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_USAGE = 2
EXIT_SOLVER = 3

DEFAULT_PROFILE_CAP = 10**7
REFERENCE_BASE_CLAUSES = 21_418_593


class UsageError(Exception):
    pass


def _optional_int(text: str) -> int | None:
    if text.lower() in ("none", "off", "-1"):
        return None
    return int(text)


def _parse_tie_order(text: str | None, names: Sequence[str]) -> TieBreakOrder | None:
    if not text:
        return None
    tokens = [t.strip() for t in text.split(",")] if "," in text else list(text)
    index = {name: i for i, name in enumerate(names)}
    try:
        order = tuple(index[t] for t in tokens)
    except KeyError as exc:
        raise UsageError(f"--tie-order names unknown party {exc.args[0]!r}") from None
    if sorted(order) != list(range(len(names))):
        raise UsageError(f"--tie-order must list each of {', '.join(names)} exactly once")
    return TieBreakOrder(order)


def _fmt_committee(W: Committee, names: Sequence[str]) -> str:
    return W.format(names)


def _add_domain_args(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--n", type=int, required=required, help="number of voters")
    p.add_argument("--m", type=int, required=required, help="number of parties")
    p.add_argument("--k", type=int, required=required, help="committee size")
    p.add_argument("--unrestricted", action="store_true", help="drop all profile restrictions")
    p.add_argument("--allow-full-ballot", action="store_true", help="admit the ballot approving every party")
    p.add_argument("--max-per-party", type=_optional_int, default=4, metavar="N|none",
                   help="cap on the number of voters approving one party (default 4)")
    p.add_argument("--max-total", type=_optional_int, default=11, metavar="N|none",
                   help="cap on the total number of approvals (default 11)")
    p.add_argument("--max-profiles", type=int, default=DEFAULT_PROFILE_CAP,
                   help=f"refuse domains larger than this (default {DEFAULT_PROFILE_CAP:.0e})")
    p.add_argument("--jobs", type=int, default=1, help="worker processes")


def _spec_from_args(args: argparse.Namespace) -> DomainSpec:
    try:
        if args.unrestricted:
            return DomainSpec.unrestricted(args.n, args.m, args.k)
        return DomainSpec(args.n, args.m, args.k, not args.allow_full_ballot, args.max_per_party, args.max_total)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _guard_domain_size(spec: DomainSpec, cap: int) -> None:
    """Refuse domains whose unrestricted size (an upper bound) exceeds the cap."""
    b = len(enumerate_ballots(spec))
    bound = math.comb(b + spec.n - 1, spec.n)
    if bound > cap:
        raise UsageError(
            f"domain has up to {bound:,} profiles (C({b}+{spec.n}-1, {spec.n})), above the cap of {cap:,}; "
            "raise --max-profiles to proceed"
        )


# -- eval ------------------------------------------------------------------------


def cmd_eval(args: argparse.Namespace) -> int:
    text = sys.stdin.read() if args.profile == "-" else _read(args.profile)
    try:
        named = profile_from_json(text)
    except ValueError as exc:
        raise UsageError(f"{args.profile}: {exc}") from None
    names = named.party_names()
    profile = named.profile
    rule = parse_rule(args.rule, _parse_tie_order(args.tie_order, names))
    W = rule(profile, args.k)
    score = thiele_score(rule.weights, W, profile) if isinstance(rule, ThieleRule) else None
    if args.json:
        out: dict = {"rule": args.rule, "k": args.k, "committee": [names[x] for x in W.members()]}
        if score is not None:
            out["score"] = str(score)
        print(json.dumps(out))
    else:
        line = _fmt_committee(W, names)
        if score is not None:
            line += f" score {score}"
        print(line)
    return EXIT_OK


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


# -- check -----------------------------------------------------------------------


BUNDLES = ("thm3", "thm4-seq", "thm4-divisor")


def _bundle_for(name: str, rule_name: str | None) -> CounterexampleBundle:
    if name == "thm3":
        rule = parse_rule(rule_name or "pav")
        if not isinstance(rule, ThieleRule):
            raise UsageError("thm3 needs a Thiele rule (av, pav, ccav or thiele:<w>)")
        return build_thiele_counterexample(rule.weights)
    if name == "thm4-seq":
        rule = parse_rule(rule_name or "seq-pav")
        if not isinstance(rule, SeqThieleRule):
            raise UsageError("thm4-seq needs a sequential Thiele rule (seq-pav or seq-thiele:<w>)")
        return build_seq_thiele_counterexample(rule.weights)
    if name == "thm4-divisor":
        return build_divisor_mp_counterexample(DivisorFunction.parse(rule_name or "jefferson"))
    raise UsageError(f"unknown bundle {name!r}; expected one of {', '.join(BUNDLES)}")


def cmd_check(args: argparse.Namespace) -> int:
    axiom = normalize_axiom(args.axiom)
    if args.bundle:
        method = args.rule.removeprefix("mp-divisor:").removeprefix("mp-") if args.bundle == "thm4-divisor" else args.rule
        bundle = _bundle_for(args.bundle, method)
        names = bundle.names
        spec = DomainSpec.unrestricted(bundle.n, bundle.m, bundle.k)
        domain: ProfileDomain | None = ProfileDomain.from_profiles(bundle.m, bundle.path)
        where = f"the {args.bundle} bundle profiles ({len(bundle.path)})"
    else:
        for flag in ("n", "m", "k"):
            if getattr(args, flag) is None:
                raise UsageError(f"--{flag} is required unless --bundle is given")
        spec = _spec_from_args(args)
        _guard_domain_size(spec, args.max_profiles)
        names = tuple("abcdefghijklmnopqrstuvwxyz"[: spec.m])
        domain = None
        where = f"n={spec.n}, m={spec.m}, k={spec.k}"
    rule = parse_rule(args.rule, _parse_tie_order(args.tie_order, names))
    start = time.perf_counter()
    found = find_violations(rule, axiom, spec, domain, None if args.collect_all else 1, args.jobs)
    seconds = time.perf_counter() - start
    if args.json:
        print(json.dumps({
            "rule": args.rule, "axiom": axiom, "domain": where, "passed": not found,
            "witnesses": [w.to_dict(names) for w in found], "seconds": round(seconds, 3),
        }))
    elif not found:
        print(f"PASS {args.rule} satisfies {axiom} on {where} ({seconds:.1f} s)")
    else:
        print(f"FAIL {args.rule} violates {axiom} on {where} ({len(found)} witness{'es' if len(found) > 1 else ''})")
        for w in found:
            print(w.describe(names))
            print(w.to_json(names))
    return EXIT_FAIL if found else EXIT_OK


# -- encode / solve ----------------------------------------------------------------


def _encode_options(args: argparse.Namespace) -> EncodeOptions:
    return EncodeOptions(
        representation_axiom=args.axiom,
        feasibility_filter="cleverWR" if args.cleverWR else "plain",
        symmetry_breaking=args.symmetry_breaking,
        pareto=args.pareto,
        sp_mode=args.sp_mode,
        sp_intersection=args.sp_intersection,
        strategyproofness=not args.no_sp,
    )


def cmd_encode(args: argparse.Namespace) -> int:
    start = time.perf_counter()
    if args.appendix_c:
        # the sub-instance is defined with Pareto, cleverWR and symmetry breaking all on
        opts = EncodeOptions(args.axiom, "cleverWR", True, True, args.sp_mode, args.sp_intersection, None, not args.no_sp)
        inst = encode_appendix_c(opts, args.jobs)
        label = "appendix-c"
        reference = None
    else:
        for flag in ("n", "m", "k"):
            if getattr(args, flag) is None:
                raise UsageError(f"--{flag} is required unless --appendix-c is given")
        spec = _spec_from_args(args)
        _guard_domain_size(spec, args.max_profiles)
        opts = _encode_options(args)
        inst = encode(spec, opts, args.jobs)
        label = f"n={spec.n} m={spec.m} k={spec.k}"
        reference = REFERENCE_BASE_CLAUSES if (spec == DomainSpec(6, 4, 3) and opts == EncodeOptions()) else None
    gen = time.perf_counter() - start
    writer = write_gcnf if args.gcnf else write_dimacs
    if args.output == "-":
        writer(inst, sys.stdout)
        sys.stdout.flush()
    else:
        writer(inst, args.output)
    if args.varmap:
        assert inst.varmap is not None
        write_varmap(inst.varmap, args.varmap)
    stats = dict(inst.stats, generation_seconds=round(gen, 2), instance=label)
    if reference is not None:
        stats["reference_clauses"] = reference
        stats["relative_difference"] = (stats["clauses"] - reference) / reference
    report = sys.stderr if args.output == "-" else sys.stdout
    if args.json:
        print(json.dumps(stats), file=report)
    else:
        print(
            f"{label}: {stats['profiles']} profiles, {stats['variables']:,} variables, {stats['clauses']:,} clauses "
            f"({stats['alo']:,} at-least-one, {stats['amo']:,} at-most-one, {stats['sp']:,} strategyproofness) "
            f"in {gen:.1f} s",
            file=report,
        )
        if reference is not None:
            verdict = "exact match" if stats["clauses"] == reference else f"{stats['relative_difference']:+.3%}"
            print(f"reference clause count {reference:,}: {verdict}", file=report)
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    tmpdir = None
    path = args.cnf
    if path == "-":
        tmpdir = tempfile.mkdtemp(prefix="papp-lab-")
        path = os.path.join(tmpdir, "stdin.cnf")
        with open(path, "w", encoding="ascii") as fh:
            shutil.copyfileobj(sys.stdin, fh)
    try:
        result = solve(path, args.solver_cmd, args.timeout)
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    finally:
        if tmpdir:
            shutil.rmtree(tmpdir, ignore_errors=True)
    if args.json:
        out = {"status": result.status, "seconds": round(result.seconds, 3), "command": result.command}
        if args.model and result.model is not None:
            out["model"] = list(result.model)
        print(json.dumps(out))
    else:
        print(f"{result.status.upper()} in {result.seconds:.2f} s ({result.command})")
        if result.status == "unknown" and result.output:
            print(result.output, file=sys.stderr)
        if args.model and result.model is not None:
            print("v " + " ".join(map(str, result.model)) + " 0")
    if result.status == "unknown":
        return EXIT_SOLVER
    if args.expect and args.expect != result.status:
        return EXIT_FAIL
    return EXIT_OK


# -- demo ------------------------------------------------------------------------------


def cmd_demo(args: argparse.Namespace) -> int:
    if args.which == "thm4-divisor":
        bundle = _bundle_for("thm4-divisor", args.method)
    else:
        bundle = _bundle_for(args.which, args.rule)
    names = bundle.names
    print(bundle.narrative())
    ok = True
    any_violation = False
    for order, expected in zip(bundle.tie_orders, bundle.expected):
        label = ",".join(names[x] for x in order.party_order)
        committees = bundle.committees(order)
        print(f"tie-break order {label}:")
        for i, (p, W) in enumerate(zip(bundle.path, committees)):
            tag = "A" if i == 0 else ("A'" if i == len(bundle.path) - 1 else f"A{i}")
            extra = ""
            if args.which == "thm3":
                extra = f"  score {thiele_score(bundle.rule(order).weights, W, p)}"
            if args.which == "thm4-divisor":
                extra = f"  weights {majoritarian_portioning(p, order).weights}"
            print(f"  f({tag}) = {_fmt_committee(W, names)}{extra}")
        matches = (committees[0], committees[-1]) == expected
        ok &= matches
        witness = bundle.find_violation(order)
        if witness is not None:
            any_violation = True
            print(f"  sp-unrepresented violated: the deviator's ballot holds "
                  f"{witness.details['seats_before']} seat(s) before and {witness.details['seats_after']} after")
        else:
            print("  no violation under this order")
        if not matches:
            print("  committees differ from the expected ones "
                  f"{_fmt_committee(expected[0], names)} -> {_fmt_committee(expected[1], names)}")
    print("verdict: " + ("sp-unrepresented fails" if any_violation else "no violation found"))
    return EXIT_OK if ok and any_violation else EXIT_FAIL


# -- parser ----------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="papp-lab", description=__doc__)
    parser.add_argument("--version", action="version", version=f"papp-lab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("eval", help="evaluate a rule on a JSON profile")
    p.add_argument("profile", help="profile JSON file, or - for stdin")
    p.add_argument("--rule", required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--tie-order", help="party order for tie-breaking, best first (e.g. b,a,c)")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("check", help="exhaustively check an axiom")
    p.add_argument("--rule", required=True)
    p.add_argument("--axiom", required=True, choices=sorted(AXIOM_ALIASES))
    _add_domain_args(p, required=False)
    p.add_argument("--bundle", choices=BUNDLES, help="check on the profiles of a counterexample bundle instead")
    p.add_argument("--tie-order")
    p.add_argument("--collect-all", action="store_true", help="report every witness, not just the first")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("encode", help="write the CNF encoding")
    _add_domain_args(p, required=False)
    p.add_argument("--axiom", choices=("wr", "wpr"), default="wr")
    p.add_argument("--cleverWR", action="store_true", help="use the chain-based committee filter")
    p.add_argument("--symmetry-breaking", action="store_true")
    p.add_argument("--pareto", action="store_true")
    p.add_argument("--sp-mode", choices=("cardinal", "subset", "subset-free"), default="cardinal")
    p.add_argument("--sp-intersection", choices=("multiset", "support"), default="multiset",
                   help="how the set-based sp modes restrict an outcome to the true ballot")
    p.add_argument("--no-sp", action="store_true", help="omit strategyproofness clauses")
    p.add_argument("--appendix-c", action="store_true", help="the 106-profile sub-instance")
    p.add_argument("--gcnf", action="store_true", help="group CNF instead of plain DIMACS")
    p.add_argument("--varmap", help="write the variable map as JSON to this path")
    p.add_argument("-o", "--output", default="-", help="output path (default stdout)")
    p.add_argument("--json", action="store_true", help="report statistics as JSON")
    p.set_defaults(func=cmd_encode)

    p = sub.add_parser("solve", help="run an external SAT solver on a DIMACS file")
    p.add_argument("cnf", nargs="?", default="-", help="DIMACS file, or - for stdin")
    p.add_argument("--solver-cmd", help="command template with {cnf} (and optionally {out})")
    p.add_argument("--expect", choices=("sat", "unsat"))
    p.add_argument("--timeout", type=float)
    p.add_argument("--model", action="store_true", help="print the model when SAT")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("demo", help="replay a counterexample construction")
    p.add_argument("which", choices=BUNDLES)
    p.add_argument("--rule", help="rule for thm3 / thm4-seq (default pav / seq-pav)")
    p.add_argument("--method", default="jefferson", help="divisor method for thm4-divisor: jefferson, webster or a table")
    p.set_defaults(func=cmd_demo)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"papp-lab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"papp-lab {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BrokenPipeError:
        return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
