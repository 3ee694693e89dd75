"""Command-line front end.

Exit codes: 0 verified / compatible up to the bound, 1 incompatible or a
check failed with a witness, 2 unknown, 3 input error.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import certificates as C
from .corerect import (
    RectangleError,
    SearchBudget,
    certificate_from_rectangle,
    check_pair_witness,
    rectangle_from_pair,
    rectangle_search,
    subarc_spot_check,
)
from .lfcore import (
    ElementSet,
    GoodPairError,
    check_axioms,
    classify_pair,
    compatible_on,
    dagger_oracle,
    good_pair_values,
    oracle_for,
    recheck_witness,
    simultaneous_good_pair,
    sum_oracle,
)
from .mgraph import MarkedMetricGraph, fmt_fraction
from .refine import TreeMetricError, build_tree, displacement_check, orbit_metric, verify_refinement
from .words import AlphabetMismatch, InputError, enumerate_words

EXIT_OK, EXIT_INCOMPATIBLE, EXIT_UNKNOWN, EXIT_INPUT = 0, 1, 2, 3


def _budget(text: str) -> SearchBudget:
    try:
        w, a = (int(x) for x in text.split(","))
        return SearchBudget(w, a)
    except ValueError:
        raise argparse.ArgumentTypeError(f"budget must be W,A with W >= 1 and A >= 0, got {text!r}") from None


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return n


class Report:
    """Collects lines (text mode) and a dict (json mode) with the same content."""

    def __init__(self, fmt: str):
        self.fmt = fmt
        self.data: dict = {}
        self.lines: list[str] = []

    def put(self, key: str, value, line: str | None = None):
        self.data[key] = value
        if line is None:
            shown = value if isinstance(value, (str, int)) else json.dumps(value, ensure_ascii=False)
            line = f"{key}: {shown}"
        self.lines.append(line)

    def emit(self, out=None):
        out = out or sys.stdout
        if self.fmt == "json":
            print(json.dumps(self.data, indent=2, ensure_ascii=False), file=out)
        else:
            print("\n".join(self.lines), file=out)


def _read_words(alphabet, args) -> list:
    words = [alphabet.parse(t) for t in args.words]
    if args.words_file:
        text = Path(args.words_file).read_text()
        for i, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                words.append(alphabet.parse(line))
            except InputError as exc:
                raise InputError(f"{args.words_file}: line {i}: {exc}") from None
    return words


def cmd_length(args) -> int:
    tree = C.load_tree(args.tree)
    l = oracle_for(tree)
    words = _read_words(tree.alphabet, args)
    rep = Report(args.format)
    rows = [(str(w) or "1", fmt_fraction(l(w))) for w in words]
    rep.data = {"tree": tree.name, "lengths": [{"word": w, "length": v} for w, v in rows]}
    rep.lines = [f"{w}\t{v}" for w, v in rows]
    rep.emit()
    return EXIT_OK


def cmd_axioms(args) -> int:
    trees = [C.load_tree(p) for p in args.trees]
    l = oracle_for(trees[0])
    for t in trees[1:]:
        l = sum_oracle(l, oracle_for(t))
    S = ElementSet.ball(l.alphabet, args.len_bound)
    res = check_axioms(l, S)
    rep = Report(args.format)
    rep.put("elements", len(S))
    for k, v in res.verdicts.items():
        rep.put(f"axiom {k}", "pass" if v else "fail")
    if res.witness:
        rep.put("VI witness", [str(w) for w in res.witness])
    rep.data["violations"] = [
        {"axiom": v.axiom, "words": list(v.words), "detail": v.detail} for v in res.violations[:10]
    ]
    rep.lines += [f"violation {v.axiom} at {', '.join(v.words)}: {v.detail}" for v in res.violations[:10]]
    rep.emit()
    return EXIT_OK if res.ok else EXIT_INCOMPATIBLE


def _lf_pairs(res, trees, l, m) -> list[dict]:
    out = []
    if res.combinatorial:
        g, h = res.combinatorial
        claim = {k: classify_pair(o, g, h).kind.value for k, o in (("A", l), ("B", m))}
        out.append(C.pair_entry("combinatorial", trees, g, h, claim))
    if res.orientation:
        g, h = res.orientation
        claim = {}
        for k, o in (("A", l), ("B", m)):
            c = classify_pair(o, g, h)
            claim[k] = ">" if c.lgh > c.lghi else "<"
        out.append(C.pair_entry("orientation", trees, g, h, claim))
    return out


def compat_analysis(A, B, len_bound: int, budget: SearchBudget | None, seed: int = 0) -> tuple[str, dict, dict]:
    """(verdict, certificate document, summary)."""
    if A.alphabet != B.alphabet:
        raise AlphabetMismatch("trees over different alphabets")
    l, m = oracle_for(A), oracle_for(B)
    trees = {"A": A, "B": B}
    res = compatible_on(l, m, ElementSet.ball(A.alphabet, len_bound))
    summary: dict = {"pairs_checked": res.pairs_checked, "length_function_verdict": res.verdict.value}
    pairs = _lf_pairs(res, trees, l, m)
    if res.incompatible and not recheck_witness(l, m, res):
        summary["problem"] = "length-function witness failed its re-check"
        return "Unknown", C.make_certificate("incompatibility", trees, pairs=pairs), summary
    rect = None
    geometric = isinstance(A, MarkedMetricGraph) and isinstance(B, MarkedMetricGraph)
    if geometric and budget is not None:
        subarc_spot_check(A, 2, 3, 20, seed)
        subarc_spot_check(B, 2, 3, 20, seed)
        rect = rectangle_search(A, B, budget)
        summary["rectangle"] = "found" if rect else f"none up to budget ({budget.word_len},{budget.anchor_len})"
    if rect is not None:
        try:
            pw = certificate_from_rectangle(A, B, rect)
            back = rectangle_from_pair(A, B, pw.rho, pw.sigma)
            again = certificate_from_rectangle(A, B, back)
        except RectangleError as exc:
            summary["problem"] = f"rectangle conversion failed: {exc}"
            doc = C.make_certificate("incompatibility", trees, pairs=pairs, rectangle=rect.to_dict(A, B))
            return "Incompatible", doc, summary
        if check_pair_witness(A, B, again):
            summary["problem"] = "round trip produced an invalid pair"
            return "Unknown", C.make_certificate("incompatibility", trees, pairs=pairs), summary
        pairs.append(C.pair_entry("combinatorial", trees, pw.rho, pw.sigma, {"A": "Disjoint", "B": "Overlap"}))
        cA, cB = classify_pair(l, pw.c, pw.gamma), classify_pair(m, pw.c, pw.gamma)
        pairs.append(
            C.pair_entry(
                "orientation", trees, pw.c, pw.gamma,
                {"A": ">" if cA.lgh > cA.lghi else "<", "B": ">" if cB.lgh > cB.lghi else "<"},
            )
        )
        summary["rho_sigma"] = [str(pw.rho), str(pw.sigma)]
        summary["exponents"] = pw.exponents
        summary["round_trip_rectangle"] = back.to_dict(A, B)
        doc = C.make_certificate("incompatibility", trees, pairs=pairs, rectangle=rect.to_dict(A, B))
        return "Incompatible", doc, summary
    if res.incompatible:
        return "Incompatible", C.make_certificate("incompatibility", trees, pairs=pairs), summary
    scan = {"len_bound": len_bound, "pairs_checked": res.pairs_checked}
    if geometric and budget is not None:
        scan["budget"] = [budget.word_len, budget.anchor_len]
    return "CompatibleUpToBound", C.make_certificate("compatibility_scan", trees, scan=scan), summary


def cmd_compat(args) -> int:
    A, B = C.load_tree(args.tree_a), C.load_tree(args.tree_b)
    verdict, doc, summary = compat_analysis(A, B, args.len_bound, args.budget, args.seed)
    rep = Report(args.format)
    rep.put("verdict", verdict)
    for k, v in summary.items():
        rep.put(k, v)
    out = args.out or ("incompatibility.json" if verdict == "Incompatible" else "compatibility.json")
    C.write_certificate(doc, out)
    rep.put("certificate", out)
    rep.emit()
    return {"Incompatible": EXIT_INCOMPATIBLE, "CompatibleUpToBound": EXIT_OK}.get(verdict, EXIT_UNKNOWN)


def cmd_good_pair(args) -> int:
    trees = {k: C.load_tree(p) for k, p in zip("AB", args.trees)}
    ors = [oracle_for(t) for t in trees.values()]
    m = ors[1] if len(ors) > 1 else ors[0]
    found = simultaneous_good_pair(ors[0], m, args.len_bound)
    rep = Report(args.format)
    if found is None:
        rep.put("verdict", f"NotFound up to length {args.len_bound}")
        rep.emit()
        return EXIT_UNKNOWN
    gps = dict(zip(trees, found))
    doc = C.good_pair_certificate(trees, gps)
    gp = found[0]
    rep.put("good_pair", [str(gp.g), str(gp.h)])
    for k, c in gps.items():
        rep.put(f"{k} lengths", {x: fmt_fraction(getattr(c, x)) for x in ("lg", "lh", "lgh", "lghi")})
    if args.out:
        C.write_certificate(doc, args.out)
        rep.put("certificate", args.out)
    rep.emit()
    return EXIT_OK


def cmd_based_length(args) -> int:
    tree = C.load_tree(args.tree)
    l = oracle_for(tree)
    if args.good_pair:
        g, h = (tree.alphabet.parse(x) for x in args.good_pair)
        gp = good_pair_values(l, g, h)
    else:
        found = simultaneous_good_pair(l, l, args.len_bound)
        if found is None:
            raise InputError(f"no good pair up to length {args.len_bound}; pass --good-pair")
        gp = found[0]
    P = dagger_oracle(l, gp)
    words = _read_words(tree.alphabet, args)
    rep = Report(args.format)
    rep.put("good_pair", [str(gp.g), str(gp.h)])
    rows = [(str(w) or "1", fmt_fraction(P(w))) for w in words]
    rep.data["based_lengths"] = [{"word": w, "length": v} for w, v in rows]
    rep.lines += [f"{w}\t{v}" for w, v in rows]
    rep.emit()
    return EXIT_OK


def cmd_refine(args) -> int:
    A, B = C.load_tree(args.tree_a), C.load_tree(args.tree_b)
    l, m = oracle_for(A), oracle_for(B)
    rep = Report(args.format)
    res = compatible_on(l, m, ElementSet.ball(A.alphabet, args.len_bound))
    if res.incompatible:
        doc = C.make_certificate("incompatibility", {"A": A, "B": B}, pairs=_lf_pairs(res, {"A": A, "B": B}, l, m))
        out = args.certificate_out or "incompatibility.json"
        C.write_certificate(doc, out)
        rep.put("verdict", f"refused: {res.verdict.value}")
        rep.put("certificate", out)
        rep.emit()
        return EXIT_INCOMPATIBLE
    found = simultaneous_good_pair(l, m, args.len_bound)
    if found is None:
        rep.put("verdict", f"Unknown: no simultaneous good pair up to length {args.len_bound}")
        rep.emit()
        return EXIT_UNKNOWN
    gp = found[0]
    lm = sum_oracle(l, m)
    P = dagger_oracle(lm, gp)
    sample = list(enumerate_words(A.alphabet, args.sample_bound))
    try:
        om = orbit_metric(P, sample)
        tree = build_tree(om)
    except TreeMetricError as exc:
        rep.put("verdict", f"Unknown: {exc}")
        rep.emit()
        return EXIT_UNKNOWN
    check = verify_refinement(l, m, gp, sample, tree)
    disp_ok, _ = displacement_check(lm, P, sample)
    rep.put("good_pair", [str(gp.g), str(gp.h)])
    rep.put("sample", len(sample))
    rep.put("nodes", tree.n_nodes)
    rep.put("l1", "pass" if check.l1_ok else "fail")
    rep.put("alignment", "pass" if check.alignment_ok else "fail")
    rep.put("no_collapse", "pass" if check.no_collapse_ok else "fail")
    rep.put("displacement", "pass" if disp_ok else "fail")
    if check.first_violation:
        rep.put("first_violation", check.first_violation)
    out = args.out or "refinement.json"
    doc = tree.to_dict()
    doc["good_pair"] = C.good_pair_certificate({"A": A, "B": B}, dict(zip("AB", found)))
    Path(out).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n")
    Path(out).with_suffix(".nwk").write_text(tree.to_newick() + "\n")
    rep.put("tree", out)
    rep.emit()
    return EXIT_OK if check.ok and disp_ok else EXIT_INCOMPATIBLE


def cmd_verify(args) -> int:
    doc = C.read_certificate(args.certificate)
    given = {}
    for spec in args.tree or []:
        key, _, path = spec.partition("=")
        if not path:
            raise InputError(f"--tree expects KEY=FILE, got {spec!r}")
        given[key] = C.load_tree(path)
    res = C.verify_certificate(doc, given)
    rep = Report(args.format)
    rep.put("verdict", "pass" if res.ok else "fail")
    rep.put("checked", res.checked, f"checked: {len(res.checked)} claims")
    rep.put("problems", res.problems, "\n".join(f"FAIL {p}" for p in res.problems) or "problems: none")
    rep.emit()
    return EXIT_OK if res.ok else EXIT_INCOMPATIBLE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="gtrees", description="Length functions of free-group actions on trees.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("text", "json"), default="text")
    common.add_argument("--seed", type=int, default=0, help="seed for randomized spot checks only")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("length", parents=[common], help="translation lengths of words")
    s.add_argument("tree")
    s.add_argument("words", nargs="*")
    s.add_argument("--words-file")
    s.set_defaults(func=cmd_length)

    s = sub.add_parser("axioms", parents=[common], help="check axioms I-VI (of the sum, if several trees)")
    s.add_argument("trees", nargs="+")
    s.add_argument("--len-bound", type=_positive, default=3)
    s.set_defaults(func=cmd_axioms)

    s = sub.add_parser("compat", parents=[common], help="compatibility verdict with certificates")
    s.add_argument("tree_a")
    s.add_argument("tree_b")
    s.add_argument("--len-bound", type=_positive, default=4)
    s.add_argument("--budget", type=_budget, default=SearchBudget(6, 4))
    s.add_argument("--out")
    s.set_defaults(func=cmd_compat)

    s = sub.add_parser("good-pair", parents=[common], help="simultaneous good pair")
    s.add_argument("trees", nargs="+")
    s.add_argument("--len-bound", type=_positive, default=3)
    s.add_argument("--out")
    s.set_defaults(func=cmd_good_pair)

    s = sub.add_parser("based-length", parents=[common], help="based lengths recovered from a good pair")
    s.add_argument("tree")
    s.add_argument("words", nargs="*")
    s.add_argument("--words-file")
    s.add_argument("--good-pair", nargs=2, metavar=("G", "H"))
    s.add_argument("--len-bound", type=_positive, default=3)
    s.set_defaults(func=cmd_based_length)

    s = sub.add_parser("refine", parents=[common], help="finite common refinement")
    s.add_argument("tree_a")
    s.add_argument("tree_b")
    s.add_argument("--sample-bound", type=_positive, default=2)
    s.add_argument("--len-bound", type=_positive, default=3)
    s.add_argument("--out")
    s.add_argument("--certificate-out")
    s.set_defaults(func=cmd_refine)

    s = sub.add_parser("verify", parents=[common], help="re-derive a certificate")
    s.add_argument("certificate")
    s.add_argument("--tree", action="append", metavar="KEY=FILE")
    s.set_defaults(func=cmd_verify)
    return p


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (InputError, AlphabetMismatch, GoodPairError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
