"""JSON certificates: self-contained evidence documents re-derivable from scratch.

A certificate embeds every tree it talks about (with a sha256 of the
canonical JSON), the exact words, and every rational as a ``p/q`` string.
Verification first checks the stated inequalities on the stated values, then
recomputes every value from the embedded trees.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Union

from .corerect import RectangleCertificate, verify_rectangle
from .gog import GraphOfGroupsSpec, validate_spec
from .lfcore import GoodPairCertificate, LengthOracle, PairKind, classify_pair, good_pair_values, oracle_for
from .mgraph import MarkedMetricGraph, fmt_fraction, parse_fraction
from .words import Alphabet, InputError, Word

Tree = Union[MarkedMetricGraph, GraphOfGroupsSpec]
VERSION = 1


def tree_from_dict(doc: dict, name: str = "") -> Tree:
    kind = doc.get("kind")
    if kind is None:
        kind = "marked_graph" if "marking" in doc else "graph_of_groups"
    if kind == "marked_graph":
        return MarkedMetricGraph.from_dict(doc, name=name)
    if kind == "graph_of_groups":
        spec = GraphOfGroupsSpec.from_dict(doc, name=name)
        report = validate_spec(spec)
        if not report.ok:
            raise InputError("; ".join(report.problems))
        return spec
    raise InputError(f"unknown tree kind {kind!r}")


def load_tree(path: str | Path) -> Tree:
    p = Path(path)
    try:
        doc = json.loads(p.read_text())
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return tree_from_dict(doc, name=p.stem)


def canonical(doc: dict) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def tree_digest(tree: Tree) -> str:
    return hashlib.sha256(canonical(tree.to_dict()).encode()).hexdigest()


def embed_tree(tree: Tree) -> dict:
    return {"sha256": tree_digest(tree), "document": tree.to_dict()}


def _unembed(ref: dict) -> Tree:
    tree = tree_from_dict(ref["document"], name=ref["document"].get("name", ""))
    if tree_digest(tree) != ref["sha256"]:
        raise InputError("embedded tree does not match its sha256")
    return tree


# --- building -------------------------------------------------------------------------


def _values(p) -> dict:
    return {k: fmt_fraction(getattr(p, k)) for k in ("lg", "lh", "lgh", "lghi")}


def good_pair_entry(tree_key: str, gp: GoodPairCertificate) -> dict:
    out = {"tree": tree_key, "g": str(gp.g), "h": str(gp.h), "values": _values(gp)}
    out["values"]["slack_low"] = fmt_fraction(gp.slack_low)
    out["values"]["slack_high"] = fmt_fraction(gp.slack_high)
    if gp.assumptions:
        out["assumptions"] = list(gp.assumptions)
    return out


def pair_entry(role: str, trees: dict[str, Tree], g: Word, h: Word, claim: dict[str, str]) -> dict:
    """role: "combinatorial" (claim maps tree key to a PairKind value) or
    "orientation" (claim maps tree key to ">" or "<" comparing l(gh) with l(gh^-1))."""
    vals = {}
    for key, tree in trees.items():
        c = classify_pair(oracle_for(tree), g, h)
        vals[key] = _values(c)
    return {"role": role, "g": str(g), "h": str(h), "values": vals, "claim": claim}


def make_certificate(kind: str, trees: dict[str, Tree], **sections) -> dict:
    doc = {"certificate": kind, "version": VERSION, "trees": {k: embed_tree(t) for k, t in trees.items()}}
    for k, v in sections.items():
        if v:
            doc[k] = v
    return doc


def good_pair_certificate(trees: dict[str, Tree], gps: dict[str, GoodPairCertificate]) -> dict:
    return make_certificate("good_pair", trees, good_pairs=[good_pair_entry(k, gp) for k, gp in gps.items()])


# --- verification ------------------------------------------------------------------------


@dataclass
class VerifyReport:
    problems: list[str] = field(default_factory=list)
    checked: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems and bool(self.checked)


def _fr(x: str) -> Fraction:
    return parse_fraction(x)


def _check_good_pair(entry: dict, l: LengthOracle, alphabet: Alphabet, rep: VerifyReport) -> None:
    key = entry["tree"]
    v = {k: _fr(x) for k, x in entry["values"].items()}
    lo = v["lg"] + v["lh"] - v["lghi"]
    hi = 2 * min(v["lg"], v["lh"])
    name = f"good pair ({entry['g']}, {entry['h']}) in {key}"
    if "slack_low" in v and v["slack_low"] != lo:
        rep.problems.append(f"{name}: stated slack_low {fmt_fraction(v['slack_low'])} != l(g) + l(h) - l(gh^-1) = {fmt_fraction(lo)}")
    if "slack_high" in v and v["slack_high"] != hi - lo:
        rep.problems.append(f"{name}: stated slack_high {fmt_fraction(v['slack_high'])} != 2 min(l(g), l(h)) - (l(g) + l(h) - l(gh^-1)) = {fmt_fraction(hi - lo)}")
    if not lo > 0:
        rep.problems.append(
            f"{name}: violated 0 < l(g) + l(h) - l(gh^-1): "
            f"{fmt_fraction(v['lg'])} + {fmt_fraction(v['lh'])} - {fmt_fraction(v['lghi'])} = {fmt_fraction(lo)}"
        )
    if not lo < hi:
        rep.problems.append(
            f"{name}: violated l(g) + l(h) - l(gh^-1) < 2 min(l(g), l(h)): {fmt_fraction(lo)} >= {fmt_fraction(hi)}"
        )
    fresh = good_pair_values(l, alphabet.parse(entry["g"]), alphabet.parse(entry["h"]))
    _compare(name, v, fresh, rep)
    rep.checked.append(name)


def _compare(name: str, stated: dict[str, Fraction], fresh, rep: VerifyReport) -> None:
    labels = {"lg": "l(g)", "lh": "l(h)", "lgh": "l(gh)", "lghi": "l(gh^-1)"}
    for k, lab in labels.items():
        got = getattr(fresh, k)
        if stated[k] != got:
            rep.problems.append(f"{name}: stated {lab} = {fmt_fraction(stated[k])} but recomputed {fmt_fraction(got)}")


def _check_pair(entry: dict, oracles: dict[str, LengthOracle], alphabet: Alphabet, rep: VerifyReport) -> None:
    g, h = alphabet.parse(entry["g"]), alphabet.parse(entry["h"])
    name = f"{entry['role']} pair ({entry['g']}, {entry['h']})"
    for key, claim in entry["claim"].items():
        v = {k: _fr(x) for k, x in entry["values"][key].items()}
        s = {k: fmt_fraction(x) for k, x in v.items()}
        where = f"{name} in {key}"
        if claim == PairKind.OVERLAP.value or claim in (">", "<"):
            if v["lgh"] == v["lghi"]:
                rep.problems.append(f"{where}: violated l(gh) != l(gh^-1): {s['lgh']} = {s['lghi']}")
            if claim == ">" and not v["lgh"] > v["lghi"]:
                rep.problems.append(f"{where}: violated l(gh) > l(gh^-1): {s['lgh']} <= {s['lghi']}")
            if claim == "<" and not v["lgh"] < v["lghi"]:
                rep.problems.append(f"{where}: violated l(gh) < l(gh^-1): {s['lgh']} >= {s['lghi']}")
        elif claim == PairKind.DISJOINT.value:
            if v["lgh"] != v["lghi"]:
                rep.problems.append(f"{where}: violated l(gh) = l(gh^-1): {s['lgh']} != {s['lghi']}")
            if not v["lgh"] > v["lg"] + v["lh"]:
                rep.problems.append(
                    f"{where}: violated l(gh) > l(g) + l(h): {s['lgh']} <= {s['lg']} + {s['lh']}"
                )
        else:
            rep.problems.append(f"{where}: unknown claim {claim!r}")
        _compare(where, v, classify_pair(oracles[key], g, h), rep)
    claims = entry["claim"]
    if entry["role"] == "combinatorial" and sorted(claims.values()) != ["Disjoint", "Overlap"]:
        rep.problems.append(f"{name}: a combinatorial witness needs Overlap in one tree and Disjoint in the other")
    if entry["role"] == "orientation" and sorted(claims.values()) != ["<", ">"]:
        rep.problems.append(f"{name}: an orientation witness needs opposite strict orders")
    rep.checked.append(name)


def _check_scan(scan: dict, trees: dict[str, Tree], oracles: dict[str, LengthOracle], rep: VerifyReport) -> None:
    """Re-run a bounded compatibility scan and confirm it still finds nothing."""
    from .corerect import SearchBudget, rectangle_search
    from .lfcore import ElementSet, compatible_on

    A, B = trees["A"], trees["B"]
    L = int(scan["len_bound"])
    res = compatible_on(oracles["A"], oracles["B"], ElementSet.ball(A.alphabet, L))
    if res.incompatible:
        g, h = res.witness
        rep.problems.append(f"scan up to length {L}: {res.verdict.value} witness ({g}, {h})")
    if res.pairs_checked != int(scan["pairs_checked"]):
        rep.problems.append(f"scan up to length {L}: stated {scan['pairs_checked']} pairs, recounted {res.pairs_checked}")
    if scan.get("budget") is not None:
        budget = SearchBudget(*scan["budget"])
        if isinstance(A, MarkedMetricGraph) and isinstance(B, MarkedMetricGraph):
            if rectangle_search(A, B, budget) is not None:
                rep.problems.append(f"rectangle search at budget {tuple(scan['budget'])} finds a rectangle")
    rep.checked.append(f"compatibility scan up to length {L}")


def verify_certificate(doc: dict, given: dict[str, Tree] | None = None) -> VerifyReport:
    """Re-derive every claim of a certificate document.

    ``given`` maps tree keys to trees loaded from files; they must match the
    embedded copies byte for byte (canonical JSON).
    """
    rep = VerifyReport()
    try:
        if doc.get("version") != VERSION:
            raise InputError(f"unsupported certificate version {doc.get('version')!r}")
        trees = {k: _unembed(ref) for k, ref in doc["trees"].items()}
        for k, t in (given or {}).items():
            if k not in trees:
                rep.problems.append(f"tree {k} is not referenced by the certificate")
            elif tree_digest(t) != tree_digest(trees[k]):
                rep.problems.append(f"tree {k} differs from the embedded copy (sha256 mismatch)")
        oracles = {k: oracle_for(t) for k, t in trees.items()}
        alphabet = next(iter(trees.values())).alphabet
        for entry in doc.get("good_pairs", []):
            _check_good_pair(entry, oracles[entry["tree"]], alphabet, rep)
        for entry in doc.get("pairs", []):
            _check_pair(entry, oracles, alphabet, rep)
        if "rectangle" in doc:
            A, B = trees["A"], trees["B"]
            if not (isinstance(A, MarkedMetricGraph) and isinstance(B, MarkedMetricGraph)):
                raise InputError("rectangles need two marked graphs")
            rect = RectangleCertificate.from_dict(A, B, doc["rectangle"])
            rep.problems.extend("rectangle " + p for p in verify_rectangle(A, B, rect))
            rep.checked.append("rectangle")
        if "scan" in doc:
            _check_scan(doc["scan"], trees, oracles, rep)
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed certificate: missing or bad field {exc}") from None
    return rep


def write_certificate(doc: dict, path: str | Path) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n")


def read_certificate(path: str | Path) -> dict:
    try:
        return json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise InputError(f"{path}: no such file") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
