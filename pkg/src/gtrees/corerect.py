"""Rectangles in the core of two free simplicial trees, and the element
constructions that turn them into length-function witnesses (and back).

Horizon conditions are checked on whole edges.  Directions are constant on
the interior of a simplicial edge, so every closed subarc of an open edge
sees the same horizon as the edge itself; ``subarc_spot_check`` tests this
independently with a distance-based crossing test at random interior points.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator, Sequence

from .lfcore import PairKind, classify_pair, mgraph_oracle
from .mgraph import MarkedMetricGraph, Path_, TreePoint, enumerate_points, reverse_path, tighten
from .words import AlphabetMismatch, Word, enumerate_words

MAX_INCREMENTS = 32


class RectangleError(ValueError):
    pass


@dataclass(frozen=True)
class EdgeLift:
    anchor: Path_
    edge: int

    def reversed(self) -> "EdgeLift":
        return EdgeLift(tighten(self.anchor + (self.edge,)), self.edge ^ 1)

    @property
    def head(self) -> Path_:
        return tighten(self.anchor + (self.edge,))

    def to_dict(self, G: MarkedMetricGraph) -> dict:
        return {"anchor": G.graph.format_path(self.anchor), "edge": G.graph.edge_name(self.edge)}

    @classmethod
    def from_dict(cls, G: MarkedMetricGraph, doc: dict) -> "EdgeLift":
        lift = cls(G.graph.parse_path(doc["anchor"]), G.graph.parse_edge(doc["edge"]))
        G.check_point(TreePoint(lift.anchor, lift.edge, Fraction(0)))
        return lift


CORNERS = ("a,b", "abar,b", "a,bbar", "abar,bbar")


@dataclass(frozen=True)
class SearchBudget:
    word_len: int
    anchor_len: int

    def __post_init__(self):
        if self.word_len < 1 or self.anchor_len < 0:
            raise ValueError("budget needs word length >= 1 and anchor length >= 0")


@dataclass(frozen=True)
class RectangleCertificate:
    a: EdgeLift
    b: EdgeLift
    witnesses: dict[str, Word] = field(hash=False)

    def to_dict(self, A: MarkedMetricGraph, B: MarkedMetricGraph) -> dict:
        return {
            "a": self.a.to_dict(A),
            "b": self.b.to_dict(B),
            "witnesses": {k: str(self.witnesses[k]) for k in CORNERS},
        }

    @classmethod
    def from_dict(cls, A: MarkedMetricGraph, B: MarkedMetricGraph, doc: dict) -> "RectangleCertificate":
        return cls(
            EdgeLift.from_dict(A, doc["a"]),
            EdgeLift.from_dict(B, doc["b"]),
            {k: A.alphabet.parse(doc["witnesses"][k]) for k in CORNERS},
        )


# --- horizons ----------------------------------------------------------------------


def horizon(G: MarkedMetricGraph, e: EdgeLift, w: Word) -> bool:
    return G.horizon_member(e.anchor, e.edge, w)


def corner_sides(corner: str) -> tuple[bool, bool]:
    """(uses a rather than abar, uses b rather than bbar)."""
    sa, sb = corner.split(",")
    return sa == "a", sb == "b"


def verify_rectangle(A: MarkedMetricGraph, B: MarkedMetricGraph, rect: RectangleCertificate) -> list[str]:
    """Re-check every corner with horizon_member only; returns the failures."""
    problems = []
    for corner in CORNERS:
        w = rect.witnesses.get(corner)
        if w is None or not w:
            problems.append(f"corner {corner}: missing or trivial witness")
            continue
        ua, ub = corner_sides(corner)
        ea = rect.a if ua else rect.a.reversed()
        eb = rect.b if ub else rect.b.reversed()
        if not horizon(A, ea, w):
            problems.append(f"corner {corner}: {w} not in the A-horizon")
        if not horizon(B, eb, w):
            problems.append(f"corner {corner}: {w} not in the B-horizon")
    return problems


class _HorizonIndex:
    """Bit masks (one bit per candidate word) of horizon membership for edge lifts."""

    def __init__(self, G: MarkedMetricGraph, words: list[Word], depth: int):
        self.G = G
        self.all = (1 << len(words)) - 1
        self.prefix: dict[Path_, int] = {}
        for i, w in enumerate(words):
            ray = G.forward_ray(w, depth + 1)
            for k in range(depth + 2):
                p = ray[:k]
                self.prefix[p] = self.prefix.get(p, 0) | (1 << i)

    def mask(self, e: EdgeLift) -> int:
        P = e.anchor
        if P and e.edge == P[-1] ^ 1:
            return self.all & ~self.prefix.get(P, 0)
        return self.prefix.get(P + (e.edge,), 0)


def a_edge_representatives(G: MarkedMetricGraph) -> list[EdgeLift]:
    """One lift per edge of the quotient graph, anchored by a BFS tree from the base vertex."""
    g = G.graph
    to: dict[int, Path_] = {G.base: ()}
    queue = [G.base]
    while queue:
        v = queue.pop(0)
        for e in g.out_edges(v):
            if g.terminus(e) not in to:
                to[g.terminus(e)] = to[v] + (e,)
                queue.append(g.terminus(e))
    return [EdgeLift(to[g.origin(2 * i)], 2 * i) for i in range(g.n_edges)]


def edge_lifts(G: MarkedMetricGraph, radius: int) -> Iterator[EdgeLift]:
    for P in enumerate_points(G, radius):
        at = G.graph.terminus(P[-1]) if P else G.base
        for e in G.graph.out_edges(at):
            yield EdgeLift(P, e)


def _lowest(mask: int) -> int:
    return (mask & -mask).bit_length() - 1


def rectangle_search(
    A: MarkedMetricGraph, B: MarkedMetricGraph, budget: SearchBudget
) -> RectangleCertificate | None:
    """First rectangle (canonical order) within the budget, or None."""
    if A.alphabet != B.alphabet:
        raise AlphabetMismatch("trees over different alphabets")
    words = [w for w in enumerate_words(A.alphabet, budget.word_len) if w]
    a_lifts = a_edge_representatives(A)
    depth_a = max(len(e.anchor) + 1 for e in a_lifts)
    ia = _HorizonIndex(A, words, depth_a)
    ib = _HorizonIndex(B, words, budget.anchor_len + 1)
    b_lifts = list(edge_lifts(B, budget.anchor_len))
    b_masks = [(eb, ib.mask(eb), ib.mask(eb.reversed())) for eb in b_lifts]
    for ea in a_lifts:
        pa, na = ia.mask(ea), ia.mask(ea.reversed())
        for eb, pb, nb in b_masks:
            cells = (pa & pb, na & pb, pa & nb, na & nb)
            if all(cells):
                wit = {c: words[_lowest(m)] for c, m in zip(CORNERS, cells)}
                rect = RectangleCertificate(ea, eb, wit)
                assert not verify_rectangle(A, B, rect)
                return rect
    return None


@dataclass
class TwiceLightScan:
    verdict: str  # "Unknown" (candidates seen, emptiness unproved) or "NoCandidate"
    candidates: list[tuple[EdgeLift, EdgeLift]]


def twice_light_scan(A: MarkedMetricGraph, B: MarkedMetricGraph, budget: SearchBudget, limit: int = 20) -> TwiceLightScan:
    """Edge pairs whose off-diagonal corners look empty up to the word budget.

    Emptiness of a horizon intersection is only refuted by a witness, never
    proved by a finite scan, so candidates carry the verdict Unknown.
    """
    words = [w for w in enumerate_words(A.alphabet, budget.word_len) if w]
    a_lifts = a_edge_representatives(A)
    ia = _HorizonIndex(A, words, max(len(e.anchor) + 1 for e in a_lifts))
    ib = _HorizonIndex(B, words, budget.anchor_len + 1)
    found = []
    for ea in a_lifts:
        pa, na = ia.mask(ea), ia.mask(ea.reversed())
        for eb in edge_lifts(B, budget.anchor_len):
            pb, nb = ib.mask(eb), ib.mask(eb.reversed())
            if (pa & pb) and (na & nb) and not (pa & nb) and not (na & pb):
                found.append((ea, eb))
                if len(found) >= limit:
                    return TwiceLightScan("Unknown", found)
    return TwiceLightScan("Unknown" if found else "NoCandidate", found)


def _crossing_side(G: MarkedMetricGraph, e: EdgeLift, w: Word, s: Fraction, t: Fraction) -> bool:
    """Whether the attracting end of w lies on the t(e) side of the interior subarc [s, t] of e."""
    ell = G.translation_length(w)
    d0 = (G.based_length(TreePoint(e.anchor), w) - ell) / 2
    n = int((d0 + G.graph.length(e.edge)) // ell) + 2
    q = TreePoint(G.act(w**n, e.anchor))
    return G.distance(q, TreePoint(e.anchor, e.edge, t)) < G.distance(q, TreePoint(e.anchor, e.edge, s))


def subarc_spot_check(G: MarkedMetricGraph, radius: int, word_len: int, samples: int, seed: int = 0) -> int:
    """Compare whole-edge horizons with interior-subarc crossing tests; raise on divergence."""
    rng = random.Random(seed)
    lifts = list(edge_lifts(G, radius))
    words = [w for w in enumerate_words(G.alphabet, word_len) if w]
    for _ in range(samples):
        e = rng.choice(lifts)
        w = rng.choice(words)
        L = G.graph.length(e.edge)
        s = L * Fraction(rng.randint(1, 49), 100)
        t = s + (L - s) * Fraction(rng.randint(1, 99), 100)
        whole = horizon(G, e, w)
        if _crossing_side(G, e, w, s, t) != whole:
            raise AssertionError(
                f"subarc horizon of {e} at [{s}, {t}] disagrees with whole-edge verdict for {w}"
            )
    return samples


# --- axis constructions --------------------------------------------------------------


def edge_on_axis(G: MarkedMetricGraph, e: EdgeLift, w: Word) -> int:
    """+1 if e lies on C_w oriented like w, -1 if oriented against it, 0 otherwise."""
    ax = G.axis(w)
    i, j = G.on_axis(e.anchor, ax), G.on_axis(e.head, ax)
    if i is None or j is None or abs(j - i) != 1:
        return 0
    return 1 if j > i else -1


def axis_beyond(G: MarkedMetricGraph, e: EdgeLift, w: Word) -> bool:
    """Whether C_w lies in the component of T minus the open edge e containing t(e)."""
    o = e.anchor
    fo = G.act(w, o)
    ell = G.translation_length(w)
    d = (G.vertex_distance(o, fo) - ell) / 2
    geo = tighten(reverse_path(o) + fo)
    return d >= G.graph.length(e.edge) and bool(geo) and geo[0] == e.edge


def _arc_distance(G: MarkedMetricGraph, I: tuple[Path_, Path_], J: tuple[Path_, Path_]) -> Fraction:
    (x1, y1), (x2, y2) = I, J
    d = G.vertex_distance
    li, lj = d(x1, y1), d(x2, y2)
    s = min(d(x1, x2) + d(y1, y2), d(x1, y2) + d(y1, x2))
    return max(Fraction(0), (s - li - lj) / 2)


def _start_exponent(G: MarkedMetricGraph, e: EdgeLift, g: Word, h: Word) -> int:
    """Threshold from the case analysis on C_g and C_h (bridge, bounded overlap, common axis)."""
    rel = G.axis_relation(g, h)
    mn = min(G.translation_length(g), G.translation_length(h))
    le = G.graph.length(e.edge)
    E = (e.anchor, e.head)
    if rel.kind == "disjoint":
        num = _arc_distance(G, E, rel.bridge) + le
    elif rel.kind == "overlap" and rel.length is None:
        return 1
    else:
        num = _arc_distance(G, E, rel.arc) + le + (rel.length or 0)
    return int(num // mn) + 1


def _power_product(g: Word, h: Word, n: int) -> Word:
    # left-action form of the right-action product h^-n g^n
    return g**n * h ** (-n)


def arc_axis_witness(G: MarkedMetricGraph, e: EdgeLift, g: Word, h: Word) -> tuple[int, Word]:
    """n and f = g^n h^-n with e on C_f, oriented like f."""
    if not horizon(G, e, g):
        raise RectangleError(f"{g} is not in the horizon of the edge")
    if not horizon(G, e.reversed(), h):
        raise RectangleError(f"{h} is not in the horizon of the reversed edge")
    n = _start_exponent(G, e, g, h)
    for _ in range(MAX_INCREMENTS + 1):
        f = _power_product(g, h, n)
        if f and edge_on_axis(G, e, f) == 1:
            return n, f
        n += 1
    raise RectangleError("no exponent up to the increment cap puts the edge on the axis")


def same_end(G: MarkedMetricGraph, g: Word, h: Word) -> bool:
    ag, ah = G.axis(g), G.axis(h)
    n = max(len(ag.entry), len(ah.entry)) + len(ag.period) + len(ah.period)
    return G.forward_ray(g, n) == G.forward_ray(h, n)


def pos_axis_witness(G: MarkedMetricGraph, e: EdgeLift, g: Word, h: Word) -> tuple[int, Word]:
    """n and f = g^n h^-n with C_f inside the component beyond e."""
    if not (horizon(G, e, g) and horizon(G, e, h)):
        raise RectangleError("both elements must lie in the horizon of the edge")
    if same_end(G, g, h):
        raise RectangleError(f"{g} and {h} have the same attracting end")
    n = _start_exponent(G, e, g, h)
    for _ in range(MAX_INCREMENTS + 1):
        f = _power_product(g, h, n)
        if f and axis_beyond(G, e, f):
            return n, f
        n += 1
    raise RectangleError("no exponent up to the increment cap moves the axis beyond the edge")


# --- certificate conversions -------------------------------------------------------------


@dataclass
class PairWitness:
    rho: Word
    sigma: Word
    c: Word
    gamma: Word
    exponents: dict[str, int]
    adjusted: list[str]


def _separate_ends(
    G: MarkedMetricGraph, H: MarkedMetricGraph, g: Word, alpha: Word, ea: EdgeLift, eb: EdgeLift
) -> tuple[Word, bool]:
    """Replace g by g^N s g^-N when g and alpha share an end in G.

    The replacement stays in the horizons of ea (in G) and eb (in H).
    """
    if not same_end(G, g, alpha):
        return g, False
    for s in enumerate_words(G.alphabet, 3):
        if not s:
            continue
        for N in range(1, MAX_INCREMENTS + 1):
            cand = s.conjugate(g**N)
            if horizon(G, ea, cand) and horizon(H, eb, cand) and not same_end(G, cand, alpha):
                return cand, True
    raise RectangleError("could not separate the ends of the chosen witnesses")


def certificate_from_rectangle(
    A: MarkedMetricGraph, B: MarkedMetricGraph, rect: RectangleCertificate
) -> PairWitness:
    """Elements rho, sigma in D(A) and O(B), and c, gamma in O(A), O(B) with opposite orientations."""
    problems = verify_rectangle(A, B, rect)
    if problems:
        raise RectangleError("rectangle fails re-verification: " + "; ".join(problems))
    a, b = rect.a, rect.b
    abar, bbar = a.reversed(), b.reversed()
    g = rect.witnesses["a,b"]
    h = rect.witnesses["abar,bbar"]
    alpha = rect.witnesses["a,bbar"]
    beta = rect.witnesses["abar,b"]
    adjusted = []
    g, moved = _separate_ends(A, B, g, alpha, a, b)
    if moved:
        adjusted.append("g")
    h, moved = _separate_ends(A, B, h, beta, abar, bbar)
    if moved:
        adjusted.append("h")

    def both(first, second, n):
        for _ in range(MAX_INCREMENTS + 1):
            if first(n) and second(n):
                return n
            n += 1
        raise RectangleError("exponent search exceeded the increment cap")

    nb, _ = arc_axis_witness(B, b, g, alpha)
    na, _ = pos_axis_witness(A, a, g, alpha)
    N = both(
        lambda n: edge_on_axis(B, b, _power_product(g, alpha, n)) == 1,
        lambda n: axis_beyond(A, a, _power_product(g, alpha, n)),
        max(na, nb),
    )
    rho = _power_product(g, alpha, N)
    mb, _ = arc_axis_witness(B, bbar, h, beta)
    ma, _ = pos_axis_witness(A, abar, h, beta)
    M = both(
        lambda n: edge_on_axis(B, bbar, _power_product(h, beta, n)) == 1,
        lambda n: axis_beyond(A, abar, _power_product(h, beta, n)),
        max(ma, mb),
    )
    sigma = _power_product(h, beta, M)
    ja, _ = arc_axis_witness(A, a, g, h)
    jb, _ = arc_axis_witness(B, b, g, h)
    J = both(
        lambda n: edge_on_axis(A, a, _power_product(g, h, n)) == 1,
        lambda n: edge_on_axis(B, b, _power_product(g, h, n)) == 1,
        max(ja, jb),
    )
    c = _power_product(g, h, J)
    ka, _ = arc_axis_witness(A, a, alpha, beta)
    kb, _ = arc_axis_witness(B, bbar, alpha, beta)
    Kx = both(
        lambda n: edge_on_axis(A, a, _power_product(alpha, beta, n)) == 1,
        lambda n: edge_on_axis(B, bbar, _power_product(alpha, beta, n)) == 1,
        max(ka, kb),
    )
    gamma = _power_product(alpha, beta, Kx)
    out = PairWitness(rho, sigma, c, gamma, {"N": N, "M": M, "J": J, "K": Kx}, adjusted)
    problems = check_pair_witness(A, B, out)
    if problems:
        raise RectangleError("constructed pair fails the length-function check: " + "; ".join(problems))
    return out


def check_pair_witness(A: MarkedMetricGraph, B: MarkedMetricGraph, pw: PairWitness) -> list[str]:
    """Length-function-only re-check of a PairWitness."""
    l, m = mgraph_oracle(A), mgraph_oracle(B)
    problems = []
    a, b = classify_pair(l, pw.rho, pw.sigma), classify_pair(m, pw.rho, pw.sigma)
    if a.kind != PairKind.DISJOINT:
        problems.append(f"(rho, sigma) is {a.kind.value} for A, expected Disjoint")
    if b.kind != PairKind.OVERLAP:
        problems.append(f"(rho, sigma) is {b.kind.value} for B, expected Overlap")
    a, b = classify_pair(l, pw.c, pw.gamma), classify_pair(m, pw.c, pw.gamma)
    if not (a.kind == b.kind == PairKind.OVERLAP and a.lgh > a.lghi and b.lgh < b.lghi):
        problems.append(
            f"(c, gamma) lengths A: {a.lgh} vs {a.lghi}, B: {b.lgh} vs {b.lghi}; expected opposite strict orders"
        )
    return problems


def rectangle_from_pair(A: MarkedMetricGraph, B: MarkedMetricGraph, g: Word, h: Word) -> RectangleCertificate:
    """Rectangle spanned by the A-bridge and the B-overlap of a pair in D(A) and O(B)."""
    ca, cb = classify_pair(mgraph_oracle(A), g, h), classify_pair(mgraph_oracle(B), g, h)
    if ca.kind != PairKind.DISJOINT or cb.kind != PairKind.OVERLAP:
        raise RectangleError(f"pair is {ca.kind.value} for A and {cb.kind.value} for B; need Disjoint and Overlap")
    ra = A.axis_relation(g, h)
    p, q = ra.bridge  # p on C_g, q on C_h
    step = tighten(reverse_path(p) + q)
    a = EdgeLift(p, step[0])  # first bridge edge, oriented from C_g toward C_h
    rb = B.axis_relation(g, h)
    start, _ = rb.arc
    ag = B.axis(g)
    i = B.on_axis(start, ag)
    b = EdgeLift(start, tighten(reverse_path(start) + ag.vertex(i + 1))[0])
    # b runs along C_g; ends of g^+-1 are behind a, ends of h^+-1 beyond it
    hb = h if rb.agree else h.inverse()
    wit = {"abar,b": g, "abar,bbar": g.inverse(), "a,b": hb, "a,bbar": hb.inverse()}
    rect = RectangleCertificate(a, b, wit)
    problems = verify_rectangle(A, B, rect)
    if problems:
        raise RectangleError("constructed rectangle fails re-verification: " + "; ".join(problems))
    return rect
