"""Free simplicial tree actions presented as marked metric graphs.

Oriented edges are integers: edge ``i`` of the edge list is ``2*i`` in its
stored direction and ``2*i + 1`` reversed, so reversal is ``e ^ 1``.  A vertex
of the universal cover is addressed by the tightened edge path from the base
vertex lift (a tuple of oriented edge ids).  The free group acts on the left:
``w . P = tighten(image(w) + P)``.
"""
from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np

from . import _kernels as K
from .words import (
    Alphabet,
    AlphabetMismatch,
    CyclicWord,
    InputError,
    Word,
    _Folder,
    cyclic_reduce,
    letter_key,
)

Path_ = tuple[int, ...]


def parse_fraction(text: str | int | Fraction) -> Fraction:
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError, TypeError):
        raise InputError(f"bad rational {text!r}") from None


def fmt_fraction(x: Fraction) -> str:
    x = Fraction(x)
    return f"{x.numerator}/{x.denominator}"


def tighten(path: Sequence[int]) -> Path_:
    out: list[int] = []
    for e in path:
        if out and out[-1] == e ^ 1:
            out.pop()
        else:
            out.append(e)
    return tuple(out)


def reverse_path(path: Sequence[int]) -> Path_:
    return tuple(e ^ 1 for e in reversed(path))


@dataclass(frozen=True)
class MetricGraph:
    vertices: tuple[str, ...]
    edge_names: tuple[str, ...]
    ends: tuple[tuple[int, int], ...]  # (origin, terminus) of each stored edge
    lengths: tuple[Fraction, ...]

    def __post_init__(self):
        nv = len(self.vertices)
        if nv == 0:
            raise InputError("graph has no vertices")
        if len(set(self.vertices)) != nv:
            raise InputError("duplicate vertex names")
        if len(set(self.edge_names)) != len(self.edge_names):
            raise InputError("duplicate edge names")
        for name, ln in zip(self.edge_names, self.lengths):
            if ln <= 0:
                raise InputError(f"edge {name} has non-positive length {ln}")
        # connectivity
        seen = {0}
        stack = [0]
        while stack:
            v = stack.pop()
            for o, t in self.ends:
                for a, b in ((o, t), (t, o)):
                    if a == v and b not in seen:
                        seen.add(b)
                        stack.append(b)
        if len(seen) != nv:
            raise InputError("graph is not connected")
        if nv > 1:
            for v, val in enumerate(self.valence()):
                if val < 3:
                    raise InputError(f"vertex {self.vertices[v]} has valence {val} < 3")

    def valence(self) -> list[int]:
        val = [0] * len(self.vertices)
        for o, t in self.ends:
            val[o] += 1
            val[t] += 1
        return val

    @property
    def n_edges(self) -> int:
        return len(self.edge_names)

    def origin(self, e: int) -> int:
        o, t = self.ends[e >> 1]
        return t if e & 1 else o

    def terminus(self, e: int) -> int:
        o, t = self.ends[e >> 1]
        return o if e & 1 else t

    def length(self, e: int) -> Fraction:
        return self.lengths[e >> 1]

    def path_length(self, path: Sequence[int]) -> Fraction:
        return sum((self.lengths[e >> 1] for e in path), Fraction(0))

    def edge_name(self, e: int) -> str:
        return ("~" if e & 1 else "") + self.edge_names[e >> 1]

    def parse_edge(self, token: str) -> int:
        rev = token.startswith("~")
        name = token[1:] if rev else token
        try:
            i = self.edge_names.index(name)
        except ValueError:
            raise InputError(f"unknown edge {token!r}") from None
        return 2 * i + (1 if rev else 0)

    def parse_path(self, text: str) -> Path_:
        return tuple(self.parse_edge(t) for t in text.split())

    def format_path(self, path: Sequence[int]) -> str:
        return " ".join(self.edge_name(e) for e in path)

    def out_edges(self, v: int) -> list[int]:
        return [e for e in range(2 * self.n_edges) if self.origin(e) == v]

    def rank(self) -> int:
        return self.n_edges - len(self.vertices) + 1


@dataclass(frozen=True)
class TreePoint:
    """A point of the universal cover: vertex lift ``anchor`` plus ``offset`` along ``edge``.

    ``edge`` is ``None`` (and ``offset`` 0) for vertices.
    """

    anchor: Path_
    edge: int | None = None
    offset: Fraction = Fraction(0)

    @classmethod
    def vertex(cls, path: Sequence[int]) -> "TreePoint":
        return cls(tuple(path))


@dataclass(frozen=True)
class AxisDescriptor:
    element: CyclicWord
    period: Path_  # cyclically tightened image loop, read from the entry point
    translation_length: Fraction
    entry: Path_  # geodesic from the base lift to the axis

    def vertex(self, i: int) -> Path_:
        """The axis vertex ``i`` edges forward (negative: backward) of the entry point."""
        c = self.period
        if i >= 0:
            q, r = divmod(i, len(c))
            return self.entry + c * q + c[:r]
        rc = reverse_path(c)
        q, r = divmod(-i, len(c))
        return self.entry + rc * q + rc[:r]


@dataclass(frozen=True, eq=False)
class MarkedMetricGraph:
    graph: MetricGraph
    base: int
    alphabet: Alphabet
    images: tuple[Path_, ...]
    name: str = ""

    def __post_init__(self):
        g = self.graph
        if len(self.images) != self.alphabet.rank:
            raise InputError("marking must give one image path per generator")
        for letter, path in zip(self.alphabet.names, self.images):
            if not path:
                raise InputError(f"image of {letter} is empty")
            if tighten(path) != tuple(path):
                raise InputError(f"image of {letter} is not tightened")
            at = self.base
            for e in path:
                if g.origin(e) != at:
                    raise InputError(f"image of {letter} is not an edge path")
                at = g.terminus(e)
            if at != self.base:
                raise InputError(f"image of {letter} is not a loop at the base vertex")
        if g.rank() != self.alphabet.rank:
            raise InputError(
                f"graph has rank {g.rank()} but the marking has {self.alphabet.rank} generators"
            )
        problem = self._marking_problem()
        if problem:
            raise InputError(f"marking does not generate the fundamental group: {problem}")

    def _marking_problem(self) -> str | None:
        """Fold the image loops; they generate iff the folded graph is the whole graph."""
        f = _Folder()
        b = f.new_state()
        for path in self.images:
            f.add_path(b, [(e >> 1) + 1 if not e & 1 else -((e >> 1) + 1) for e in path])
        root, trans = f.result(b)
        where: dict[int, int] = {root: self.base}
        stack = [root]
        while stack:
            s = stack.pop()
            for lab, t in trans[s].items():
                e = 2 * (abs(lab) - 1) + (1 if lab < 0 else 0)
                if self.graph.origin(e) != where[s]:
                    return "folded graph does not map to the graph"
                v = self.graph.terminus(e)
                if t in where:
                    if where[t] != v:
                        return "folded graph does not map to the graph"
                else:
                    where[t] = v
                    stack.append(t)
        if len(set(where.values())) != len(where) or len(where) != len(self.graph.vertices):
            return "vertex map is not a bijection"
        labels = [abs(lab) for s in trans for lab in trans[s] if lab > 0]
        if sorted(labels) != list(range(1, self.graph.n_edges + 1)):
            return "edge map is not a bijection"
        return None

    # --- construction / io ---------------------------------------------------

    @classmethod
    def from_dict(cls, doc: dict, name: str = "") -> "MarkedMetricGraph":
        try:
            vertices = tuple(str(v) for v in doc["vertices"])
            vidx = {v: i for i, v in enumerate(vertices)}
            names, ends, lens = [], [], []
            for e in doc["edges"]:
                names.append(str(e["name"]))
                if e["from"] not in vidx or e["to"] not in vidx:
                    raise InputError(f"edge {e['name']} has an unknown endpoint")
                ends.append((vidx[e["from"]], vidx[e["to"]]))
                lens.append(parse_fraction(e.get("length", 1)))
            graph = MetricGraph(vertices, tuple(names), tuple(ends), tuple(lens))
            base = vidx[doc["base_vertex"]]
            marking = doc["marking"]
            alphabet = Alphabet(tuple(doc.get("alphabet", list(marking))))
            images = tuple(graph.parse_path(marking[n]) for n in alphabet.names)
        except KeyError as exc:
            raise InputError(f"missing field {exc}") from None
        return cls(graph, base, alphabet, images, name=name or str(doc.get("name", "")))

    def to_dict(self) -> dict:
        g = self.graph
        return {
            "kind": "marked_graph",
            "name": self.name,
            "alphabet": list(self.alphabet.names),
            "vertices": list(g.vertices),
            "edges": [
                {"name": n, "from": g.vertices[o], "to": g.vertices[t], "length": fmt_fraction(ln)}
                for n, (o, t), ln in zip(g.edge_names, g.ends, g.lengths)
            ],
            "base_vertex": g.vertices[self.base],
            "marking": {n: g.format_path(p) for n, p in zip(self.alphabet.names, self.images)},
        }

    @classmethod
    def load(cls, path: str | Path) -> "MarkedMetricGraph":
        return cls.from_dict(json.loads(Path(path).read_text()), name=Path(path).stem)

    # --- cover geometry ------------------------------------------------------

    def image(self, w: Word) -> Path_:
        if w.alphabet != self.alphabet:
            raise AlphabetMismatch(f"word over {w.alphabet.names}, graph over {self.alphabet.names}")
        out: list[int] = []
        for x in w.letters:
            p = self.images[x - 1] if x > 0 else reverse_path(self.images[-x - 1])
            out.extend(p)
        return tighten(out)

    def act(self, w: Word, path: Sequence[int]) -> Path_:
        return tighten(self.image(w) + tuple(path))

    def act_point(self, w: Word, p: TreePoint) -> TreePoint:
        return TreePoint(self.act(w, p.anchor), p.edge, p.offset)

    def check_point(self, p: TreePoint) -> None:
        g = self.graph
        at = self.base
        for e in p.anchor:
            if g.origin(e) != at:
                raise InputError("anchor is not an edge path from the base vertex")
            at = g.terminus(e)
        if tighten(p.anchor) != p.anchor:
            raise InputError("anchor is not tightened")
        if p.edge is not None:
            if g.origin(p.edge) != at:
                raise InputError("point edge does not start at the anchor's end")
            if not 0 <= p.offset < g.length(p.edge):
                raise InputError("offset outside the edge")

    def vertex_distance(self, P: Sequence[int], Q: Sequence[int]) -> Fraction:
        return self.graph.path_length(tighten(reverse_path(P) + tuple(Q)))

    def _ends(self, p: TreePoint) -> list[tuple[Path_, Fraction]]:
        if p.edge is None or p.offset == 0:
            return [(p.anchor, Fraction(0))]
        far = tighten(p.anchor + (p.edge,))
        return [(p.anchor, Fraction(p.offset)), (far, self.graph.length(p.edge) - p.offset)]

    def _edge_key(self, p: TreePoint):
        """Unordered pair of endpoint lifts plus position measured from the first."""
        (a, s), (b, _) = self._ends(p)
        if a <= b:
            return (a, b), s
        return (b, a), self.graph.length(p.edge) - s

    def distance(self, p: TreePoint, q: TreePoint) -> Fraction:
        pe, qe = self._ends(p), self._ends(q)
        if len(pe) == 2 and len(qe) == 2:
            kp, sp = self._edge_key(p)
            kq, sq = self._edge_key(q)
            if kp == kq:
                return abs(sp - sq)
        return min(s + self.vertex_distance(P, Q) + t for P, s in pe for Q, t in qe)

    def geodesic(self, p: TreePoint, q: TreePoint) -> list[tuple[int, Fraction, Fraction]]:
        """Geodesic as segments ``(oriented edge, from offset, to offset)``."""
        if self.distance(p, q) == 0:
            return []
        pe, qe = self._ends(p), self._ends(q)
        if len(pe) == 2 and len(qe) == 2 and self._edge_key(p)[0] == self._edge_key(q)[0]:
            e = p.edge
            s = p.offset
            t = q.offset if q.edge == e else self.graph.length(e) - q.offset
            if t >= s:
                return [(e, s, t)]
            L = self.graph.length(e)
            return [(e ^ 1, L - s, L - t)]
        d = self.distance(p, q)
        for (P, s), lead in zip(pe, (None, p.edge)):
            for (Q, t), tail in zip(qe, (None, q.edge)):
                mid = tighten(reverse_path(P) + tuple(Q))
                if s + self.graph.path_length(mid) + t != d:
                    continue
                segs: list[tuple[int, Fraction, Fraction]] = []
                if s:
                    L = self.graph.length(p.edge)
                    if lead is None:
                        segs.append((p.edge ^ 1, L - p.offset, L))
                    else:
                        segs.append((p.edge, p.offset, L))
                segs.extend((e, Fraction(0), self.graph.length(e)) for e in mid)
                if t:
                    if tail is None:
                        segs.append((q.edge, Fraction(0), q.offset))
                    else:
                        L = self.graph.length(q.edge)
                        segs.append((q.edge ^ 1, Fraction(0), L - q.offset))
                return segs
        raise AssertionError("no geodesic realizes the distance")

    # --- length functions -----------------------------------------------------

    def translation_length(self, w: Word) -> Fraction:
        loop = self.image(w)
        i, j = 0, len(loop)
        while j - i >= 2 and loop[i] == loop[j - 1] ^ 1:
            i += 1
            j -= 1
        return self.graph.path_length(loop[i:j])

    def based_length(self, p: TreePoint, w: Word) -> Fraction:
        return self.distance(p, self.act_point(w, p))

    def axis(self, w: Word) -> AxisDescriptor:
        if not w:
            raise ValueError("the identity has no axis")
        loop = self.image(w)
        i, j = 0, len(loop)
        while j - i >= 2 and loop[i] == loop[j - 1] ^ 1:
            i += 1
            j -= 1
        period = loop[i:j]
        return AxisDescriptor(
            cyclic_reduce(w)[0], period, self.graph.path_length(period), loop[:i]
        )

    def forward_ray(self, w: Word, n: int) -> Path_:
        """First ``n`` edges of the ray from the base lift to the attracting end of ``w``."""
        ax = self.axis(w)
        out = list(ax.entry[:n])
        while len(out) < n:
            out.extend(ax.period)
        return tuple(out[:n])

    def horizon_member(self, anchor: Sequence[int], e: int, w: Word) -> bool:
        """Whether the attracting end of ``w`` lies beyond the oriented edge lift (anchor, e).

        Edges of a simplicial tree have constant directions on their interiors,
        so the horizon of the open edge equals the set of ends of the
        component of the tree minus the open edge that contains its terminus.
        """
        anchor = tuple(anchor)
        self.check_point(TreePoint(anchor, e, Fraction(0)))
        if not w:
            return False
        ray = self.forward_ray(w, len(anchor) + 1)
        if ray[: len(anchor)] == anchor:
            return ray[len(anchor)] == e
        return bool(anchor) and e == anchor[-1] ^ 1

    # --- axis geometry --------------------------------------------------------

    def on_axis(self, P: Sequence[int], ax: AxisDescriptor) -> int | None:
        """Index of vertex lift P along the axis, or None if P is off the axis."""
        P = tuple(P)
        u = ax.entry
        if P[: len(u)] != u:
            return None
        rest = P[len(u):]
        c = ax.period
        n = len(rest)
        if rest == (c * (n // len(c) + 1))[:n]:
            return n
        rc = reverse_path(c)
        if rest == (rc * (n // len(c) + 1))[:n]:
            return -n
        return None

    def project(self, P: Sequence[int], w: Word) -> Path_:
        """Nearest-point projection of vertex lift P onto the axis of w."""
        P = tuple(P)
        ell = self.translation_length(w)
        d = (self.vertex_distance(P, self.act(w, P)) - ell) / 2
        geo = tighten(reverse_path(P) + self.act(w, P))
        walked = Fraction(0)
        k = 0
        while walked < d:
            walked += self.graph.length(geo[k])
            k += 1
        if walked != d:
            raise AssertionError("projection is not a vertex")
        return tighten(P + geo[:k])

    def axis_offset(self, ax: AxisDescriptor, i: int) -> Fraction:
        """Signed metric position of axis vertex i relative to the entry point."""
        c = ax.period
        if i >= 0:
            q, r = divmod(i, len(c))
            return q * ax.translation_length + self.graph.path_length(c[:r])
        rc = reverse_path(c)
        q, r = divmod(-i, len(c))
        return -(q * ax.translation_length + self.graph.path_length(rc[:r]))

    def axis_relation(self, g: Word, h: Word) -> "AxisRelation":
        """Geometric relative position of the axes of two nontrivial elements."""
        ag, ah = self.axis(g), self.axis(h)
        q = self.project(ag.entry, h)  # an axis-g vertex projected onto C_h
        p = self.project(q, g)
        d = self.vertex_distance(p, q)
        if d > 0:
            return AxisRelation("disjoint", distance=d, bridge=(p, q))
        i0 = self.on_axis(p, ag)
        assert i0 is not None and self.on_axis(p, ah) is not None
        cap = ag.translation_length + ah.translation_length
        fwd, bwd = i0, i0
        while self.on_axis(ag.vertex(fwd + 1), ah) is not None:
            fwd += 1
            if self.axis_offset(ag, fwd) - self.axis_offset(ag, i0) > cap:
                break
        while self.on_axis(ag.vertex(bwd - 1), ah) is not None:
            bwd -= 1
            if self.axis_offset(ag, i0) - self.axis_offset(ag, bwd) > cap:
                break
        length = self.axis_offset(ag, fwd) - self.axis_offset(ag, bwd)
        if length == 0:
            return AxisRelation("point", arc=(p, p))
        a, b = ag.vertex(bwd), ag.vertex(bwd + 1)
        sign = self.on_axis(b, ah) - self.on_axis(a, ah)
        unbounded = length > cap
        return AxisRelation(
            "overlap",
            length=None if unbounded else length,
            agree=sign > 0,
            arc=(ag.vertex(bwd), ag.vertex(fwd)),
        )

    # --- batch evaluation -----------------------------------------------------

    @cached_property
    def _tables(self):
        r = self.alphabet.rank
        denom = 1
        for ln in self.graph.lengths:
            denom = denom * ln.denominator // math.gcd(denom, ln.denominator)
        edge_len = np.zeros(2 * self.graph.n_edges, dtype=np.int64)
        for i, ln in enumerate(self.graph.lengths):
            edge_len[2 * i] = edge_len[2 * i + 1] = int(ln * denom)
        flat: list[int] = []
        off = [0]
        for k in range(2 * r):
            x = k // 2 + 1
            p = self.images[x - 1] if k % 2 == 0 else reverse_path(self.images[x - 1])
            flat.extend(p)
            off.append(len(flat))
        return np.array(flat, dtype=np.int64), np.array(off, dtype=np.int64), edge_len, denom

    def batch_lengths(self, words: np.ndarray, lens: np.ndarray) -> tuple[np.ndarray, int]:
        flat, off, edge_len, denom = self._tables
        return K.mgraph_lengths(words, lens, flat, off, edge_len), denom

    def scaled(self, factor: Fraction) -> "MarkedMetricGraph":
        g = self.graph
        ng = MetricGraph(g.vertices, g.edge_names, g.ends, tuple(ln * factor for ln in g.lengths))
        return MarkedMetricGraph(ng, self.base, self.alphabet, self.images, name=self.name)


@dataclass(frozen=True)
class AxisRelation:
    kind: str  # "disjoint" | "point" | "overlap"
    distance: Fraction = Fraction(0)
    length: Fraction | None = Fraction(0)  # None: unbounded overlap
    agree: bool | None = None
    bridge: tuple[Path_, Path_] | None = None
    arc: tuple[Path_, Path_] | None = field(default=None)


# --- generators of test graphs ---------------------------------------------------


def rose(alphabet: Alphabet, lengths: Sequence[Fraction] | None = None) -> MarkedMetricGraph:
    r = alphabet.rank
    lens = tuple(Fraction(x) for x in (lengths or [1] * r))
    g = MetricGraph(("v",), tuple(f"e_{n}" for n in alphabet.names), ((0, 0),) * r, lens)
    return MarkedMetricGraph(g, 0, alphabet, tuple((2 * i,) for i in range(r)), name="rose")


def _random_graph(rank: int, rng: random.Random) -> tuple[int, list[tuple[int, int]]]:
    while True:
        nv = rng.randint(1, 2 * rank - 2) if rank > 1 else 1
        ne = nv + rank - 1
        # random spanning tree then extra edges
        ends = [(rng.randrange(v), v) for v in range(1, nv)]
        ends += [(rng.randrange(nv), rng.randrange(nv)) for _ in range(ne - len(ends))]
        val = [0] * nv
        for o, t in ends:
            val[o] += 1
            val[t] += 1
        if nv == 1 or min(val) >= 3:
            return nv, ends


def random_marked_graph(alphabet: Alphabet, rng: random.Random, moves: int = 6) -> MarkedMetricGraph:
    """Random graph of the alphabet's rank, random rational lengths, random marking.

    The marking is a standard spanning-tree basis twisted by random Nielsen moves.
    """
    rank = alphabet.rank
    nv, ends = _random_graph(rank, rng)
    lengths = tuple(Fraction(rng.randint(1, 6), rng.randint(1, 3)) for _ in ends)
    g = MetricGraph(
        tuple(f"v{i}" for i in range(nv)),
        tuple(f"e{i}" for i in range(len(ends))),
        tuple(ends),
        lengths,
    )
    # spanning tree paths from the base vertex 0
    to: dict[int, Path_] = {0: ()}
    tree_edges: set[int] = set()
    frontier = [0]
    while frontier:
        v = frontier.pop(0)
        for e in range(2 * len(ends)):
            if g.origin(e) == v and g.terminus(e) not in to:
                to[g.terminus(e)] = to[v] + (e,)
                tree_edges.add(e >> 1)
                frontier.append(g.terminus(e))
    loops = [
        tighten(to[g.origin(2 * i)] + (2 * i,) + reverse_path(to[g.terminus(2 * i)]))
        for i in range(len(ends))
        if i not in tree_edges
    ]
    images = [list(p) for p in loops]
    for _ in range(moves):
        i = rng.randrange(rank)
        kind = rng.random()
        if kind < 0.6 and rank > 1:
            j = rng.choice([k for k in range(rank) if k != i])
            other = images[j] if rng.random() < 0.5 else list(reverse_path(images[j]))
            images[i] = list(tighten(images[i] + other) if rng.random() < 0.5 else tighten(other + images[i]))
        elif kind < 0.8:
            images[i] = list(reverse_path(images[i]))
        elif rank > 1:
            j = rng.randrange(rank)
            images[i], images[j] = images[j], images[i]
    return MarkedMetricGraph(g, 0, alphabet, tuple(tuple(p) for p in images), name="random")


def enumerate_points(G: MarkedMetricGraph, radius: int) -> Iterator[Path_]:
    """Vertex lifts whose anchor path has at most ``radius`` edges, in BFS order."""
    seen = [()]
    frontier: list[Path_] = [()]
    yield ()
    for _ in range(radius):
        nxt = []
        for P in frontier:
            at = G.graph.terminus(P[-1]) if P else G.base
            for e in G.graph.out_edges(at):
                if P and e == P[-1] ^ 1:
                    continue
                Q = P + (e,)
                nxt.append(Q)
                yield Q
        seen.extend(nxt)
        frontier = nxt
