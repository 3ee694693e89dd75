"""Bass-Serre trees of trees of free factors.

A :class:`GraphOfGroupsSpec` is a finite tree whose vertices carry subsets of a
free basis and whose edges carry one basis letter shared by both endpoints.
The fundamental group is the free group on the basis, so membership in a
vertex group is a letter-support test and normal forms are plain rewriting.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from pathlib import Path

import numpy as np

from . import _kernels as K
from .mgraph import fmt_fraction, parse_fraction
from .words import Alphabet, AlphabetMismatch, InputError, Word, cyclic_reduce


@dataclass(frozen=True)
class GogEdge:
    u: int
    v: int
    letter: int  # positive letter index
    length: Fraction


@dataclass
class ValidationReport:
    problems: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def __bool__(self):
        return self.ok


@dataclass(frozen=True, eq=False)
class GraphOfGroupsSpec:
    alphabet: Alphabet
    vertices: tuple[str, ...]
    letters: tuple[frozenset[int], ...]
    edges: tuple[GogEdge, ...]
    name: str = ""

    @classmethod
    def from_dict(cls, doc: dict, name: str = "") -> "GraphOfGroupsSpec":
        try:
            alphabet = Alphabet(tuple(doc["alphabet"]))
            names = tuple(str(v["name"]) for v in doc["vertices"])
            if len(set(names)) != len(names):
                raise InputError("duplicate vertex names")
            vidx = {n: i for i, n in enumerate(names)}
            letters = tuple(
                frozenset(alphabet.letter(x) for x in v["letters"]) for v in doc["vertices"]
            )
            edges = []
            for e in doc["edges"]:
                if e["from"] not in vidx or e["to"] not in vidx:
                    raise InputError("edge endpoint is not a vertex")
                ln = parse_fraction(e.get("length", 1))
                if ln <= 0:
                    raise InputError("edge lengths must be positive")
                edges.append(GogEdge(vidx[e["from"]], vidx[e["to"]], alphabet.letter(e["letter"]), ln))
        except KeyError as exc:
            raise InputError(f"missing field {exc}") from None
        return cls(alphabet, names, letters, tuple(edges), name=name or str(doc.get("name", "")))

    @classmethod
    def load(cls, path: str | Path) -> "GraphOfGroupsSpec":
        spec = cls.from_dict(json.loads(Path(path).read_text()), name=Path(path).stem)
        report = validate_spec(spec)
        if not report.ok:
            raise InputError(f"{path}: " + "; ".join(report.problems))
        return spec

    def to_dict(self) -> dict:
        a = self.alphabet
        return {
            "kind": "graph_of_groups",
            "name": self.name,
            "alphabet": list(a.names),
            "vertices": [
                {"name": n, "letters": [a.names[x - 1] for x in sorted(ls)]}
                for n, ls in zip(self.vertices, self.letters)
            ],
            "edges": [
                {
                    "from": self.vertices[e.u],
                    "to": self.vertices[e.v],
                    "letter": a.names[e.letter - 1],
                    "length": fmt_fraction(e.length),
                }
                for e in self.edges
            ],
        }

    def scaled(self, factor: Fraction) -> "GraphOfGroupsSpec":
        edges = tuple(GogEdge(e.u, e.v, e.letter, e.length * factor) for e in self.edges)
        return GraphOfGroupsSpec(self.alphabet, self.vertices, self.letters, edges, self.name)

    def with_lengths(self, lengths) -> "GraphOfGroupsSpec":
        edges = tuple(GogEdge(e.u, e.v, e.letter, Fraction(x)) for e, x in zip(self.edges, lengths))
        return GraphOfGroupsSpec(self.alphabet, self.vertices, self.letters, edges, self.name)

    # --- tree tables ---------------------------------------------------------

    @cached_property
    def _adj(self) -> list[list[tuple[int, int]]]:
        adj: list[list[tuple[int, int]]] = [[] for _ in self.vertices]
        for i, e in enumerate(self.edges):
            adj[e.u].append((e.v, i))
            adj[e.v].append((e.u, i))
        return adj

    @cached_property
    def _routes(self) -> tuple[list[list[Fraction]], list[list[int]]]:
        """All-pairs tree distance and next hop."""
        n = len(self.vertices)
        dist = [[Fraction(0)] * n for _ in range(n)]
        hop = [[-1] * n for _ in range(n)]
        for s in range(n):
            stack = [s]
            seen = {s}
            while stack:
                v = stack.pop()
                for w, i in self._adj[v]:
                    if w not in seen:
                        seen.add(w)
                        dist[s][w] = dist[s][v] + self.edges[i].length
                        hop[s][w] = w if v == s else hop[s][v]
                        stack.append(w)
        return dist, hop

    def distance(self, u: int, v: int) -> Fraction:
        return self._routes[0][u][v]

    def vertex_of(self, letters: set[int]) -> list[int]:
        return [i for i, ls in enumerate(self.letters) if letters <= ls]

    # --- lengths -------------------------------------------------------------

    def translation_length(self, w: Word) -> Fraction:
        return translation_length_gog(self, w)

    @cached_property
    def _tables(self):
        n, r = len(self.vertices), self.alphabet.rank
        dist, hop = self._routes
        denom = 1
        for e in self.edges:
            denom = denom * e.length.denominator // math.gcd(denom, e.length.denominator)
        contains = np.zeros((n, r), dtype=np.bool_)
        for v, ls in enumerate(self.letters):
            for x in ls:
                contains[v, x - 1] = True
        first = np.array([int(np.argmax(contains[:, a])) for a in range(r)], dtype=np.int64)
        D = np.array([[int(dist[u][v] * denom) for v in range(n)] for u in range(n)], dtype=np.int64)
        H = np.array([[max(hop[u][v], 0) for v in range(n)] for u in range(n)], dtype=np.int64)
        EL = np.full((n, n), -2, dtype=np.int64)
        for e in self.edges:
            EL[e.u, e.v] = EL[e.v, e.u] = e.letter - 1
        return first, contains, D, H, EL, denom

    def batch_lengths(self, words: np.ndarray, lens: np.ndarray) -> tuple[np.ndarray, int]:
        first, contains, D, H, EL, denom = self._tables
        return K.gog_lengths(words, lens, first, contains, D, H, EL), denom


def validate_spec(spec: GraphOfGroupsSpec) -> ValidationReport:
    rep = ValidationReport()
    a = spec.alphabet
    n = len(spec.vertices)
    if n == 0:
        rep.problems.append("no vertices")
        return rep
    if len(spec.edges) != n - 1:
        rep.problems.append(f"underlying graph has {len(spec.edges)} edges and {n} vertices: not a tree")
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for e in spec.edges:
        ru, rv = find(e.u), find(e.v)
        if ru == rv:
            rep.problems.append(
                f"edge {spec.vertices[e.u]}-{spec.vertices[e.v]} closes a cycle: not a tree"
            )
        parent[ru] = rv
        name = a.names[e.letter - 1]
        if e.letter not in spec.letters[e.u] or e.letter not in spec.letters[e.v]:
            rep.problems.append(
                f"edge letter {name} not in both vertex groups {spec.vertices[e.u]}, {spec.vertices[e.v]}"
            )
        common = spec.letters[e.u] & spec.letters[e.v]
        if common != {e.letter}:
            rep.problems.append(
                f"vertex groups {spec.vertices[e.u]}, {spec.vertices[e.v]} share "
                f"{sorted(a.names[x - 1] for x in common)}, expected exactly [{name}]"
            )
    if len({find(v) for v in range(n)}) != 1:
        rep.problems.append("underlying graph is not connected")
    edge_letters = {e.letter for e in spec.edges}
    for x in range(1, a.rank + 1):
        holders = [v for v in range(n) if x in spec.letters[v]]
        name = a.names[x - 1]
        if not holders:
            rep.problems.append(f"letter {name} lies in no vertex group")
        elif x not in edge_letters and len(holders) > 1:
            rep.problems.append(f"non-edge letter {name} lies in {len(holders)} vertex groups")
        elif len(holders) > 1:
            # holders must span a subtree whose edges all carry x
            sub = set(holders)
            seen = {holders[0]}
            stack = [holders[0]]
            while stack:
                v = stack.pop()
                for e in spec.edges:
                    if e.letter != x:
                        continue
                    for p, q in ((e.u, e.v), (e.v, e.u)):
                        if p == v and q in sub and q not in seen:
                            seen.add(q)
                            stack.append(q)
            if seen != sub:
                rep.problems.append(f"vertex groups containing {name} are not joined by {name}-edges")
    return rep


@dataclass(frozen=True)
class SyllableForm:
    """Cyclic sequence of syllables ``(vertex index, word in that vertex group)``."""

    spec: GraphOfGroupsSpec
    syllables: tuple[tuple[int, Word], ...]

    def __str__(self):
        return " | ".join(f"{self.spec.vertices[v]}: {w}" for v, w in self.syllables)


def _edge_power(spec: GraphOfGroupsSpec, w: Word) -> int | None:
    """The letter x if w is a power of an edge letter x."""
    xs = {abs(x) for x in w.letters}
    if len(xs) == 1:
        (x,) = xs
        if any(e.letter == x for e in spec.edges):
            return x
    return None


def normalize(spec: GraphOfGroupsSpec, w: Word) -> SyllableForm:
    if w.alphabet != spec.alphabet:
        raise AlphabetMismatch("word and graph of groups use different alphabets")
    c, _ = cyclic_reduce(w)
    letters = c.letters
    if not letters:
        return SyllableForm(spec, ())
    for x in letters:
        if not spec.vertex_of({abs(x)}):
            raise InputError(f"letter {spec.alphabet.name(x)} lies in no vertex group")
    # greedy maximal runs supported in one vertex group
    runs: list[list[int]] = []
    for x in letters:
        if runs and spec.vertex_of({abs(y) for y in runs[-1]} | {abs(x)}):
            runs[-1].append(x)
        else:
            runs.append([x])
    changed = True
    while changed:
        changed = False
        # (i) merge neighbours with a common supporting vertex, cyclically
        i = 0
        while len(runs) > 1 and i < len(runs):
            j = (i + 1) % len(runs)
            if spec.vertex_of({abs(y) for y in runs[i] + runs[j]}):
                if j == 0:
                    runs[0] = runs[i] + runs[0]
                else:
                    runs[i] = runs[i] + runs[j]
                del runs[j if j else i]
                changed = True
            else:
                i += 1
        # (ii) absorb pure edge-letter powers into a neighbour, left first
        if len(runs) > 1:
            for i, run in enumerate(runs):
                x = _edge_power(spec, Word(spec.alphabet, tuple(run)))
                if x is None:
                    continue
                left, right = (i - 1) % len(runs), (i + 1) % len(runs)
                for j in (left, right):
                    if spec.vertex_of({abs(y) for y in runs[j]} | {x}):
                        if j == left:
                            runs[j] = runs[j] + run
                        else:
                            runs[j] = run + runs[j]
                        del runs[i]
                        changed = True
                        break
                if changed:
                    break
    syl = []
    for run in runs:
        word = Word(spec.alphabet, tuple(run))
        syl.append((spec.vertex_of({abs(y) for y in run})[0], word))
    return SyllableForm(spec, tuple(syl))


def _push_through(spec: GraphOfGroupsSpec, verts: list[int], words: list[Word]) -> list[int]:
    """Move edge-letter syllables toward both neighbours while that shortens the path."""
    dist, hop = spec._routes
    moved = True
    while moved and len(verts) > 1:
        moved = False
        k = len(verts)
        for i in range(k):
            v, u, x = verts[i], verts[i - 1], verts[(i + 1) % k]
            if u == v or x == v:
                continue
            n = hop[v][u]
            if n != hop[v][x]:
                continue
            edge = next(e for e in spec.edges if {e.u, e.v} == {v, n})
            if _edge_power(spec, words[i]) == edge.letter:
                verts[i] = n
                moved = True
    return verts


def translation_length_gog(spec: GraphOfGroupsSpec, w: Word) -> Fraction:
    form = normalize(spec, w)
    if len(form.syllables) <= 1:
        return Fraction(0)
    verts = [v for v, _ in form.syllables]
    verts = _push_through(spec, verts, [s for _, s in form.syllables])
    total = Fraction(0)
    for i, v in enumerate(verts):
        total += spec.distance(v, verts[(i + 1) % len(verts)])
    return total


def crossing_counts(spec: GraphOfGroupsSpec, words) -> np.ndarray:
    """Row per word: how many times its axis crosses a fundamental domain of each edge orbit."""
    rows = []
    for i in range(len(spec.edges)):
        unit = [Fraction(int(j == i)) for j in range(len(spec.edges))]
        rows.append([int(translation_length_gog(spec.with_lengths(unit), w)) for w in words])
    return np.array(rows, dtype=np.int64).T


def fit_edge_lengths(spec: GraphOfGroupsSpec, words, target) -> tuple[Fraction, ...] | None:
    """Edge lengths making the translation lengths of ``words`` equal ``target`` exactly.

    Lengths are linear in the edge lengths, so this is a linear system; the
    float least-squares solution is rationalized and then checked exactly.
    """
    N = crossing_counts(spec, words)
    b = np.array([float(t) for t in target])
    x, *_ = np.linalg.lstsq(N.astype(float), b, rcond=None)
    sol = tuple(Fraction(v).limit_denominator(1000) for v in x)
    if any(v <= 0 for v in sol):
        return None
    fitted = spec.with_lengths(sol)
    if any(translation_length_gog(fitted, w) != Fraction(t) for w, t in zip(words, target)):
        return None
    return sol
