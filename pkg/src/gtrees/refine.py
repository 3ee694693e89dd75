"""Finite pieces of the common refinement tree.

An orbit sample ``x_1..x_n`` and a based length function ``P`` give the metric
``d(i, j) = P(x_j x_i^-1)`` on the orbit of the basepoint.  When ``P`` comes from
a tree this metric satisfies the four-point condition, and the spanned subtree
is rebuilt exactly by Gromov-product insertion.
"""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _kernels as K
from .lfcore import GoodPairCertificate, LengthOracle, dagger_oracle, sum_oracle
from .mgraph import fmt_fraction
from .words import Word, pack


class TreeMetricError(ValueError):
    def __init__(self, message: str, witness: tuple = ()):
        super().__init__(message)
        self.witness = witness


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


@dataclass
class OrbitMetric:
    sample: list[Word]
    D: np.ndarray  # scaled integer distances
    denom: int

    def __len__(self):
        return len(self.sample)

    def d(self, i: int, j: int) -> Fraction:
        return Fraction(int(self.D[i, j]), self.denom)

    def rescaled(self, denom: int) -> np.ndarray:
        if denom % self.denom:
            raise ValueError("target denominator must be a multiple")
        return self.D * (denom // self.denom)

    def violation(self) -> tuple[str, tuple[int, ...]] | None:
        bad = K.metric_violation(self.D)
        if bad[0] >= 0:
            return "metric", tuple(int(x) for x in bad)
        bad = K.four_point_violation(self.D)
        if bad[0] >= 0:
            return "four-point", tuple(int(x) for x in bad)
        return None


def orbit_metric(P: LengthOracle, sample: Sequence[Word], check: bool = True) -> OrbitMetric:
    """Distances d(i, j) = P(w_j w_i^-1) between the orbit points w^-1 p of a based length P."""
    sample = list(sample)
    if not any(len(w) == 0 for w in sample):
        raise ValueError("sample must contain the identity")
    n = len(sample)
    arr, lens = pack(sample)
    ii, jj = np.triu_indices(n, k=1)
    terms = np.stack([jj + 1, -(ii + 1)], axis=1).astype(np.int64)
    prod = K.multiply_terms(arr, lens, terms)
    vals, denom = P.eval_packed(*prod)
    D = np.zeros((n, n), dtype=np.int64)
    D[ii, jj] = vals
    # symmetric by construction only if P(k) = P(k^-1); check the other half honestly
    terms_r = np.stack([ii + 1, -(jj + 1)], axis=1).astype(np.int64)
    vals_r, denom_r = P.eval_packed(*K.multiply_terms(arr, lens, terms_r))
    d = _lcm(denom, denom_r)
    D *= d // denom
    D[jj, ii] = vals_r * (d // denom_r)
    om = OrbitMetric(sample, D, d)
    if check:
        bad = om.violation()
        if bad:
            kind, idx = bad
            words = tuple(str(sample[i]) for i in idx)
            raise TreeMetricError(f"{kind} condition fails at {words}", idx)
    return om


# --- exact tree building ----------------------------------------------------------


@dataclass
class FiniteTree:
    sample: list[Word]
    node_labels: list[list[int]]  # sample indices sitting at each node
    adj: list[dict[int, int]]  # node -> {neighbour: scaled length}
    denom: int
    triples: list[tuple[int, int, int]]  # each node is the median of these sample points
    scope: dict = field(default_factory=dict)

    @property
    def n_nodes(self) -> int:
        return len(self.adj)

    def node_of(self) -> dict[int, int]:
        return {x: v for v, labels in enumerate(self.node_labels) for x in labels}

    def edges(self) -> list[tuple[int, int, int]]:
        return [(u, v, ln) for u in range(self.n_nodes) for v, ln in self.adj[u].items() if u < v]

    def distances_from(self, s: int) -> list[int]:
        dist = [-1] * self.n_nodes
        dist[s] = 0
        q = deque([s])
        while q:
            u = q.popleft()
            for v, ln in self.adj[u].items():
                if dist[v] < 0:
                    dist[v] = dist[u] + ln
                    q.append(v)
        return dist

    def leaf_matrix(self) -> np.ndarray:
        where = self.node_of()
        n = len(self.sample)
        M = np.zeros((n, n), dtype=np.int64)
        cache: dict[int, list[int]] = {}
        for i in range(n):
            u = where[i]
            if u not in cache:
                cache[u] = self.distances_from(u)
            for j in range(n):
                M[i, j] = cache[u][where[j]]
        return M

    def steiner_nodes(self) -> list[int]:
        return [v for v, labels in enumerate(self.node_labels) if not labels]

    def splits(self) -> set[tuple[frozenset[str], Fraction]]:
        """Edge splits as (label set of the side away from the first sample point, length)."""
        root = self.node_of()[0]
        out = set()
        for u, v, ln in self.edges():
            side = self._side(v, u)
            if root in side:
                side = self._side(u, v)
            labels = frozenset(str(self.sample[x]) for w in side for x in self.node_labels[w])
            out.add((labels, Fraction(ln, self.denom)))
        return out

    def _side(self, start: int, blocked: int) -> set[int]:
        seen = {start}
        stack = [start]
        while stack:
            u = stack.pop()
            for v in self.adj[u]:
                if v != blocked and v not in seen:
                    seen.add(v)
                    stack.append(v)
        return seen

    def _name(self, v: int) -> str:
        labels = self.node_labels[v]
        if labels:
            return "=".join(str(self.sample[x]).replace(" ", "").replace("'", "^-1") for x in labels)
        return f"s{v}"

    def to_newick(self) -> str:
        root = self.node_of()[0]

        def rec(u: int, parent: int) -> str:
            kids = [rec(v, u) + ":" + fmt_fraction(Fraction(ln, self.denom)) for v, ln in self.adj[u].items() if v != parent]
            body = f"({','.join(kids)})" if kids else ""
            return body + self._name(u)

        return rec(root, -1) + ";"

    def to_dict(self) -> dict:
        return {
            "kind": "finite_tree",
            "scope": self.scope,
            "nodes": [
                {"id": v, "labels": [str(self.sample[x]) for x in labels]}
                for v, labels in enumerate(self.node_labels)
            ],
            "edges": [
                {"u": u, "v": v, "length": fmt_fraction(Fraction(ln, self.denom))} for u, v, ln in self.edges()
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _path(tree_adj: list[dict[int, int]], s: int, t: int) -> list[int]:
    parent = {s: -1}
    q = deque([s])
    while q:
        u = q.popleft()
        if u == t:
            break
        for v in tree_adj[u]:
            if v not in parent:
                parent[v] = u
                q.append(v)
    out = [t]
    while out[-1] != s:
        out.append(parent[out[-1]])
    return out[::-1]


def build_tree(om: OrbitMetric, order: Sequence[int] | None = None) -> FiniteTree:
    """Exact realization of a tree metric by Gromov-product insertion.

    Distances are doubled first so every Gromov product is an integer.
    """
    n = len(om)
    D = om.D * 2
    denom = om.denom * 2
    Dl = D.tolist()
    order = list(order) if order is not None else list(range(n))
    if sorted(order) != list(range(n)):
        raise ValueError("order must be a permutation of the sample")
    labels: list[list[int]] = [[order[0]]]
    adj: list[dict[int, int]] = [{}]
    triples = [(order[0],) * 3]
    where = {order[0]: 0}
    x0 = order[0]
    inserted = [x0]
    for z in order[1:]:
        same = next((y for y in inserted if Dl[y][z] == 0), None)
        if same is not None:
            labels[where[same]].append(z)
            where[z] = where[same]
            inserted.append(z)
            continue
        best, ystar = -1, x0
        for y in inserted:
            g2 = Dl[x0][z] + Dl[x0][y] - Dl[y][z]
            if g2 % 2:
                raise TreeMetricError("odd Gromov product: not a tree metric", (x0, y, z))
            g = g2 // 2
            if g > best:
                best, ystar = g, y
        pend = Dl[x0][z] - best
        if best < 0 or pend < 0:
            raise TreeMetricError("negative Gromov product: not a tree metric", (x0, ystar, z))
        # walk from x0 toward ystar by `best`
        path = _path(adj, where[x0], where[ystar])
        walked = 0
        attach = None
        for u, v in zip(path, path[1:]):
            ln = adj[u][v]
            if walked + ln == best:
                attach = v
                break
            if walked + ln > best:
                off = best - walked
                w = len(adj)
                adj.append({})
                labels.append([])
                triples.append((x0, ystar, z))
                del adj[u][v]
                del adj[v][u]
                adj[u][w] = adj[w][u] = off
                adj[v][w] = adj[w][v] = ln - off
                attach = w
                break
            walked += ln
        if attach is None:
            if best != 0:
                raise TreeMetricError("attachment point beyond the path: not a tree metric", (x0, ystar, z))
            attach = path[0]
        if pend == 0:
            labels[attach].append(z)
            where[z] = attach
            if not labels[attach][:-1]:
                triples[attach] = (z, z, z)
        else:
            w = len(adj)
            adj.append({attach: pend})
            adj[attach][w] = pend
            labels.append([z])
            triples.append((z, z, z))
            where[z] = w
        inserted.append(z)
    tree = FiniteTree(om.sample, labels, adj, denom, triples, scope={"sample_size": n})
    M = tree.leaf_matrix()
    bad = np.argwhere(M != D)
    if len(bad):
        i, j = (int(x) for x in bad[0])
        raise TreeMetricError(
            f"built tree gives d({om.sample[i]}, {om.sample[j]}) = {Fraction(int(M[i, j]), denom)}, "
            f"metric says {Fraction(int(D[i, j]), denom)}",
            (i, j),
        )
    return tree


# --- verification -------------------------------------------------------------------


def _median_distance(D: np.ndarray, t: tuple[int, int, int], w: int) -> int:
    """Doubled distance from sample point w to the median of the triple t."""
    x, y, z = t
    return max(D[w, x] + D[w, y] - D[x, y], D[w, x] + D[w, z] - D[x, z], D[w, y] + D[w, z] - D[y, z])


def _node_distance(D: np.ndarray, s: tuple[int, int, int], t: tuple[int, int, int]) -> Fraction:
    """Distance between the medians of two sample triples in the tree metric D."""
    ds = {w: Fraction(int(_median_distance(D, s, w)), 2) for w in set(t)}
    x, y, z = t
    return max(ds[a] + ds[b] - int(D[a, b]) for a, b in ((x, y), (x, z), (y, z))) / 2


@dataclass
class RefinementReport:
    sample_size: int
    l1_ok: bool
    alignment_ok: bool
    no_collapse_ok: bool
    first_violation: str = ""
    triples_checked: int = 0

    @property
    def ok(self) -> bool:
        return self.l1_ok and self.alignment_ok and self.no_collapse_ok


def verify_refinement(
    l: LengthOracle,
    m: LengthOracle,
    gp: GoodPairCertificate,
    sample: Sequence[Word],
    built: FiniteTree | None = None,
) -> RefinementReport:
    sample = list(sample)
    A = orbit_metric(dagger_oracle(l, gp), sample, check=False)
    B = orbit_metric(dagger_oracle(m, gp), sample, check=False)
    if built is None:
        built = build_tree(orbit_metric(dagger_oracle(sum_oracle(l, m), gp), sample))
    T = built.leaf_matrix()
    d = _lcm(_lcm(A.denom, B.denom), built.denom)
    DA, DB = A.rescaled(d), B.rescaled(d)
    DT = T * (d // built.denom)
    n = len(sample)
    rep = RefinementReport(n, True, True, True, triples_checked=n * (n - 1) * (n - 2) // 2)
    bad = K.alignment_violation(DT, DA, DB)
    if bad[0] >= 0:
        x, y, z = (int(v) for v in bad)
        if z == -2:
            rep.l1_ok = False
            rep.alignment_ok = False
            rep.first_violation = (
                f"l1: d_T({sample[x]}, {sample[y]}) = {Fraction(int(DT[x, y]), d)} != "
                f"d_A + d_B = {Fraction(int(DA[x, y]), d)} + {Fraction(int(DB[x, y]), d)}"
            )
        else:
            rep.alignment_ok = False
            rep.first_violation = f"alignment: {sample[z]} lies on [{sample[x]}, {sample[y]}] in T but not in A or B"
        return rep
    # no collapses: every edge, including those at branch points, has positive A + B length
    DA2, DB2 = DA, DB
    for u, v, ln in built.edges():
        la = _node_distance(DA2, built.triples[u], built.triples[v])
        lb = _node_distance(DB2, built.triples[u], built.triples[v])
        if la + lb <= 0 or (la + lb) / d != Fraction(ln, built.denom):
            rep.no_collapse_ok = False
            rep.first_violation = (
                f"edge {u}-{v} of length {Fraction(ln, built.denom)} has A + B length {(la + lb) / d}"
            )
            break
    return rep


@dataclass
class DisplacementRow:
    word: str
    based: Fraction
    translation: Fraction

    @property
    def excess(self) -> Fraction:
        return self.based - self.translation

    @property
    def on_axis(self) -> bool:
        return self.excess == 0


def displacement_check(lm: LengthOracle, P: LengthOracle, sample: Sequence[Word]) -> tuple[bool, list[DisplacementRow]]:
    """``P(g) - (l+m)(g)`` must be twice a nonnegative distance for every g."""
    sample = list(sample)
    based = P.many(sample)
    trans = lm.many(sample)
    rows = [DisplacementRow(str(w), b, t) for w, b, t in zip(sample, based, trans)]
    return all(r.excess >= 0 for r in rows), rows
