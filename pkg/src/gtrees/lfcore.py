"""Length-function calculus: axioms, pair classification, compatibility, good pairs,
and based length functions recovered from a good pair.

Everything is exact.  Batch evaluation works on packed word arrays and returns
``(numerators, denominator)`` so bulk comparisons are integer comparisons.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterator, Sequence

import numpy as np

from . import _kernels as K
from .words import Alphabet, AlphabetMismatch, Word, pack, words_array

Batch = Callable[[np.ndarray, np.ndarray], "tuple[np.ndarray, int]"]


def _lcm(a: int, b: int) -> int:
    return a * b // math.gcd(a, b)


# --- oracles ---------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LengthOracle:
    alphabet: Alphabet
    evaluator: Callable[[Word], Fraction]
    provenance: str
    batch: Batch | None = None
    source: object = None  # underlying tree object, when there is one

    def __call__(self, w: Word) -> Fraction:
        if w.alphabet != self.alphabet:
            raise AlphabetMismatch(f"oracle over {self.alphabet.names}, word over {w.alphabet.names}")
        return Fraction(self.evaluator(w))

    def eval_packed(self, arr: np.ndarray, lens: np.ndarray) -> tuple[np.ndarray, int]:
        if self.batch is not None:
            nums, d = self.batch(arr, lens)
            return np.asarray(nums, dtype=np.int64), int(d)
        vals = [self.evaluator(Word(self.alphabet, tuple(int(x) for x in row[:n]))) for row, n in zip(arr, lens)]
        d = 1
        for v in vals:
            d = _lcm(d, Fraction(v).denominator)
        return np.array([int(Fraction(v) * d) for v in vals], dtype=np.int64), d

    def many(self, words: Sequence[Word]) -> list[Fraction]:
        if not words:
            return []
        arr, lens = pack(words)
        nums, d = self.eval_packed(arr, lens)
        return [Fraction(int(x), d) for x in nums]


def mgraph_oracle(G) -> LengthOracle:
    return LengthOracle(G.alphabet, G.translation_length, "mgraph", G.batch_lengths, G)


def gog_oracle(spec) -> LengthOracle:
    return LengthOracle(spec.alphabet, spec.translation_length, "gog", spec.batch_lengths, spec)


def oracle_for(tree) -> LengthOracle:
    from .gog import GraphOfGroupsSpec

    if isinstance(tree, GraphOfGroupsSpec):
        return gog_oracle(tree)
    return mgraph_oracle(tree)


def zero_oracle(alphabet: Alphabet) -> LengthOracle:
    return LengthOracle(
        alphabet, lambda w: Fraction(0), "zero", lambda a, l: (np.zeros(len(l), dtype=np.int64), 1)
    )


def sum_oracle(l: LengthOracle, m: LengthOracle) -> LengthOracle:
    if l.alphabet != m.alphabet:
        raise AlphabetMismatch("cannot add length functions over different alphabets")

    def batch(arr, lens):
        a, da = l.eval_packed(arr, lens)
        b, db = m.eval_packed(arr, lens)
        d = _lcm(da, db)
        return a * (d // da) + b * (d // db), d

    return LengthOracle(l.alphabet, lambda w: l(w) + m(w), "sum", batch, (l, m))


def scaled_oracle(l: LengthOracle, factor: Fraction) -> LengthOracle:
    factor = Fraction(factor)
    if factor <= 0:
        raise ValueError("scale factor must be positive")

    def batch(arr, lens):
        a, d = l.eval_packed(arr, lens)
        return a * factor.numerator, d * factor.denominator

    return LengthOracle(l.alphabet, lambda w: l(w) * factor, l.provenance, batch, l.source)


# --- pair classification -----------------------------------------------------------


class LengthFunctionError(ValueError):
    """An oracle value contradicts a property every tree length function has."""


class PairKind(enum.Enum):
    OVERLAP = "Overlap"
    DISJOINT = "Disjoint"
    NEITHER = "Neither"


class Orientation(enum.Enum):
    AGREE = "Agree"
    OPPOSE = "Oppose"
    NOT_OVERLAP = "NotOverlap"


@dataclass(frozen=True)
class PairClass:
    kind: PairKind
    lg: Fraction
    lh: Fraction
    lgh: Fraction
    lghi: Fraction


def _kind(lg, lh, lgh, lghi) -> PairKind:
    if lgh != lghi:
        return PairKind.OVERLAP
    if lgh > lg + lh:
        return PairKind.DISJOINT
    return PairKind.NEITHER


def classify_pair(l: LengthOracle, g: Word, h: Word) -> PairClass:
    if g == h:
        raise ValueError("pairs must be distinct elements")
    lg, lh, lgh, lghi = l.many([g, h, g * h, g * h.inverse()])
    kind = _kind(lg, lh, lgh, lghi)
    if kind != PairKind.DISJOINT:
        # an elliptic g fixing a point of C_h gives l(gh), l(gh^-1) <= l(h); equality can fail
        for a, b in ((lg, lh), (lh, lg)):
            if a == 0 and max(lgh, lghi) > b:
                raise LengthFunctionError(
                    f"elliptic member in a non-disjoint pair ({g}, {h}) but "
                    f"max(l(gh), l(gh^-1)) = {max(lgh, lghi)} > {b}"
                )
    return PairClass(kind, lg, lh, lgh, lghi)


def char_distance(l: LengthOracle, g: Word, h: Word) -> Fraction:
    lg, lh, lgh = l.many([g, h, g * h])
    return max(Fraction(0), lgh - lg - lh) / 2


def overlap_orientation(l: LengthOracle, g: Word, h: Word) -> tuple[Orientation, Fraction | None]:
    """Orientation verdict plus the overlap length when the axes overlap."""
    lg, lh, lgh, lghi = l.many([g, h, g * h, g * h.inverse()])
    if lgh == lghi:
        return Orientation.NOT_OVERLAP, None
    n = (lg + lh - min(lgh, lghi)) / 2
    return (Orientation.AGREE if lgh > lghi else Orientation.OPPOSE), n


# --- bulk pair scans ---------------------------------------------------------------


@dataclass
class ElementSet:
    """A finite element set in shortlex order, packed for the kernels."""

    alphabet: Alphabet
    arr: np.ndarray
    lens: np.ndarray

    @classmethod
    def ball(cls, alphabet: Alphabet, max_len: int) -> "ElementSet":
        arr, lens = words_array(alphabet.rank, max_len)
        return cls(alphabet, arr, lens)

    @classmethod
    def of(cls, words: Sequence[Word]) -> "ElementSet":
        words = sorted(set(words), key=Word.sort_key)
        arr, lens = pack(words)
        return cls(words[0].alphabet, arr, lens)

    def __len__(self):
        return len(self.lens)

    def word(self, i: int) -> Word:
        return Word(self.alphabet, tuple(int(x) for x in self.arr[i, : self.lens[i]]))


def pair_chunks(S: ElementSet, chunk: int = 1 << 20) -> Iterator[tuple[np.ndarray, np.ndarray]]:
    """Ordered pairs ``(i, j)``, ``i != j``, ordered by ``max(|g|, |h|)`` then ``(i, j)``."""
    lens = S.lens
    n = len(lens)
    maxlen = int(lens.max()) if n else 0
    off = np.searchsorted(lens, np.arange(maxlen + 2), side="left")
    buf_i: list[np.ndarray] = []
    buf_j: list[np.ndarray] = []
    size = 0
    for L in range(maxlen + 1):
        lo, hi = int(off[L]), int(off[L + 1])
        for i in range(hi):
            js = np.arange(lo, hi) if i < lo else np.arange(0, hi)
            js = js[js != i]
            if not len(js):
                continue
            buf_i.append(np.full(len(js), i, dtype=np.int64))
            buf_j.append(js.astype(np.int64))
            size += len(js)
            if size >= chunk:
                yield np.concatenate(buf_i), np.concatenate(buf_j)
                buf_i, buf_j, size = [], [], 0
    if size:
        yield np.concatenate(buf_i), np.concatenate(buf_j)


def _products(S: ElementSet, terms: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    return K.multiply_terms(S.arr, S.lens, terms)


@dataclass
class PairValues:
    """Scaled values on a chunk of pairs: l(g), l(h), l(gh), l(gh^-1) (and l(hgh^-1))."""

    pi: np.ndarray
    pj: np.ndarray
    lg: np.ndarray
    lh: np.ndarray
    lgh: np.ndarray
    lghi: np.ndarray
    denom: int
    lconj: np.ndarray | None = None

    def kinds(self) -> np.ndarray:
        """0 Neither, 1 Overlap, 2 Disjoint."""
        k = np.zeros(len(self.pi), dtype=np.int8)
        k[(self.lgh == self.lghi) & (self.lgh > self.lg + self.lh)] = 2
        k[self.lgh != self.lghi] = 1
        return k

    def frac(self, arr: np.ndarray, r: int) -> Fraction:
        return Fraction(int(arr[r]), self.denom)


def pair_values(
    l: LengthOracle, S: ElementSet, single: tuple[np.ndarray, int], pi: np.ndarray, pj: np.ndarray, conj: bool = False
) -> PairValues:
    vals, d = single
    t = np.zeros((len(pi), 3), dtype=np.int64)
    t[:, 0] = pi + 1
    t[:, 1] = pj + 1
    gh = l.eval_packed(*_products(S, t))
    t[:, 1] = -(pj + 1)
    ghi = l.eval_packed(*_products(S, t))
    denom = _lcm(_lcm(d, gh[1]), ghi[1])

    def sc(a, da):
        return a * (denom // da)

    lconj = None
    if conj:
        t[:, 0] = pj + 1
        t[:, 1] = pi + 1
        t[:, 2] = -(pj + 1)
        c = l.eval_packed(*_products(S, t))
        denom = _lcm(denom, c[1])
        lconj = sc(c[0], c[1])
        return PairValues(pi, pj, sc(vals[pi], d), sc(vals[pj], d), sc(gh[0], gh[1]), sc(ghi[0], ghi[1]), denom, lconj)
    return PairValues(pi, pj, sc(vals[pi], d), sc(vals[pj], d), sc(gh[0], gh[1]), sc(ghi[0], ghi[1]), denom)


# --- axioms ------------------------------------------------------------------------


@dataclass
class Violation:
    axiom: str
    words: tuple[str, ...]
    detail: str


@dataclass
class AxiomReport:
    verdicts: dict[str, bool]
    violations: list[Violation] = field(default_factory=list)
    witness: tuple[Word, Word] | None = None
    checked: int = 0
    max_listed: int = 50

    @property
    def ok(self) -> bool:
        return all(self.verdicts.values())

    def failed(self) -> list[str]:
        return [k for k, v in self.verdicts.items() if not v]

    def add(self, v: Violation):
        if len([x for x in self.violations if x.axiom == v.axiom]) < self.max_listed:
            self.violations.append(v)
        self.verdicts[v.axiom] = False


def check_axioms(l: LengthOracle, S: ElementSet | Sequence[Word], max_listed: int = 50) -> AxiomReport:
    """Check axioms I-V on S (pointwise and on all ordered pairs) and search S x S for VI."""
    if not isinstance(S, ElementSet):
        S = ElementSet.of(list(S))
    rep = AxiomReport({k: True for k in ("nonnegative", "I", "II", "III", "IV", "V", "VI")}, max_listed=max_listed)
    vals, d = l.eval_packed(S.arr, S.lens)
    F = lambda x, dd=d: Fraction(int(x), dd)  # noqa: E731
    neg = np.nonzero(vals < 0)[0]
    for i in neg[:max_listed]:
        rep.add(Violation("nonnegative", (str(S.word(i)),), f"l = {F(vals[i])} < 0"))
    if len(neg):
        for k in ("I", "II", "III", "IV", "V", "VI"):
            rep.verdicts[k] = False
        return rep
    ident = np.nonzero(S.lens == 0)[0]
    if not len(ident):
        raise ValueError("element set must contain the identity")
    if vals[ident[0]] != 0:
        rep.add(Violation("I", ("1",), f"l(1) = {F(vals[ident[0]])}"))
    inv = np.zeros((len(S), 1), dtype=np.int64)
    inv[:, 0] = -(np.arange(len(S)) + 1)
    ivals, di = l.eval_packed(*_products(S, inv))
    for i in np.nonzero(vals * di != ivals * d)[0]:
        rep.add(Violation("II", (str(S.word(i)),), f"l(g) = {F(vals[i])} but l(g^-1) = {Fraction(int(ivals[i]), di)}"))
    witness = None
    for pi, pj in pair_chunks(S):
        pv = pair_values(l, S, (vals, d), pi, pj, conj=True)
        D = pv.denom
        G = lambda a, r: Fraction(int(a[r]), D)  # noqa: E731
        rep.checked += len(pi)
        bad = np.nonzero(pv.lconj != pv.lg)[0]
        for r in bad:
            g, h = S.word(pi[r]), S.word(pj[r])
            rep.add(Violation("III", (str(g), str(h)), f"l(g) = {G(pv.lg, r)} but l(hgh^-1) = {G(pv.lconj, r)}"))
        s = pv.lg + pv.lh
        mx = np.maximum(pv.lgh, pv.lghi)
        bad = np.nonzero((pv.lgh != pv.lghi) & (mx > s))[0]
        for r in bad:
            g, h = S.word(pi[r]), S.word(pj[r])
            rep.add(
                Violation(
                    "IV",
                    (str(g), str(h)),
                    f"l(gh) = {G(pv.lgh, r)} != l(gh^-1) = {G(pv.lghi, r)} and "
                    f"max = {G(mx, r)} > l(g) + l(h) = {G(s, r)}",
                )
            )
        hyp = (pv.lg > 0) & (pv.lh > 0)
        okV = ((pv.lgh == pv.lghi) & (pv.lgh > s)) | (mx == s)
        bad = np.nonzero(hyp & ~okV)[0]
        for r in bad:
            g, h = S.word(pi[r]), S.word(pj[r])
            rel = "<" if mx[r] < s[r] else ">"
            rep.add(
                Violation(
                    "V",
                    (str(g), str(h)),
                    f"max(l(gh), l(gh^-1)) = max({G(pv.lgh, r)}, {G(pv.lghi, r)}) = {G(mx, r)} "
                    f"{rel} l(g) + l(h) = {G(s, r)} and not (l(gh) = l(gh^-1) > l(g) + l(h))",
                )
            )
        if witness is None:
            x = s - pv.lghi
            good = np.nonzero((x > 0) & (x < 2 * np.minimum(pv.lg, pv.lh)))[0]
            if len(good):
                r = good[0]
                witness = (S.word(pi[r]), S.word(pj[r]))
    rep.witness = witness
    if witness is None:
        rep.verdicts["VI"] = False
        rep.violations.append(Violation("VI", (), f"no good pair among {len(S)} elements"))
    return rep


# --- compatibility -------------------------------------------------------------------


class Verdict(enum.Enum):
    INCOMPATIBLE_COMBINATORICS = "IncompatibleCombinatorics"
    INCOHERENT_ORIENTATION = "IncoherentOrientation"
    COMPATIBLE_UP_TO_BOUND = "CompatibleUpToBound"
    UNKNOWN = "Unknown"


@dataclass
class CompatResult:
    verdict: Verdict
    witness: tuple[Word, Word] | None = None
    combinatorial: tuple[Word, Word] | None = None  # first pair in O∩D or D∩O
    orientation: tuple[Word, Word] | None = None  # first pair in O∩O with opposite orderings
    pairs_checked: int = 0
    note: str = ""

    @property
    def incompatible(self) -> bool:
        return self.verdict in (Verdict.INCOMPATIBLE_COMBINATORICS, Verdict.INCOHERENT_ORIENTATION)


def compatible_on(
    l: LengthOracle, m: LengthOracle, S: ElementSet | Sequence[Word], stop_early: bool = True
) -> CompatResult:
    """Scan all ordered pairs of distinct elements of S for a compatibility violation.

    With ``stop_early`` the scan stops once both kinds of witness are known or the
    level containing the first combinatorial witness is finished.
    """
    if l.alphabet != m.alphabet:
        raise AlphabetMismatch("oracles over different alphabets")
    if not isinstance(S, ElementSet):
        S = ElementSet.of(list(S))
    lv = l.eval_packed(S.arr, S.lens)
    mv = m.eval_packed(S.arr, S.lens)
    comb = orient = None
    checked = 0
    for pi, pj in pair_chunks(S):
        a = pair_values(l, S, lv, pi, pj)
        b = pair_values(m, S, mv, pi, pj)
        checked += len(pi)
        ka, kb = a.kinds(), b.kinds()
        if comb is None:
            hit = np.nonzero(((ka == 1) & (kb == 2)) | ((ka == 2) & (kb == 1)))[0]
            if len(hit):
                r = hit[0]
                comb = (S.word(pi[r]), S.word(pj[r]))
        if orient is None:
            sa = np.sign(a.lgh - a.lghi)
            sb = np.sign(b.lgh - b.lghi)
            hit = np.nonzero((ka == 1) & (kb == 1) & (sa != sb))[0]
            if len(hit):
                r = hit[0]
                orient = (S.word(pi[r]), S.word(pj[r]))
        if stop_early and comb is not None and orient is not None:
            break
    if comb is not None:
        return CompatResult(Verdict.INCOMPATIBLE_COMBINATORICS, comb, comb, orient, checked)
    if orient is not None:
        return CompatResult(Verdict.INCOHERENT_ORIENTATION, orient, None, orient, checked)
    return CompatResult(Verdict.COMPATIBLE_UP_TO_BOUND, pairs_checked=checked)


def recheck_witness(l: LengthOracle, m: LengthOracle, res: CompatResult) -> bool:
    """Re-derive a compatibility witness with classify_pair alone."""
    if res.witness is None:
        return False
    g, h = res.witness
    a, b = classify_pair(l, g, h), classify_pair(m, g, h)
    if res.verdict == Verdict.INCOMPATIBLE_COMBINATORICS:
        return {a.kind, b.kind} == {PairKind.OVERLAP, PairKind.DISJOINT}
    if res.verdict == Verdict.INCOHERENT_ORIENTATION:
        return (
            a.kind == b.kind == PairKind.OVERLAP
            and (a.lgh > a.lghi) != (b.lgh > b.lghi)
        )
    return False


# --- good pairs ----------------------------------------------------------------------


class GoodPairError(ValueError):
    pass


@dataclass(frozen=True)
class GoodPairCertificate:
    g: Word
    h: Word
    lg: Fraction
    lh: Fraction
    lgh: Fraction
    lghi: Fraction
    provenance: str = ""
    assumptions: tuple[str, ...] = ()

    @property
    def overlap(self) -> Fraction:
        return (self.lg + self.lh - self.lghi) / 2

    @property
    def slack_low(self) -> Fraction:
        """``l(g) + l(h) - l(gh^-1)``, must be > 0."""
        return self.lg + self.lh - self.lghi

    @property
    def slack_high(self) -> Fraction:
        """``2 min(l(g), l(h)) - (l(g) + l(h) - l(gh^-1))``, must be > 0."""
        return 2 * min(self.lg, self.lh) - self.slack_low

    def holds(self) -> bool:
        return self.slack_low > 0 and self.slack_high > 0

    @property
    def words(self) -> tuple[Word, Word, Word]:
        return self.g, self.h, self.g * self.h.inverse()


def good_pair_values(l: LengthOracle, g: Word, h: Word, **kw) -> GoodPairCertificate:
    lg, lh, lgh, lghi = l.many([g, h, g * h, g * h.inverse()])
    return GoodPairCertificate(g, h, lg, lh, lgh, lghi, provenance=l.provenance, **kw)


def is_good_pair(l: LengthOracle, g: Word, h: Word) -> bool:
    return good_pair_values(l, g, h).holds()


MAX_DOUBLINGS = 32


def power_good_pair(l: LengthOracle, g: Word, h: Word) -> tuple[int, int]:
    """Exponents (A, B) with (g^A, h^B) a good pair, for overlapping agreeing axes."""
    orient, n = overlap_orientation(l, g, h)
    if orient != Orientation.AGREE:
        raise GoodPairError(f"({g}, {h}) is not an overlapping pair with agreeing orientations ({orient.value})")
    lg, lh = l(g), l(h)
    A = max(1, math.ceil(n / lg))
    B = max(1, math.ceil(n / lh))
    # the overlap of the power axes is still n, so strictness needs A l(g) > n
    if A * lg <= n:
        A += 1
    if B * lh <= n:
        B += 1
    for _ in range(MAX_DOUBLINGS + 1):
        if is_good_pair(l, g**A, h**B):
            return A, B
        A, B = 2 * A, 2 * B
    raise GoodPairError(f"no good power pair for ({g}, {h}) after {MAX_DOUBLINGS} doublings: overlap is unbounded")


def good_pair_from_independent(l: LengthOracle, g: Word, h: Word) -> GoodPairCertificate:
    lg, lh = l(g), l(h)
    if not (lg > lh):
        raise GoodPairError(f"need l(g) > l(h), got l(g) = {lg}, l(h) = {lh}")
    assumed = (
        "g and h independent in the tree",
        "orientation hypothesis on the axes of g and h",
    )
    x, y = g * h, g * h.inverse()
    cert = good_pair_values(l, x, y, assumptions=assumed)
    if cert.holds():
        return cert
    try:
        A, B = power_good_pair(l, x, y)
    except GoodPairError as exc:
        raise GoodPairError(f"hypotheses violated: ({x}, {y}) cannot be powered to a good pair: {exc}") from None
    cert = good_pair_values(l, x**A, y**B, assumptions=assumed + (f"powers ({A}, {B})",))
    if not cert.holds():
        raise GoodPairError("hypotheses violated: escalated pair is not good")
    return cert


def simultaneous_good_pair(
    l: LengthOracle, m: LengthOracle, bound: int
) -> tuple[GoodPairCertificate, GoodPairCertificate] | None:
    """First pair (level order) that is good for l, m and l + m; None if none up to bound."""
    if bound <= 0:
        return None
    S = ElementSet.ball(l.alphabet, bound)
    lv = l.eval_packed(S.arr, S.lens)
    mv = m.eval_packed(S.arr, S.lens)
    for pi, pj in pair_chunks(S, chunk=1 << 16):
        a = pair_values(l, S, lv, pi, pj)
        b = pair_values(m, S, mv, pi, pj)

        def good(p: PairValues):
            x = p.lg + p.lh - p.lghi
            return (x > 0) & (x < 2 * np.minimum(p.lg, p.lh))

        # l + m on a common denominator
        D = _lcm(a.denom, b.denom)
        fa, fb = D // a.denom, D // b.denom
        s = PairValues(pi, pj, a.lg * fa + b.lg * fb, a.lh * fa + b.lh * fb,
                       a.lgh * fa + b.lgh * fb, a.lghi * fa + b.lghi * fb, D)
        hit = np.nonzero(good(a) & good(b) & good(s))[0]
        if len(hit):
            r = hit[0]
            g, h = S.word(pi[r]), S.word(pj[r])
            return good_pair_values(l, g, h), good_pair_values(m, g, h)
    return None


# --- based lengths from a good pair --------------------------------------------------


def dagger_packed(l: LengthOracle, gp: GoodPairCertificate, karr: np.ndarray, klens: np.ndarray) -> tuple[np.ndarray, int]:
    """Scaled ``max_{x, x'} char_distance(x, k^-1 x' k)`` over ``x, x'`` in ``{g, h, gh^-1}``."""
    xs = list(gp.words)
    xa, xl = pack(xs, width=karr.shape[1])
    width = max(xa.shape[1], karr.shape[1])
    arr = np.zeros((3 + len(klens), width), dtype=np.int8)
    arr[:3, : xa.shape[1]] = xa
    arr[3:, : karr.shape[1]] = karr
    lens = np.concatenate([xl, klens]).astype(np.int64)
    xv, dx = l.eval_packed(arr[:3], lens[:3])
    n = len(klens)
    kidx = np.arange(n, dtype=np.int64) + 4
    best = None
    denom = None
    for a in range(3):
        for b in range(3):
            t = np.zeros((n, 4), dtype=np.int64)
            t[:, 0] = a + 1
            t[:, 1] = -kidx
            t[:, 2] = b + 1
            t[:, 3] = kidx
            v, dv = l.eval_packed(*K.multiply_terms(arr, lens, t))
            D = _lcm(dv, dx)
            diff = v * (D // dv) - (xv[a] + xv[b]) * (D // dx)
            if denom is None:
                denom = D
                best = diff
            else:
                E = _lcm(denom, D)
                best = np.maximum(best * (E // denom), diff * (E // D))
                denom = E
    best = np.maximum(best, 0)
    return best, 2 * denom


def _check_gp(l: LengthOracle, gp: GoodPairCertificate):
    if not good_pair_values(l, gp.g, gp.h).holds():
        raise GoodPairError(f"({gp.g}, {gp.h}) is not a good pair for this length function")


def based_length_dagger(l: LengthOracle, gp: GoodPairCertificate, k: Word) -> Fraction:
    _check_gp(l, gp)
    best = Fraction(0)
    for x in gp.words:
        for y in gp.words:
            best = max(best, char_distance(l, x, y.conjugate(k.inverse())))
    return best


def dagger_oracle(l: LengthOracle, gp: GoodPairCertificate) -> LengthOracle:
    _check_gp(l, gp)
    return LengthOracle(
        l.alphabet,
        lambda k: based_length_dagger(l, gp, k),
        "derived-based",
        lambda arr, lens: dagger_packed(l, gp, arr, lens),
        (l, gp),
    )


@dataclass
class SumIdentityReport:
    checked: int
    violations: list[tuple[str, Fraction, Fraction, Fraction]] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def based_sum_identity(
    l: LengthOracle, m: LengthOracle, gp: GoodPairCertificate, S: ElementSet | Sequence[Word]
) -> SumIdentityReport:
    """Check ``L*_{l+m}(k) = L*_l(k) + L*_m(k)`` for every k in S."""
    if not isinstance(S, ElementSet):
        S = ElementSet.of(list(S))
    s = sum_oracle(l, m)
    for o in (l, m, s):
        _check_gp(o, gp)
    a, da = dagger_packed(l, gp, S.arr, S.lens)
    b, db = dagger_packed(m, gp, S.arr, S.lens)
    c, dc = dagger_packed(s, gp, S.arr, S.lens)
    D = _lcm(_lcm(da, db), dc)
    lhs = c * (D // dc)
    rhs = a * (D // da) + b * (D // db)
    rep = SumIdentityReport(len(S))
    for i in np.nonzero(lhs != rhs)[0]:
        rep.violations.append(
            (str(S.word(i)), Fraction(int(c[i]), dc), Fraction(int(a[i]), da), Fraction(int(b[i]), db))
        )
    return rep
