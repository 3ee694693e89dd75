"""Free group words over a named alphabet, plus Stallings folding.

Letters are encoded as signed integers: ``+(i + 1)`` is the i-th generator and
``-(i + 1)`` its inverse.  Canonical order is declaration order with each
inverse sorted immediately after its letter (``a < a' < b < b' < ...``).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Sequence

import numpy as np


class InputError(ValueError):
    """Malformed user input (unknown letter, bad syntax, bad file)."""


class AlphabetMismatch(ValueError):
    pass


def letter_key(x: int) -> int:
    return 2 * (abs(x) - 1) + (1 if x < 0 else 0)


def key_letter(k: int) -> int:
    return -(k // 2 + 1) if k % 2 else k // 2 + 1


def free_reduce(letters: Iterable[int]) -> tuple[int, ...]:
    stack: list[int] = []
    for x in letters:
        if stack and stack[-1] == -x:
            stack.pop()
        else:
            stack.append(x)
    return tuple(stack)


def cyclic_core(letters: Sequence[int]) -> tuple[int, int]:
    """Return (i, j) with ``letters[i:j]`` the cyclically reduced core of a reduced word."""
    i, j = 0, len(letters)
    while j - i >= 2 and letters[i] == -letters[j - 1]:
        i += 1
        j -= 1
    return i, j


def least_rotation(letters: Sequence[int]) -> int:
    """Offset of the lexicographically least rotation under the canonical letter order."""
    n = len(letters)
    if n == 0:
        return 0
    keys = [letter_key(x) for x in letters]
    best = 0
    for k in range(1, n):
        for t in range(n):
            a, b = keys[(k + t) % n], keys[(best + t) % n]
            if a != b:
                if a < b:
                    best = k
                break
    return best


_POWER = re.compile(r"\s*(\^\s*(-?\d+)|'|⁻¹)?")


@dataclass(frozen=True)
class Alphabet:
    names: tuple[str, ...]

    def __post_init__(self):
        names = tuple(self.names)
        object.__setattr__(self, "names", names)
        if not names:
            raise InputError("alphabet must have rank >= 1")
        if len(set(names)) != len(names):
            raise InputError(f"duplicate letter names in {names}")
        for n in names:
            if not n or not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", n):
                raise InputError(f"bad letter name {n!r}")

    @property
    def rank(self) -> int:
        return len(self.names)

    @cached_property
    def _index(self) -> dict[str, int]:
        return {n: i + 1 for i, n in enumerate(self.names)}

    @cached_property
    def _token(self) -> re.Pattern:
        alts = "|".join(re.escape(n) for n in sorted(self.names, key=len, reverse=True))
        return re.compile(alts)

    def letter(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise InputError(f"unknown letter {name!r} (alphabet {', '.join(self.names)})") from None

    def name(self, x: int) -> str:
        return self.names[abs(x) - 1] + ("'" if x < 0 else "")

    def word(self, raw: Iterable[int | str] = ()) -> "Word":
        out: list[int] = []
        for x in raw:
            if isinstance(x, str):
                out.extend(self.parse(x).letters)
                continue
            x = int(x)
            if x == 0 or abs(x) > self.rank:
                raise InputError(f"letter index {x} outside alphabet of rank {self.rank}")
            out.append(x)
        return Word(self, tuple(out))

    def parse(self, text: str) -> "Word":
        """Parse ``"a b' a^-1 c^2"``; ``""``, ``"1"`` and ``"id"`` denote the identity."""
        s = text.strip()
        if s in ("", "1", "id"):
            return Word(self, ())
        out: list[int] = []
        pos = 0
        while pos < len(s):
            if s[pos].isspace() or s[pos] in "*·.":
                pos += 1
                continue
            m = self._token.match(s, pos)
            if m is None:
                raise InputError(f"cannot parse {text!r} at column {pos + 1}: unknown letter")
            x = self._index[m.group(0)]
            pos = m.end()
            p = _POWER.match(s, pos)
            power = 1
            if p and p.group(1):
                if p.group(2) is not None:
                    power = int(p.group(2))
                else:
                    power = -1
                pos = p.end()
            out.extend([x if power > 0 else -x] * abs(power))
        return Word(self, tuple(out))

    def format(self, letters: Sequence[int]) -> str:
        return " ".join(self.name(x) for x in letters) if letters else "1"

    def generators(self) -> list["Word"]:
        return [Word(self, (i + 1,)) for i in range(self.rank)]

    def identity(self) -> "Word":
        return Word(self, ())


@dataclass(frozen=True, eq=False)
class Word:
    """A freely reduced word.  Constructors always reduce."""

    alphabet: Alphabet
    letters: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "letters", free_reduce(self.letters))

    def __eq__(self, other):
        if not isinstance(other, Word):
            return NotImplemented
        return self.letters == other.letters and self.alphabet == other.alphabet

    def __hash__(self):
        return hash(self.letters)

    def __len__(self):
        return len(self.letters)

    def __bool__(self):
        return bool(self.letters)

    def __str__(self):
        return self.alphabet.format(self.letters)

    def __repr__(self):
        return f"Word({str(self)!r})"

    def _check(self, other: "Word"):
        if other.alphabet != self.alphabet:
            raise AlphabetMismatch(f"{self.alphabet.names} vs {other.alphabet.names}")

    def __mul__(self, other: "Word") -> "Word":
        self._check(other)
        return Word(self.alphabet, self.letters + other.letters)

    def inverse(self) -> "Word":
        return Word(self.alphabet, tuple(-x for x in reversed(self.letters)))

    def __pow__(self, n: int) -> "Word":
        base = self if n >= 0 else self.inverse()
        return Word(self.alphabet, base.letters * abs(n))

    def conjugate(self, u: "Word") -> "Word":
        """``u w u^-1``."""
        self._check(u)
        return Word(self.alphabet, u.letters + self.letters + u.inverse().letters)

    def sort_key(self) -> tuple:
        return (len(self.letters), tuple(letter_key(x) for x in self.letters))

    def is_cyclically_reduced(self) -> bool:
        return len(self.letters) < 2 or self.letters[0] != -self.letters[-1]


@dataclass(frozen=True)
class CyclicWord:
    """A conjugacy class, stored as the least rotation of its cyclically reduced form."""

    alphabet: Alphabet
    letters: tuple[int, ...]

    @classmethod
    def of(cls, w: Word) -> "CyclicWord":
        return cyclic_reduce(w)[0]

    def word(self) -> Word:
        return Word(self.alphabet, self.letters)

    def __len__(self):
        return len(self.letters)

    def __str__(self):
        return self.alphabet.format(self.letters)


def reduce(alphabet: Alphabet, raw: Iterable[int | str]) -> Word:
    return alphabet.word(raw)


def cyclic_reduce(w: Word) -> tuple[CyclicWord, Word]:
    """Return ``(c, u)`` with ``w = u c u^-1`` and ``c`` the canonical cyclic representative."""
    i, j = cyclic_core(w.letters)
    core = w.letters[i:j]
    k = least_rotation(core)
    rotated = core[k:] + core[:k]
    u = Word(w.alphabet, w.letters[:i] + core[:k])
    return CyclicWord(w.alphabet, rotated), u


def concat(u: Word, v: Word) -> Word:
    return u * v


def invert(w: Word) -> Word:
    return w.inverse()


def conjugate(w: Word, u: Word) -> Word:
    return w.conjugate(u)


def words_array(rank: int, max_len: int, cyclic: bool = False) -> tuple[np.ndarray, np.ndarray]:
    """All reduced (or necklace-representative) words of length <= max_len as a padded array."""
    from . import _kernels as K

    if max_len < 0:
        raise ValueError("max_len must be >= 0")
    if cyclic:
        return K.enumerate_necklaces(rank, max_len)
    return K.enumerate_reduced(rank, max_len)


def enumerate_words(alphabet: Alphabet, max_len: int, cyclic: bool = False) -> Iterator[Word | CyclicWord]:
    """Shortlex stream of reduced words (or one canonical word per cyclic class)."""
    arr, lens = words_array(alphabet.rank, max_len, cyclic)
    for row, n in zip(arr, lens):
        letters = tuple(int(x) for x in row[:n])
        if cyclic:
            yield CyclicWord(alphabet, letters)
        else:
            yield Word(alphabet, letters)


def pack(words: Sequence[Word], width: int | None = None) -> tuple[np.ndarray, np.ndarray]:
    lens = np.array([len(w) for w in words], dtype=np.int64)
    width = max(int(lens.max()) if len(words) else 0, width or 0, 1)
    arr = np.zeros((len(words), width), dtype=np.int8)
    for r, w in enumerate(words):
        arr[r, : len(w)] = w.letters
    return arr, lens


def unpack(alphabet: Alphabet, arr: np.ndarray, lens: np.ndarray) -> list[Word]:
    return [Word(alphabet, tuple(int(x) for x in row[:n])) for row, n in zip(arr, lens)]


# --- Stallings folding -------------------------------------------------------


class _Folder:
    """Union-find folding of a graph whose edge labels come in inverse pairs ``x, -x``."""

    def __init__(self):
        self.parent: list[int] = []
        self.out: list[dict[int, int]] = []

    def new_state(self) -> int:
        self.parent.append(len(self.parent))
        self.out.append({})
        return len(self.parent) - 1

    def find(self, s: int) -> int:
        while self.parent[s] != s:
            self.parent[s] = self.parent[self.parent[s]]
            s = self.parent[s]
        return s

    def add_edge(self, u: int, label: int, v: int):
        pending = [(u, label, v)]
        while pending:
            u, label, v = pending.pop()
            u, v = self.find(u), self.find(v)
            for s, lab, t in ((u, label, v), (v, -label, u)):
                s, t = self.find(s), self.find(t)
                old = self.out[s].get(lab)
                if old is None:
                    self.out[s][lab] = t
                elif self.find(old) != t:
                    pending.extend(self._merge(self.find(old), t))

    def _merge(self, a: int, b: int) -> list[tuple[int, int, int]]:
        if a == b:
            return []
        if len(self.out[a]) < len(self.out[b]):
            a, b = b, a
        self.parent[b] = a
        moved = self.out[b]
        self.out[b] = {}
        return [(a, lab, t) for lab, t in moved.items()]

    def add_path(self, base: int, labels: Sequence[int]) -> None:
        cur = base
        for i, lab in enumerate(labels):
            nxt = base if i == len(labels) - 1 else self.new_state()
            self.add_edge(cur, lab, nxt)
            cur = nxt

    def result(self, base: int) -> tuple[int, dict[int, dict[int, int]]]:
        roots = sorted({self.find(s) for s in range(len(self.parent))})
        trans: dict[int, dict[int, int]] = {}
        for r in roots:
            trans[r] = {lab: self.find(t) for lab, t in self.out[r].items()}
        return self.find(base), trans


@dataclass(frozen=True)
class SubgroupAutomaton:
    """Folded core graph of a finitely generated subgroup of a free group."""

    alphabet: Alphabet
    base: int
    transitions: dict[int, dict[int, int]] = field(hash=False)

    @property
    def states(self) -> list[int]:
        return sorted(self.transitions)

    def rank(self) -> int:
        edges = sum(len(t) for t in self.transitions.values()) // 2
        return edges - len(self.transitions) + 1


def _trim(base: int, trans: dict[int, dict[int, int]]) -> dict[int, dict[int, int]]:
    trans = {s: dict(t) for s, t in trans.items()}
    changed = True
    while changed:
        changed = False
        for s in list(trans):
            if s != base and len(trans[s]) <= 1:
                for lab, t in trans[s].items():
                    trans[t].pop(-lab, None)
                del trans[s]
                changed = True
    return trans


def build_subgroup_automaton(generators: Sequence[Word]) -> SubgroupAutomaton:
    if not generators:
        raise ValueError("need at least one generator")
    alphabet = generators[0].alphabet
    f = _Folder()
    base = f.new_state()
    for g in generators:
        if g.alphabet != alphabet:
            raise AlphabetMismatch("generators over different alphabets")
        if g.letters:
            f.add_path(base, g.letters)
    base, trans = f.result(base)
    trans = _trim(base, trans)
    # renumber states 0..n-1 with base first
    order = [base] + [s for s in sorted(trans) if s != base]
    ren = {s: i for i, s in enumerate(order)}
    trans = {ren[s]: {lab: ren[t] for lab, t in trans[s].items()} for s in order}
    return SubgroupAutomaton(alphabet, 0, trans)


def member(aut: SubgroupAutomaton, w: Word) -> bool:
    if w.alphabet != aut.alphabet:
        raise AlphabetMismatch("word and automaton over different alphabets")
    s = aut.base
    for x in w.letters:
        t = aut.transitions[s].get(x)
        if t is None:
            return False
        s = t
    return s == aut.base
