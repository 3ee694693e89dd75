from __future__ import annotations

import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import AB, ABCG, nontrivial, w, words
from gtrees.words import (
    Alphabet,
    AlphabetMismatch,
    CyclicWord,
    InputError,
    build_subgroup_automaton,
    cyclic_reduce,
    enumerate_words,
    member,
    pack,
    unpack,
    words_array,
)


def naive_reduce(xs):
    out = []
    for x in xs:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


def naive_necklaces(rank, n):
    letters = [x for i in range(1, rank + 1) for x in (i, -i)]
    seen = set()
    for xs in itertools.product(letters, repeat=n):
        if naive_reduce(xs) != xs or (n > 1 and xs[0] == -xs[-1]):
            continue
        seen.add(min(xs[i:] + xs[:i] for i in range(n)))
    return len(seen)


# --- parsing and formatting ----------------------------------------------------------


def test_parse_forms():
    assert w("a b a^-1") == w("aba'") == w("a b a⁻¹")
    assert w("a^3") == w("a a a")
    assert w("b^-2") == w("b' b'")
    assert not w("") and not w("1") and not w("id")


def test_parse_reduces():
    assert w("a b b' a'") == AB.identity()


def test_parse_errors():
    with pytest.raises(InputError):
        w("a z")
    with pytest.raises(InputError):
        Alphabet(("a", "a"))


def test_longest_name_tokenization():
    A = Alphabet(("x", "x1"))
    assert A.parse("x1x").letters == (2, 1)


@given(words(AB))
def test_format_roundtrip(u):
    assert AB.parse(str(u)) == u


# --- group operations ---------------------------------------------------------------


@given(st.lists(st.sampled_from([1, -1, 2, -2]), max_size=12))
def test_reduction_matches_stack_oracle(xs):
    assert AB.word(xs).letters == naive_reduce(xs)


@given(words(AB), words(AB), words(AB))
def test_associativity(u, v, x):
    assert (u * v) * x == u * (v * x)


@given(words(AB))
def test_inverse(u):
    assert (u * u.inverse()) == AB.identity()
    assert u.inverse().inverse() == u


@given(words(AB), st.integers(-3, 3))
def test_power(u, n):
    expect = AB.identity()
    for _ in range(abs(n)):
        expect = expect * (u if n > 0 else u.inverse())
    assert u**n == expect


def test_mixed_alphabets_rejected():
    with pytest.raises(AlphabetMismatch):
        w("a") * ABCG.parse("a")


# --- cyclic reduction ---------------------------------------------------------------


def test_cyclic_reduce_examples():
    c, u = cyclic_reduce(w("a a b a' a'"))
    assert str(c) == "b" and u == w("a a")
    c, u = cyclic_reduce(w("a b"))
    assert c.word() == w("a b") and not u


@given(words(AB))
def test_cyclic_reduce_factorization(x):
    c, u = cyclic_reduce(x)
    assert u * c.word() * u.inverse() == x
    assert c.word().is_cyclically_reduced()


@given(words(AB), words(AB))
def test_cyclic_reduce_conjugation_invariant(x, u):
    assert cyclic_reduce(x.conjugate(u))[0] == cyclic_reduce(x)[0]


# --- enumeration --------------------------------------------------------------------


@pytest.mark.parametrize("rank,n,count", [(1, 1, 3), (2, 1, 5), (2, 2, 17), (3, 3, 1 + 6 + 30 + 150)])
def test_enumeration_counts(rank, n, count):
    A = Alphabet(tuple("abcd"[:rank]))
    ws = list(enumerate_words(A, n))
    assert len(ws) == count == len(set(ws))


def test_enumeration_rank1():
    A = Alphabet(("a",))
    assert [str(x) for x in enumerate_words(A, 1)] == ["1", "a", "a'"]


def test_enumeration_shortlex():
    ws = list(enumerate_words(AB, 3))
    keys = [x.sort_key() for x in ws]
    assert keys == sorted(keys)


@pytest.mark.parametrize("rank,n", [(2, 4), (2, 5), (3, 4)])
def test_necklace_counts_against_brute_force(rank, n):
    arr, lens = words_array(rank, n, cyclic=True)
    assert int((lens == n).sum()) == naive_necklaces(rank, n)


def test_necklaces_are_least_rotations():
    for c in enumerate_words(AB, 5, cyclic=True):
        assert isinstance(c, CyclicWord)
        if len(c):
            assert cyclic_reduce(c.word())[0] == c


def test_pack_roundtrip():
    ws = list(enumerate_words(AB, 3))
    assert unpack(AB, *pack(ws)) == ws


# --- folding ------------------------------------------------------------------------


def test_membership():
    aut = build_subgroup_automaton([w("a a")])
    assert member(aut, w("a^4")) and not member(aut, w("a^3"))
    aut = build_subgroup_automaton([w("a b"), w("b a")])
    assert member(aut, w("a b b a")) and not member(aut, w("a"))


@settings(max_examples=50)
@given(nontrivial(AB, 4), nontrivial(AB, 4), st.lists(st.sampled_from([0, 1]), min_size=1, max_size=5))
def test_membership_of_products(g, h, seq):
    aut = build_subgroup_automaton([g, h])
    prod = AB.identity()
    for s in seq:
        prod = prod * (g if s else h.inverse())
    assert member(aut, prod)


def test_full_group_automaton_rank():
    assert build_subgroup_automaton([w("a b"), w("b")]).rank() == 2
