from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from conftest import AB, ABCG, gog, mmg, nontrivial, w
from gtrees.lfcore import (
    ElementSet,
    GoodPairError,
    Orientation,
    PairKind,
    Verdict,
    based_length_dagger,
    based_sum_identity,
    check_axioms,
    classify_pair,
    compatible_on,
    dagger_oracle,
    dagger_packed,
    good_pair_from_independent,
    good_pair_values,
    mgraph_oracle,
    gog_oracle,
    overlap_orientation,
    pair_chunks,
    power_good_pair,
    recheck_witness,
    scaled_oracle,
    simultaneous_good_pair,
    sum_oracle,
    zero_oracle,
)
from gtrees.words import AlphabetMismatch, enumerate_words

ROSE, BARBELL, PHI2 = (mgraph_oracle(mmg(n)) for n in ("rose2", "barbell", "rose2_phi2"))
EA, EB = gog_oracle(gog("example10_A")), gog_oracle(gog("example10_B"))


def test_classify_examples():
    c = classify_pair(ROSE, w("a b"), w("b"))
    assert c.kind == PairKind.OVERLAP and (c.lgh, c.lghi) == (3, 1)
    assert classify_pair(ROSE, w("a"), w("b")).kind == PairKind.NEITHER
    c = classify_pair(BARBELL, w("a"), w("b"))
    assert c.kind == PairKind.DISJOINT and c.lgh == c.lghi == 4


@settings(max_examples=100)
@given(st.sampled_from([ROSE, BARBELL, PHI2]), nontrivial(AB, 5), nontrivial(AB, 5))
def test_classification_symmetric(l, g, h):
    assume(g != h)
    a, b = classify_pair(l, g, h), classify_pair(l, h, g)
    if PairKind.NEITHER not in (a.kind, b.kind):
        assert a.kind == b.kind


@settings(max_examples=200)
@given(nontrivial(ABCG, 5), nontrivial(ABCG, 5))
def test_elliptic_member_bound(g, h):
    """l(g) = 0 and (g, h) not disjoint force l(gh), l(gh^-1) <= l(h)."""
    assume(g != h)
    for l in (EA, EB):
        c = classify_pair(l, g, h)
        if c.lg == 0 and c.kind != PairKind.DISJOINT:
            assert max(c.lgh, c.lghi) <= c.lh


def test_overlap_with_elliptic_member():
    # a fixes a vertex of A; ab and a a b have length 2 while a b' a' is elliptic
    c = classify_pair(EA, ABCG.parse("a"), ABCG.parse("a b"))
    assert c.lg == 0 and (c.lgh, c.lghi) == (2, 0)
    assert c.kind == PairKind.OVERLAP


@settings(max_examples=60)
@given(st.sampled_from([ROSE, BARBELL, PHI2]), nontrivial(AB, 5), nontrivial(AB, 5))
def test_projective_invariance_of_classification(l, g, h):
    assume(g != h)
    s = scaled_oracle(l, Fraction(3, 7))
    assert classify_pair(l, g, h).kind == classify_pair(s, g, h).kind


def test_overlap_orientation():
    o, n = overlap_orientation(ROSE, w("a b"), w("b"))
    assert o == Orientation.AGREE and n == 1
    o, _ = overlap_orientation(ROSE, w("a b"), w("b'"))
    assert o == Orientation.OPPOSE


def test_pair_chunks_order_and_coverage():
    S = ElementSet.ball(AB, 2)
    pairs = [(int(i), int(j)) for pi, pj in pair_chunks(S, chunk=7) for i, j in zip(pi, pj)]
    n = len(S)
    assert sorted(pairs) == [(i, j) for i in range(n) for j in range(n) if i != j]
    levels = [max(S.lens[i], S.lens[j]) for i, j in pairs]
    assert levels == sorted(levels)


# --- axioms -----------------------------------------------------------------------


def test_rose_axioms():
    rep = check_axioms(ROSE, ElementSet.ball(AB, 3))
    assert rep.ok
    assert rep.witness == (w("a a"), w("a b"))
    assert good_pair_values(ROSE, w("a a b"), w("a a b'")).holds()


def test_zero_oracle_fails_only_vi():
    rep = check_axioms(zero_oracle(AB), ElementSet.ball(AB, 2))
    assert rep.failed() == ["VI"]


def test_sum_of_incompatible_fails_v():
    rep = check_axioms(sum_oracle(ROSE, PHI2), ElementSet.ball(AB, 3))
    assert not rep.verdicts["V"]


def test_mismatched_alphabets():
    with pytest.raises(AlphabetMismatch):
        sum_oracle(ROSE, EA)


# --- compatibility ----------------------------------------------------------------


def test_rose_vs_phi2_incompatible():
    res = compatible_on(ROSE, PHI2, ElementSet.ball(AB, 5))
    assert res.verdict == Verdict.INCOMPATIBLE_COMBINATORICS
    assert res.combinatorial == (w("a"), w("b a b'"))
    assert res.orientation == (w("b"), w("a b'"))
    assert recheck_witness(ROSE, PHI2, res)


def test_self_compatible():
    assert compatible_on(ROSE, ROSE, ElementSet.ball(AB, 3)).verdict == Verdict.COMPATIBLE_UP_TO_BOUND


def test_example10_compatible():
    res = compatible_on(EA, EB, ElementSet.ball(ABCG, 3))
    assert res.verdict == Verdict.COMPATIBLE_UP_TO_BOUND


def test_barbell_rose_collapse_compatible():
    assert compatible_on(BARBELL, ROSE, ElementSet.ball(AB, 4)).verdict == Verdict.COMPATIBLE_UP_TO_BOUND


# --- good pairs -------------------------------------------------------------------


def test_power_good_pair():
    assert power_good_pair(ROSE, w("a b"), w("b")) == (1, 2)
    with pytest.raises(GoodPairError):
        power_good_pair(ROSE, w("a"), w("b"))


def test_good_pair_from_independent():
    gp = good_pair_from_independent(ROSE, w("a a"), w("b"))
    assert (gp.g, gp.h) == (w("a a b"), w("a a b'"))
    assert gp.holds() and gp.assumptions
    gp = good_pair_from_independent(BARBELL, w("a b"), w("a"))
    assert gp.holds()
    assert 0 < gp.overlap < min(gp.lg, gp.lh)


def test_good_pair_precondition():
    with pytest.raises(GoodPairError):
        good_pair_from_independent(ROSE, w("a"), w("b"))


def test_simultaneous_good_pair():
    a, b = simultaneous_good_pair(EA, EB, 3)
    assert (a.g, a.h) == (ABCG.parse("a b"), ABCG.parse("a' b'"))
    assert (a.lg, a.lh, a.lgh, a.lghi) == (2, 2, 4, 2)
    assert (b.lg, b.lh, b.lgh, b.lghi) == (4, 4, 8, 4)
    assert simultaneous_good_pair(ROSE, PHI2, 0) is None


# --- based lengths ----------------------------------------------------------------


def test_dagger_examples():
    gp = good_pair_values(ROSE, w("a a b"), w("a a b'"))
    assert based_length_dagger(ROSE, gp, w("")) == 0


def test_dagger_rejects_bad_pair():
    with pytest.raises(GoodPairError):
        based_length_dagger(ROSE, good_pair_values(ROSE, w("a"), w("b")), w("a"))


def test_dagger_packed_matches_scalar():
    gp = good_pair_values(ROSE, w("a a b"), w("a a b'"))
    S = ElementSet.ball(AB, 3)
    nums, d = dagger_packed(ROSE, gp, S.arr, S.lens)
    assert [Fraction(int(n), d) for n in nums] == [based_length_dagger(ROSE, gp, S.word(i)) for i in range(len(S))]


@pytest.mark.parametrize("l", [ROSE, BARBELL, PHI2], ids=["rose", "barbell", "phi2"])
def test_dagger_dominates_translation_length(l):
    gp = simultaneous_good_pair(l, l, 3)[0]
    P = dagger_oracle(l, gp)
    ws = list(enumerate_words(AB, 4))
    for k, pk, lk in zip(ws, P.many(ws), l.many(ws)):
        assert pk >= lk
        assert (pk - lk) / 2 >= 0


def test_sum_identity_same_function():
    gp = simultaneous_good_pair(ROSE, ROSE, 3)[0]
    assert based_sum_identity(ROSE, ROSE, gp, ElementSet.ball(AB, 3)).ok


def test_sum_identity_incompatible_negative_control():
    S = ElementSet.ball(AB, 4)
    found = simultaneous_good_pair(ROSE, PHI2, 4)
    assert found is not None
    rep = based_sum_identity(ROSE, PHI2, found[0], S)
    assert not rep.ok
