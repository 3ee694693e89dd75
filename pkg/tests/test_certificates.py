from __future__ import annotations

import copy
import json

import pytest

from conftest import FIXTURES, mmg
from gtrees.certificates import (
    canonical,
    embed_tree,
    load_tree,
    read_certificate,
    tree_digest,
    verify_certificate,
    write_certificate,
)
from gtrees.words import InputError

CERTS = sorted((FIXTURES / "certificates").glob("*.json"))


@pytest.fixture
def incompat():
    return read_certificate(FIXTURES / "certificates" / "rose2_vs_phi2_incompatibility.json")


@pytest.mark.parametrize("path", CERTS, ids=lambda p: p.stem)
def test_stored_certificates_verify(path):
    rep = verify_certificate(read_certificate(path))
    assert rep.ok, rep.problems
    assert rep.checked


def test_given_trees_match(incompat):
    rep = verify_certificate(incompat, {"A": mmg("rose2"), "B": mmg("rose2_phi2")})
    assert rep.ok


def test_given_tree_mismatch(incompat):
    rep = verify_certificate(incompat, {"A": mmg("barbell")})
    assert any("sha256 mismatch" in p for p in rep.problems)
    assert not rep.ok


def test_embedded_digest_tamper(incompat):
    incompat["trees"]["A"]["document"]["edges"][0]["length"] = "2/1"
    with pytest.raises(InputError, match="sha256"):
        verify_certificate(incompat)


def test_tampered_value_names_inequality(incompat):
    bad = copy.deepcopy(incompat)
    bad["pairs"][0]["values"]["A"]["lghi"] = "3/1"
    rep = verify_certificate(bad)
    assert not rep.ok
    assert any("violated l(gh) = l(gh^-1): 4/1 != 3/1" in p for p in rep.problems)
    assert any("stated l(gh^-1) = 3/1 but recomputed 4/1" in p for p in rep.problems)


def test_tampered_orientation(incompat):
    bad = copy.deepcopy(incompat)
    bad["pairs"][1]["claim"] = {"A": ">", "B": ">"}
    rep = verify_certificate(bad)
    assert any("violated l(gh) > l(gh^-1): 1/1 <= 3/1" in p for p in rep.problems)
    assert any("opposite strict orders" in p for p in rep.problems)


def test_tampered_rectangle(incompat):
    bad = copy.deepcopy(incompat)
    bad["rectangle"]["witnesses"]["a,b"] = "a'"
    rep = verify_certificate(bad)
    assert any(p.startswith("rectangle") for p in rep.problems)


def test_tampered_good_pair():
    doc = read_certificate(FIXTURES / "certificates" / "rose2_good_pair.json")
    entry = doc["good_pairs"][0]
    entry["values"]["lghi"] = entry["values"]["lgh"] = "9/1"
    rep = verify_certificate(doc)
    assert any("violated 0 < l(g) + l(h) - l(gh^-1)" in p for p in rep.problems)
    assert any("but recomputed" in p for p in rep.problems)


def test_empty_certificate_is_not_ok():
    doc = {"certificate": "good_pair", "version": 1, "trees": {"A": embed_tree(mmg("rose2"))}}
    assert not verify_certificate(doc).ok


def test_bad_version_and_malformed(incompat):
    with pytest.raises(InputError, match="version"):
        verify_certificate({**incompat, "version": 7})
    del incompat["pairs"][0]["g"]
    with pytest.raises(InputError, match="malformed"):
        verify_certificate(incompat)


def test_write_read_roundtrip(tmp_path, incompat):
    p = tmp_path / "c.json"
    write_certificate(incompat, p)
    assert read_certificate(p) == incompat


def test_read_errors(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text('{"a":\n  1,,}')
    with pytest.raises(InputError, match="line 2"):
        read_certificate(p)
    with pytest.raises(InputError, match="no such file"):
        read_certificate(tmp_path / "missing.json")


@pytest.mark.parametrize("name", ["rose2", "barbell", "rose2_phi2", "example10_A", "example10_T"])
def test_digest_stable(name):
    t = load_tree(FIXTURES / f"{name}.json")
    assert tree_digest(t) == tree_digest(load_tree(FIXTURES / f"{name}.json"))
    doc = json.loads(canonical(t.to_dict()))
    assert doc == t.to_dict()
