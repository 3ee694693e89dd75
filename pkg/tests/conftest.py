from __future__ import annotations

from pathlib import Path

import pytest
from hypothesis import strategies as st

from gtrees.gog import GraphOfGroupsSpec
from gtrees.mgraph import MarkedMetricGraph
from gtrees.words import Alphabet, Word

FIXTURES = Path(__file__).resolve().parents[1] / "src" / "gtrees" / "fixtures"
AB = Alphabet(("a", "b"))
ABCG = Alphabet(("a", "b", "c", "g"))


def mmg(name: str) -> MarkedMetricGraph:
    return MarkedMetricGraph.load(FIXTURES / f"{name}.json")


def gog(name: str) -> GraphOfGroupsSpec:
    return GraphOfGroupsSpec.load(FIXTURES / f"{name}.json")


def words(alphabet: Alphabet, max_size: int = 8):
    r = alphabet.rank
    letters = st.sampled_from([x for i in range(1, r + 1) for x in (i, -i)])
    return st.lists(letters, max_size=max_size).map(lambda xs: alphabet.word(xs))


def nontrivial(alphabet: Alphabet, max_size: int = 8):
    return words(alphabet, max_size).filter(bool)


@pytest.fixture(scope="session")
def rose():
    return mmg("rose2")


@pytest.fixture(scope="session")
def barbell():
    return mmg("barbell")


@pytest.fixture(scope="session")
def phi2():
    return mmg("rose2_phi2")


@pytest.fixture(scope="session")
def ex10():
    return gog("example10_A"), gog("example10_B"), gog("example10_T")


def w(text: str, alphabet: Alphabet = AB) -> Word:
    return alphabet.parse(text)


# one line per acceptance criterion, printed after the run
CRITERIA: dict[int, tuple[str, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            status, title = CRITERIA[n]
            terminalreporter.write_line(f"criterion {n}: {status}  {title}")
