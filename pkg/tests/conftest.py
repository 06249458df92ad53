import os

import pytest

from jeesdp import load_corpus

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)


@pytest.fixture(scope="session")
def fig1_sentence():
    sentences, _ = load_corpus(fixture_path("fig1.jsonl"))
    return sentences[0]


@pytest.fixture(scope="session")
def overfit_corpus():
    return load_corpus(fixture_path("overfit.jsonl"))


@pytest.fixture(scope="session")
def wordvec_path():
    return fixture_path("wordvec50.txt")
