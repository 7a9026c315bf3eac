from __future__ import annotations

import pytest

from ricgate import corpus as corpus_mod
from ricgate.policy import load_policy_file
from ricgate.submission import load_package


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory):
    path = tmp_path_factory.mktemp("corpus")
    corpus_mod.generate_corpus(path, seed=1)
    return path


@pytest.fixture(scope="session")
def scenarios(corpus_dir):
    return {s.name: s for s in corpus_mod.load_corpus(corpus_dir)}


@pytest.fixture(scope="session")
def bundled_policy(corpus_dir):
    return load_policy_file(corpus_dir / corpus_mod.POLICY_NAME)


@pytest.fixture(scope="session")
def corpus_keys():
    return corpus_mod.derive_corpus_keys(1)


@pytest.fixture(scope="session")
def clean_package(corpus_dir):
    return load_package(corpus_dir / "clean")
