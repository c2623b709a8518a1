import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from helpers import DATA_DIR, build_corpus, canonical_coo  # noqa: E402


@pytest.fixture(scope="session")
def corpus():
    return build_corpus(DATA_DIR)


@pytest.fixture()
def canonical():
    return canonical_coo()
