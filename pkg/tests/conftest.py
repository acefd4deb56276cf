from __future__ import annotations

from pathlib import Path

import numpy as np
import pytest

from superhedge.corpus import seed_from_env
from superhedge.market import binomial_tree, tree_from_children

ROOT = Path(__file__).resolve().parents[1]
CORPUS = ROOT / "corpus"


@pytest.fixture
def rng():
    return np.random.default_rng(seed_from_env())


@pytest.fixture
def call_tree():
    """S_0 = 100 with children 80 and 120."""
    return tree_from_children([100.0], [[80.0], [120.0]])


@pytest.fixture
def binomial2():
    return binomial_tree(100.0, [(0.9, 1.1), (0.9, 1.1)])


@pytest.fixture
def corpus_dir():
    return CORPUS
