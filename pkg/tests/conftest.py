import numpy as np
import pytest

from parkview.mergetree import tree_from_nested
from parkview.pipeline import interleaving_from_trees
from parkview.synthetic import random_tree


@pytest.fixture
def two_leaf():
    # a(0), b(1) under r(3)
    return tree_from_nested(("r", 3.0, [("a", 0.0, []), ("b", 1.0, [])]))


@pytest.fixture
def one_leaf():
    return tree_from_nested(("c", 0.0, []))


def random_interleaving(rng, max_leaves=20, integer=None):
    """Tour-matching interleaving between two random trees."""
    if integer is None:
        integer = bool(rng.integers(2))
    na, nb = rng.integers(1, max_leaves + 1, size=2)
    ta = random_tree(int(na), rng, integer=integer)
    tb = random_tree(int(nb), rng, integer=integer)
    il, _ = interleaving_from_trees(ta, tb)
    return il


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
