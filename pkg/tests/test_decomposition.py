import json

import numpy as np
import pytest

from parkview.decomposition import (
    PathDecomposition,
    brute_force_optimum,
    decomposition_cost,
    decomposition_table,
    dump_debug,
    enumerate_all_decompositions,
    heavy_decomposition,
    path_branch_decomposition,
)
from parkview.interleaving import edge_weights, identity_map, map_from_leaf_targets
from parkview.mergetree import tree_from_nested
from parkview.synthetic import random_shift_map, random_tree, tree_from_shape

from conftest import random_interleaving


def test_enumeration_counts(two_leaf):
    assert len(list(enumerate_all_decompositions(two_leaf))) == 2
    full = tree_from_shape(((((), ()), ((), ()))), np.random.default_rng(0))
    assert len(list(enumerate_all_decompositions(full))) == 8
    cat = tree_from_shape((((((), ()), ()), ()), (), ()), np.random.default_rng(0))
    assert sorted(len(cat.children[v]) for v in range(len(cat)) if cat.children[v]) == [2, 2, 2, 3]
    assert len(list(enumerate_all_decompositions(cat))) == 24


def test_enumeration_guard():
    t = random_tree(30, np.random.default_rng(1))
    with pytest.raises(ValueError):
        list(enumerate_all_decompositions(t))


def test_every_decomposition_distinct_and_covering():
    t = random_tree(6, np.random.default_rng(2))
    seen = set()
    for d in enumerate_all_decompositions(t):
        assert len(d) == t.n_leaves
        assert sorted(v for k in range(len(d)) for v in d.path_vertices(k)) == list(range(len(t)))
        seen.add(tuple(sorted(d.through.items())))
    assert len(seen) == len(list(enumerate_all_decompositions(t)))


def test_identity_costs():
    t = random_tree(6, np.random.default_rng(3))
    m = identity_map(t)
    assert edge_weights(m) == [1] * len(t)
    for d in enumerate_all_decompositions(t):
        assert decomposition_cost(m, d) == (t.n_leaves, 1)


def test_heavier_edge_wins():
    t = tree_from_nested(("r", 5.0, [("a", 0.0, []), ("b", 0.0, []), ("e", 0.0, [])]))
    u = tree_from_nested(("s", 3.0, [("c", 0.0, []), ("d", 0.0, [])]))
    m = map_from_leaf_targets(t, u, 1.0, {"a": "c", "b": "d", "e": "d"})
    pd, branches, debug = heavy_decomposition(m)
    assert debug["s"] == {"through": "d", "weights": {"c": 1, "d": 2}}
    assert [b.size for b in branches] == [1, 1]


def test_tie_goes_to_lower_active_start():
    t = tree_from_nested(("r", 5.0, [("a", 1.0, []), ("b", 0.0, [])]))
    u = tree_from_nested(("s", 3.0, [("c", 0.0, []), ("d", 0.0, [])]))
    m = map_from_leaf_targets(t, u, 1.0, {"a": "c", "b": "d"})
    pd, _, debug = heavy_decomposition(m)
    assert debug["s"]["through"] == "d"
    # equal starts fall back to the leftmost child
    t2 = tree_from_nested(("r", 5.0, [("a", 0.0, []), ("b", 0.0, [])]))
    m2 = map_from_leaf_targets(t2, u, 1.0, {"a": "c", "b": "d"})
    assert heavy_decomposition(m2)[2]["s"]["through"] == "c"


def test_empty_paths_cost_nothing():
    t = tree_from_nested(("r", 5.0, [("a", 0.0, []), ("b", 0.0, [])]))
    u = tree_from_nested(("s", 3.0, [("c", 0.0, []), ("d", 0.0, [])]))
    m = map_from_leaf_targets(t, u, 1.0, {"a": "c", "b": "c"})
    d = PathDecomposition(u, {u.index["s"]: u.index["c"]})
    assert decomposition_cost(m, d) == (1, 1)
    d2 = PathDecomposition(u, {u.index["s"]: u.index["d"]})
    assert decomposition_cost(m, d2) == (3, 2)


def test_heavy_property_and_path_count():
    rng = np.random.default_rng(6)
    for _ in range(30):
        il = random_interleaving(rng, 25)
        pbd = path_branch_decomposition(il)
        for m, pd in ((il.alpha, pbd.alpha_paths), (il.beta, pbd.beta_paths)):
            w = edge_weights(m)
            assert len(pd) == m.target.n_leaves
            for v, c in pd.through.items():
                assert w[c] == max(w[k] for k in m.target.children[v])


def test_random_8_leaf_optimal():
    rng = np.random.default_rng(10)
    for _ in range(20):
        s = random_tree(int(rng.integers(1, 9)), rng)
        t = random_tree(8, rng)
        m = random_shift_map(s, t, rng)
        pd, branches, _ = heavy_decomposition(m)
        heavy = decomposition_cost(m, pd)
        costs = [decomposition_cost(m, d) for d in enumerate_all_decompositions(t)]
        assert heavy == (min(c[0] for c in costs), min(c[1] for c in costs))
        assert brute_force_optimum(m) == heavy


def test_table_matches_enumeration():
    t = random_tree(6, np.random.default_rng(4))
    table = decomposition_table(t)
    assert table.decomp.shape[0] == len(list(enumerate_all_decompositions(t)))
    assert (table.decomp.sum(axis=1) == t.n_leaves).all()


def test_debug_dump_deterministic():
    rng = np.random.default_rng(12)
    il = random_interleaving(rng, 12)
    a = dump_debug(heavy_decomposition(il.alpha)[2])
    b = dump_debug(heavy_decomposition(il.alpha)[2])
    assert a == b
    doc = json.loads(a)
    for rec in doc.values():
        assert rec["through"] in rec["weights"]
