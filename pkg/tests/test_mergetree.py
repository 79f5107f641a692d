import itertools
import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from parkview.mergetree import (
    OrderedMergeTree,
    TreeFormatError,
    TreePoint,
    TreeValidationError,
    ancestor_at_height,
    compare_at_height,
    is_ancestor,
    lca,
    order_at_height,
    read_tree,
    tree_from_nested,
    validate_tree,
    write_tree,
)
from parkview.synthetic import random_tree


def test_two_leaf_is_valid(two_leaf):
    assert validate_tree(two_leaf) == []
    assert two_leaf.leaf_ids() == ["a", "b"]


def test_strictness_violation_names_edge():
    t = tree_from_nested(("r", 0.5, [("a", 0.0, []), ("b", 1.0, [])]))
    bad = validate_tree(t)
    assert [v.rule for v in bad] == ["strictness"]
    assert bad[0].subject == "edge b–r"


def test_order_violation_names_triple():
    # explicit leaf order a, c, b where c is outside lca(a, b)
    t = OrderedMergeTree(
        {"a": 0.0, "b": 0.0, "c": 0.0, "u": 1.0, "r": 2.0},
        {"a": [], "b": [], "c": [], "u": ["a", "b"], "r": ["u", "c"]},
        "r", leaf_order=["a", "c", "b"])
    bad = [v for v in validate_tree(t) if v.rule == "order"]
    assert bad and "a" in bad[0].subject and "c" in bad[0].subject and "b" in bad[0].subject


def _triple_violations(t):
    leaves = t.leaves
    out = []
    for i, j, k in itertools.combinations(range(len(leaves)), 3):
        x1, x2, x3 = leaves[i], leaves[j], leaves[k]
        if not t.is_descendant(x2, t.lca_vertex(x1, x3)):
            out.append((x1, x2, x3))
    return out


def test_order_check_matches_triple_oracle():
    rng = np.random.default_rng(3)
    for _ in range(60):
        t = random_tree(5, rng)
        perm = list(rng.permutation(t.leaf_ids()))
        shuffled = OrderedMergeTree(
            {i: t.height[t.index[i]] for i in t.ids},
            {i: [t.ids[c] for c in t.children[t.index[i]]] for i in t.ids},
            t.ids[t.root], leaf_order=perm)
        has_order = any(v.rule == "order" for v in validate_tree(shuffled))
        assert has_order == bool(_triple_violations(shuffled))


def test_degree_two_rejected():
    t = tree_from_nested(("r", 2.0, [("u", 1.0, [("a", 0.0, [])]), ("b", 0.0, [])]))
    assert any(v.rule == "degree" for v in validate_tree(t))


def test_ancestor_at_height(two_leaf):
    a = TreePoint("a", 0.0)
    assert ancestor_at_height(two_leaf, a, 0.0) == a
    assert ancestor_at_height(two_leaf, a, 2.0) == TreePoint("a", 2.0)
    assert ancestor_at_height(two_leaf, a, 5.0) == TreePoint("r", 5.0)
    with pytest.raises(ValueError):
        ancestor_at_height(two_leaf, TreePoint("a", 2.0), 1.0)


def test_lca_examples(two_leaf):
    a, b = TreePoint("a", 0.0), TreePoint("b", 1.0)
    assert lca(two_leaf, a, a) == a
    assert lca(two_leaf, a, b) == TreePoint("r", 3.0)


def _root_path(t, v):
    out = []
    while v >= 0:
        out.append(v)
        v = t.parent[v]
    return out


def test_lca_matches_root_path_intersection():
    rng = np.random.default_rng(7)
    for _ in range(50):
        t = random_tree(20, rng)
        a, b = rng.choice(t.leaves, size=2)
        pa = _root_path(t, int(a))
        common = set(_root_path(t, int(b)))
        want = next(v for v in pa if v in common)
        got = lca(t, t.point(int(a)), t.point(int(b)))
        assert got == TreePoint(t.ids[want], t.height[want])


def test_order_at_height(two_leaf):
    assert order_at_height(two_leaf, 2.0) == [TreePoint("a", 2.0), TreePoint("b", 2.0)]
    assert order_at_height(two_leaf, 4.0) == [TreePoint("r", 4.0)]


def test_order_matches_leftmost_leaf_sort():
    rng = np.random.default_rng(11)
    for _ in range(40):
        t = random_tree(15, rng)
        h = float(rng.uniform(0, t.height[t.root] + 1))
        pts = order_at_height(t, h)
        cut = [v for v in range(len(t)) if t.height[v] <= h < t.top[v]]
        want = sorted(cut, key=lambda v: t.leaf_rank[t.leftmost_leaf(v)])
        assert [t.index[p.edge] for p in pts] == want


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 12), st.integers(0, 10**6), st.floats(0, 20), st.floats(0, 5), st.floats(0, 5))
def test_order_consistent_upwards(n, seed, h, dh, dh2):
    t = random_tree(n, np.random.default_rng(seed))
    pts = order_at_height(t, h)
    up = [ancestor_at_height(t, p, h + dh) for p in pts]
    ranks = [t.lo_rank[t.point_index(p)] for p in up]
    assert ranks == sorted(ranks)
    for p in pts:
        # ancestor composition
        once = ancestor_at_height(t, ancestor_at_height(t, p, h + dh), h + dh + dh2)
        assert once == ancestor_at_height(t, p, h + dh + dh2)
        assert is_ancestor(t, once, p)
    for p, q in zip(pts, pts[1:]):
        assert compare_at_height(t, p, q) == -1


def test_round_trip(two_leaf):
    data = write_tree(two_leaf)
    assert write_tree(read_tree(data)) == data
    raw = json.loads(data)
    assert raw["nodes"]["r"]["children"] == ["a", "b"]


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 15), st.integers(0, 10**6), st.booleans())
def test_round_trip_random(n, seed, integer):
    t = random_tree(n, np.random.default_rng(seed), integer=integer)
    data = write_tree(t)
    back = read_tree(data)
    assert back.leaf_ids() == t.leaf_ids()
    assert write_tree(back) == data


def test_read_errors():
    with pytest.raises(TreeFormatError):
        read_tree(b'{"nodes": {"a": {"height": 0, "children": []}}}')
    with pytest.raises(TreeFormatError):
        read_tree(b"not json")
    bad = b'{"root": "r", "nodes": {"r": {"height": 0.5, "children": ["a", "b"]},' \
          b' "a": {"height": 0, "children": []}, "b": {"height": 1, "children": []}}}'
    with pytest.raises(TreeValidationError) as exc:
        read_tree(bad)
    assert exc.value.violations[0].rule == "strictness"
