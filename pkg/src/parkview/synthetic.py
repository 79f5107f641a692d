"""Random and exhaustive merge trees and shift maps for tests and demos."""
from __future__ import annotations

import functools
import itertools
import math

import numpy as np

from .interleaving import ShiftMap, TreePoint
from .mergetree import OrderedMergeTree


@functools.lru_cache(maxsize=None)
def _shapes(n: int) -> tuple:
    """All ordered tree shapes with n leaves; a shape is () or a tuple of shapes."""
    if n == 1:
        return ((),)
    out = []
    for k in range(2, n + 1):
        for parts in _compositions(n, k):
            for kids in itertools.product(*(_shapes(p) for p in parts)):
                out.append(tuple(kids))
    return tuple(out)


def _compositions(n, k):
    if k == 1:
        yield (n,)
        return
    for first in range(1, n - k + 2):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


def all_tree_shapes(max_leaves: int, min_leaves: int = 1):
    """Every ordered shape (internal degree >= 2) with a leaf count in range."""
    for n in range(min_leaves, max_leaves + 1):
        yield from _shapes(n)


def shape_leaves(shape) -> int:
    return 1 if not shape else sum(shape_leaves(c) for c in shape)


def tree_from_shape(shape, rng, max_step: int = 3, integer: bool = True) -> OrderedMergeTree:
    """Give a shape random heights; parents sit strictly above their children."""
    heights, children = {}, {}
    counter = itertools.count()

    def walk(node):
        vid = f"v{next(counter)}"
        kids = [walk(c) for c in node]
        children[vid] = kids
        if not kids:
            h = rng.integers(0, 2 * max_step + 1) if integer else rng.uniform(0, 2 * max_step)
        else:
            step = rng.integers(1, max_step + 1) if integer else rng.uniform(0.1, max_step)
            h = max(heights[k] for k in kids) + step
        heights[vid] = float(h)
        return vid

    root = walk(shape)
    return OrderedMergeTree(heights, children, root)


def random_shape(n_leaves: int, rng, p_three: float = 0.2):
    if n_leaves == 1:
        return ()
    k = 3 if n_leaves >= 3 and rng.random() < p_three else 2
    cuts = np.sort(rng.choice(np.arange(1, n_leaves), size=k - 1, replace=False))
    sizes = np.diff(np.concatenate([[0], cuts, [n_leaves]]))
    return tuple(random_shape(int(s), rng, p_three) for s in sizes)


def random_tree(n_leaves: int, rng, integer: bool = True, max_step: int = 3) -> OrderedMergeTree:
    return tree_from_shape(random_shape(n_leaves, rng), rng, max_step=max_step, integer=integer)


def random_shift_map(source: OrderedMergeTree, target: OrderedMergeTree, rng, slack=None) -> ShiftMap:
    """A valid monotone shift map with the smallest delta for random leaf picks.

    Source leaves go, in order, above a nondecreasing sequence of target
    leaves.  delta is the least value that makes this well defined, plus
    ``slack`` (random small integer by default).
    """
    s, t = source, target
    # one draw covers both the leaf picks and the slack
    draws = rng.integers(0, 3 * t.n_leaves, size=s.n_leaves + 1).tolist()
    picks = sorted(x // 3 for x in draws[:-1])
    tleaf = [t.leaves[k] for k in picks]
    pick_of = {v: tleaf[r] for r, v in enumerate(s.leaves)}
    need = 0.0
    th, sh = t.height, s.height
    for v in s.leaves:
        need = max(need, th[pick_of[v]] - sh[v])
    for v in range(len(s)):
        if s.children[v]:
            a = tleaf[s.lo_rank[v]]
            b = tleaf[s.hi_rank[v]]
            if a != b:
                need = max(need, th[t.lca_vertex(a, b)] - sh[v])
    if slack is None:
        slack = float(draws[-1] % 3)
    delta = need + slack
    # need was found by subtraction; adding it back can land an ulp short
    lows = [(v, th[pick_of[v]]) for v in s.leaves]
    for v in range(len(s)):
        if s.children[v]:
            a, b = tleaf[s.lo_rank[v]], tleaf[s.hi_rank[v]]
            if a != b:
                lows.append((v, th[t.lca_vertex(a, b)]))
    while any(sh[v] + delta < h for v, h in lows):
        delta = math.nextafter(delta, math.inf)
    images = {}
    for v in s.leaves:
        h = s.height[v] + delta
        images[s.ids[v]] = TreePoint(t.ids[t.up(pick_of[v], h)], h)
    return ShiftMap(s, t, delta, images)
