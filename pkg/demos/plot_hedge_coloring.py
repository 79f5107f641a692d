"""
Hedge contacts and their 3-coloring
===================================

Random tree pairs: how many hedges touch, how many colors the greedy pass
needs, and how often the swap step is used to get by with three.
"""

import collections

import numpy as np

from parkview import build_scene
from parkview.pipeline import interleaving_from_trees
from parkview.synthetic import random_tree

rng = np.random.default_rng(0)
degree = collections.Counter()
used = collections.Counter()
for k in range(200):
    ta = random_tree(int(rng.integers(2, 60)), rng, integer=False)
    tb = random_tree(int(rng.integers(2, 60)), rng, integer=False)
    il, _ = interleaving_from_trees(ta, tb)
    s = build_scene(il)
    for lay in (s.left, s.right):
        used[lay.colors_used()] += 1
        for nb in lay.adjacency.neighbours:
            degree[len(nb)] += 1

print("colors used per tree:", dict(sorted(used.items())))
print("hedge degree histogram:", dict(sorted(degree.items())))
print("max degree", max(degree), "but never more than 3 colors")
