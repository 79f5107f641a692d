"""
A small interleaving, step by step
==================================

Two hand-made merge trees, the interleaving read off their tours, the heavy
path decomposition of each side and the final drawing.
"""

import json

from parkview import build_scene, render_svg
from parkview.decomposition import dump_debug, path_branch_decomposition
from parkview.mergetree import tree_from_nested
from parkview.pipeline import euler_tour, interleaving_from_trees

# the left tree has three minima, the right one two
left = tree_from_nested(("r", 6.0, [("s", 3.0, [("a", 0.0, []), ("b", 1.0, [])]), ("c", 2.0, [])]))
right = tree_from_nested(("u", 5.0, [("x", 0.5, []), ("y", 1.5, [])]))

print("left tour ", euler_tour(left, 6.0))
print("right tour", euler_tour(right, 6.0))

il, d = interleaving_from_trees(left, right)
print("Frechet distance of the tours:", d, " interleaving height:", il.delta)
for lid, p in sorted(il.alpha.leaf_images.items()):
    print(f"  alpha: leaf {lid} -> edge {p.edge} at {p.height:g}")

# heavy decomposition of the right tree with respect to alpha
pbd = path_branch_decomposition(il)
print(dump_debug(pbd.alpha_debug).decode())
for path, b in zip(pbd.alpha_paths.paths, pbd.alpha_branches):
    print(f"  path {'-'.join(path.vertices)}: {b.kind} branch, {b.size} component(s)")

scene = build_scene(il, pbd)
print(json.dumps({"hedges": [h.to_dict() for h in scene.left.hedges]}, indent=1)[:600])

with open("small_interleaving.svg", "wb") as fh:
    fh.write(render_svg(scene))
print("wrote small_interleaving.svg")
