"""
Comparing two scalar fields
===========================

Two smooth random fields, their merge trees after persistence
simplification, and a drawing of the interleaving between them.
"""

import numpy as np

from parkview import LayoutConfig, build_scene, compare_fields, render_svg
from parkview.pipeline import ScalarField2D, local_minima_count

rng = np.random.default_rng(3)
x, y = np.meshgrid(np.linspace(0, 4 * np.pi, 48), np.linspace(0, 4 * np.pi, 48))
base = np.sin(x) * np.cos(0.7 * y) + 0.3 * np.sin(2.1 * x + y)
fa = ScalarField2D.from_array(base + 0.15 * rng.normal(size=base.shape))
fb = ScalarField2D.from_array(np.roll(base, 3, axis=1) + 0.15 * rng.normal(size=base.shape))
print("minima:", local_minima_count(fa), local_minima_count(fb))

# simplification threshold in units of the field values
for thr in (0.0, 0.2, 0.5):
    cmp = compare_fields(fa, fb, persistence=thr)
    print(f"persistence {thr}: {cmp.tree_a.n_leaves} / {cmp.tree_b.n_leaves} leaves, delta {cmp.delta:.4f}")

cmp = compare_fields(fa, fb, persistence=0.2)
scene = build_scene(cmp.interleaving, config=LayoutConfig(grid_fraction=4))
print("hedges", len(scene.left.hedges), len(scene.right.hedges),
      "colors", scene.left.colors_used(), scene.right.colors_used())

with open("field_comparison.svg", "wb") as fh:
    fh.write(render_svg(scene))
print("wrote field_comparison.svg")
