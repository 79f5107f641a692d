"""Acceptance criteria, one test each.  Every test prints a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v`` or
``python tests/test_acceptance.py``.
"""
import itertools
import math
import os
import subprocess
import sys
import time

import numpy as np
import pytest
from numba import njit

from parkview.decomposition import (
    PathDecomposition,
    brute_force_optimum,
    decomposition_table,
    heavy_decomposition,
    path_branch_decomposition,
)
from parkview.interleaving import branch_of_path, edge_weights, validate_interleaving, validate_shift_map
from parkview.layout import build_scene, check_hedge_properties, hedge_adjacency
from parkview.mergetree import tree_from_nested
from parkview.pipeline import ScalarField2D, compare_fields, frechet_delta, interleaving_from_trees
from parkview.render import render_svg
from parkview.synthetic import all_tree_shapes, random_shift_map, random_tree, tree_from_shape

sys.path.insert(0, os.path.dirname(__file__))
from conftest import random_interleaving  # noqa: E402

TOL_AREA = 1e-9


@pytest.fixture
def report(capsys):
    def emit(n, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {n}: {detail}")
    return emit


# -- shared instances ------------------------------------------------------------------


@pytest.fixture(scope="module")
def scenes():
    """1000 random valid instances with up to 200 leaves per tree."""
    rng = np.random.default_rng(2024)
    out = []
    for k in range(1000):
        # mostly small trees so that many scenes have few hedges, some up to 200 leaves
        cap = int(rng.choice([6, 12, 40, 200], p=[0.3, 0.3, 0.25, 0.15]))
        il = random_interleaving(rng, cap)
        out.append((il, build_scene(il)))
    return out


@pytest.fixture(scope="module")
def field_pairs():
    rng = np.random.default_rng(99)
    out = []
    for k in range(200):
        shape = (16, 16)
        if k % 3 == 0:
            fa, fb = rng.integers(0, 8, size=(2,) + shape).astype(float)  # plateaus
        elif k % 3 == 1:
            fa, fb = rng.normal(size=(2,) + shape)
        else:
            base = rng.normal(size=shape)
            fa, fb = base, base + 0.3 * rng.normal(size=shape)
        out.append(compare_fields(ScalarField2D.from_array(fa), ScalarField2D.from_array(fb)))
    return out


# -- 1 -----------------------------------------------------------------------------------


def test_heavy_decomposition_optimal(report):
    rng = np.random.default_rng(1)
    # random sources drawn from a fixed pool; building trees dominates the time otherwise
    pool = [random_tree(int(rng.integers(1, 9)), rng, integer=bool(k % 2)) for k in range(500)]
    t0 = time.perf_counter()
    shapes = maps = 0
    bad = []
    for shape in all_tree_shapes(8):
        t = tree_from_shape(shape, rng, integer=bool(shapes % 2))
        table = decomposition_table(t)
        shapes += 1
        for src in rng.integers(0, len(pool), size=50):
            m = random_shift_map(pool[src], t, rng)
            _, branches, _ = heavy_decomposition(m)
            sizes = [b.size for b in branches]
            heavy = (sum(sizes), max(sizes))
            best = brute_force_optimum(m, table)
            maps += 1
            if heavy != best:
                bad.append((shape, heavy, best))
    dt = time.perf_counter() - t0
    ok = not bad and dt < 60
    report(1, ok, f"{shapes} shapes x 50 maps = {maps}, {len(bad)} mismatches, {dt:.1f} s (limit 60 s)")
    assert not bad, bad[:3]
    assert dt < 60


# -- 2 -----------------------------------------------------------------------------------


def test_branch_size_equals_top_edge_weight(report):
    rng = np.random.default_rng(2)
    checked, bad = 0, []
    for k in range(500):
        s = random_tree(int(rng.integers(1, 51)), rng, integer=bool(rng.integers(2)))
        t = random_tree(int(rng.integers(1, 51)), rng, integer=bool(rng.integers(2)))
        m = random_shift_map(s, t, rng)
        w = edge_weights(m)
        heavy = heavy_decomposition(m)[0]
        # a random through choice as well, sizes match weights for any decomposition
        rand = PathDecomposition(t, {v: t.children[v][int(rng.integers(len(t.children[v])))]
                                     for v in range(len(t)) if t.children[v]})
        for d in (heavy, rand):
            for p in d.paths:
                size = branch_of_path(m, p).size
                checked += 1
                if size != w[t.index[p.top_edge]]:
                    bad.append((k, p, size))
    report(2, not bad, f"{checked} paths over 500 instances, {len(bad)} size/weight mismatches")
    assert not bad, bad[:3]


# -- 3 and 4 ------------------------------------------------------------------------------


def _contacts(hedges, tol=1e-9):
    """Pairwise contact graph straight from the bars."""
    edges = set()
    for (i, a), (j, b) in itertools.combinations(enumerate(hedges), 2):
        for p in a.bars:
            for q in b.bars:
                if p.column == q.column:
                    if abs(p.top - q.bottom) <= tol or abs(q.top - p.bottom) <= tol:
                        edges.add((i, j))
                elif abs(p.column - q.column) == 1 and min(p.top, q.top) - max(p.bottom, q.bottom) > tol:
                    edges.add((i, j))
    return edges


def _proper_3_colorings(n, edges):
    """All proper 3-colorings of a small graph, as an array of rows."""
    cols = np.array(list(itertools.product(range(3), repeat=n)), dtype=np.int8).reshape(-1, n)
    keep = np.ones(len(cols), dtype=bool)
    for i, j in edges:
        keep &= cols[:, i] != cols[:, j]
    return cols[keep]


def test_three_coloring(scenes, report):
    bad, small, sizes = [], 0, []
    for k, (il, s) in enumerate(scenes):
        for lay in (s.left, s.right):
            hs = lay.hedges
            sizes.append(len(hs))
            colors = [h.color for h in hs]
            edges = _contacts(hs)
            if any(c not in (0, 1, 2) for c in colors) or any(colors[i] == colors[j] for i, j in edges):
                bad.append((k, "improper"))
                continue
            if len(hs) <= 12:
                small += 1
                proper = _proper_3_colorings(len(hs), edges)
                if len(proper) == 0 or not (proper == np.array(colors, dtype=np.int8)).all(axis=1).any():
                    bad.append((k, "not among exhaustive colorings"))
    leaves = max(max(il.alpha.source.n_leaves, il.alpha.target.n_leaves) for il, _ in scenes)
    report(3, not bad, f"{len(scenes)} instances (up to {leaves} leaves, up to {max(sizes)} hedges per tree), "
                       f"{small} trees with <= 12 hedges checked exhaustively, {len(bad)} failures")
    assert not bad, bad[:3]


def _overlap_area(a, b, widths):
    area = 0.0
    for p in a.bars:
        for q in b.bars:
            if p.column == q.column:
                area += widths[p.column] * max(0.0, min(p.top, q.top) - max(p.bottom, q.bottom))
    return area


def test_hedge_properties(scenes, report):
    bad = []
    worst = 0.0
    for k, (il, s) in enumerate(scenes):
        for lay in (s.left, s.right):
            hs = lay.hedges
            adj = hedge_adjacency(hs, strict=False)
            v = check_hedge_properties(hs, adj)
            if v:
                bad.append((k, [str(x) for x in v]))
            widths = [c.width for c in lay.columns]
            # (i) histogram shape and disjoint interiors
            for h in hs:
                cols = [b.column for b in h.bars]
                if cols != list(range(cols[0], cols[-1] + 1)) or any(b.top != h.top for b in h.bars):
                    bad.append((k, f"hedge {h.path} is not a histogram"))
            for a, b in itertools.combinations(hs, 2):
                area = _overlap_area(a, b, widths)
                worst = max(worst, area)
                if area > TOL_AREA:
                    bad.append((k, f"hedges {a.path}/{b.path} overlap by {area}"))
            # (ii) at most one hedge touches a hedge's top
            for i, h in enumerate(hs):
                above = {j for j, g in enumerate(hs) if j != i for p in h.bars for q in g.bars
                         if p.column == q.column and abs(q.bottom - p.top) <= 1e-9}
                if len(above) > 1:
                    bad.append((k, f"hedge {h.path} has {len(above)} parents"))
                # (iii) nothing under a longest bar
                longest = max(b.top - b.bottom for b in h.bars)
                for p in h.bars:
                    if p.top - p.bottom < longest - 1e-9:
                        continue
                    for j, g in enumerate(hs):
                        if j != i and any(q.column == p.column and abs(q.top - p.bottom) <= 1e-9 for q in g.bars):
                            bad.append((k, f"hedge {g.path} under the longest bar of {h.path}"))
    report(4, not bad, f"{len(scenes)} instances, {len(bad)} violations, largest interior overlap {worst:g}")
    assert not bad, bad[:3]


# -- 5 -----------------------------------------------------------------------------------


def test_pipeline_interleavings_valid(field_pairs, report):
    bad = []
    for k, cmp in enumerate(field_pairs):
        il = cmp.interleaving
        v = (validate_shift_map(il.alpha, exhaustive=True) + validate_shift_map(il.beta, exhaustive=True)
             + validate_interleaving(il))
        if v:
            bad.append((k, [str(x) for x in v[:2]]))
        if il.delta < cmp.frechet:
            bad.append((k, "delta below the Frechet distance"))
    leaves = [c.tree_a.n_leaves for c in field_pairs] + [c.tree_b.n_leaves for c in field_pairs]
    report(5, not bad, f"200 field pairs (16x16, {min(leaves)}-{max(leaves)} leaves), {len(bad)} invalid")
    assert not bad, bad[:3]


# -- 6 -----------------------------------------------------------------------------------


def _offset_and_order(s):
    """Count offset and order failures of one scene, plus the worst literal gap in ulps."""
    bad, ulps = [], 0
    d = s.delta
    for lay, other in ((s.left, s.right), (s.right, s.left)):
        glyph = {g.path: g for g in other.glyphs}
        for h in lay.hedges:
            g = glyph[h.path]
            if h.top != g.hi - d:
                bad.append(f"hedge {h.path}: top {h.top!r} != {g.hi!r} - {d!r}")
            gap = (g.hi - h.top) - d
            if gap:
                ulps = max(ulps, round(abs(gap) / math.ulp(max(abs(d), abs(g.hi), abs(h.top)))))
        # hedges in the left-to-right order of their lowest source point against active path columns
        col = lay.decomposition.column_of
        anchor = []
        for h in lay.hedges:
            low = min((seg.bottom, col(seg.edge)) for comp in h.branch.components for seg in comp)
            anchor.append((low[1], h.path))
        paths = [glyph[p].column for _, p in sorted(anchor)]
        if paths != sorted(paths):
            bad.append(f"order {paths}")
    return bad, ulps


def test_delta_offset_and_order(scenes, field_pairs, report):
    bad, worst, n = [], 0, 0
    all_scenes = [s for _, s in scenes] + [build_scene(c.interleaving) for c in field_pairs]
    for k, s in enumerate(all_scenes):
        b, u = _offset_and_order(s)
        n += len(s.left.hedges) + len(s.right.hedges)
        worst = max(worst, u)
        bad += [(k, x) for x in b]
    report(6, not bad, f"{len(all_scenes)} scenes, {n} hedges: top == active top - delta bit for bit, "
                       f"{len(bad)} failures (literal top difference off delta by at most {worst} ulp)")
    assert not bad, bad[:3]


# -- 7 -----------------------------------------------------------------------------------


@njit(cache=True)
def _discrete_frechet(a, b):
    n, m = a.size, b.size
    prev = np.empty(m)
    cur = np.empty(m)
    prev[0] = abs(a[0] - b[0])
    for j in range(1, m):
        prev[j] = max(prev[j - 1], abs(a[0] - b[j]))
    for i in range(1, n):
        cur[0] = max(prev[0], abs(a[i] - b[0]))
        for j in range(1, m):
            best = min(prev[j], prev[j - 1], cur[j - 1])
            cur[j] = max(best, abs(a[i] - b[j]))
        prev, cur = cur, prev
    return prev[m - 1]


def _refine(c, samples):
    """Dense samples along a polyline, spread by segment length, keeping every vertex."""
    c = np.asarray(c, dtype=float)
    seg = np.abs(np.diff(c))
    total = seg.sum()
    parts = []
    for k in range(len(c) - 1):
        cnt = max(1, int(math.ceil(samples * seg[k] / total))) if total > 0 else 1
        parts.append(c[k] + (c[k + 1] - c[k]) * np.arange(cnt) / cnt)
    parts.append(c[-1:])
    pts = np.concatenate(parts)
    return pts, float(np.max(np.abs(np.diff(pts)))) if len(pts) > 1 else 0.0


FRECHET_SAMPLES = 10_000


def test_frechet_sandwich(report):
    rng = np.random.default_rng(7)
    bad, gaps = [], []
    for k in range(200):
        n1, n2 = rng.integers(2, 7, size=2)
        if k % 2:
            c1, c2 = rng.uniform(-5, 5, size=n1), rng.uniform(-5, 5, size=n2)
        else:
            c1, c2 = rng.integers(-5, 6, size=n1).astype(float), rng.integers(-5, 6, size=n2).astype(float)
        d = frechet_delta(c1, c2)
        a, ha = _refine(c1, FRECHET_SAMPLES)
        b, hb = _refine(c2, FRECHET_SAMPLES)
        upper = _discrete_frechet(a, b)
        # a dense discrete matching is at most one sample step worse than the continuous one
        lower = upper - max(ha, hb)
        gaps.append(upper - d)
        if not (lower - 1e-6 <= d <= upper + 1e-6):
            bad.append((k, d, lower, upper))
        if frechet_delta(c1, c1) != 0 or frechet_delta(c2, c2) != 0:
            bad.append((k, "nonzero self distance"))
    report(7, not bad, f"200 curve pairs, {FRECHET_SAMPLES} samples per curve: all inside the sandwich within 1e-6, "
                       f"{len(bad)} failures, median upper-minus-exact {np.median(gaps):.2e}, self distance 0")
    assert not bad, bad[:3]


# -- 8 -----------------------------------------------------------------------------------


def _big_fields(seed=8, size=80):
    rng = np.random.default_rng(seed)
    return [ScalarField2D.from_array(rng.normal(size=(size, size))) for _ in range(2)]


def test_performance(report):
    # warm the compiled kernels on a small pair first
    small = _big_fields(0, 8)
    render_svg(build_scene(compare_fields(*small).interleaving))
    fa, fb = _big_fields()
    t0 = time.perf_counter()
    cmp = compare_fields(fa, fb)
    il = cmp.interleaving
    assert validate_interleaving(il) == []
    svg = render_svg(build_scene(il, path_branch_decomposition(il)))
    dt = time.perf_counter() - t0
    la, lb = cmp.tree_a.n_leaves, cmp.tree_b.n_leaves
    ok = min(la, lb) >= 900 and dt < 10
    report(8, ok, f"{la} and {lb} leaves, compare + validate + render in {dt:.2f} s (limit 10 s), "
                  f"{len(svg) // 1024} KiB of SVG")
    assert min(la, lb) >= 900
    assert dt < 10


# -- 9 -----------------------------------------------------------------------------------


def _fixtures():
    two = tree_from_nested(("r", 3.0, [("a", 0.0, []), ("b", 1.0, [])]))
    one = tree_from_nested(("c", 0.0, []))
    out = [interleaving_from_trees(two, two)[0], interleaving_from_trees(two, one)[0],
           interleaving_from_trees(one, one)[0]]
    rng = np.random.default_rng(9)
    out += [random_interleaving(rng, n) for n in (5, 20, 60, 200)]
    return out


def test_deterministic_svg(tmp_path, report):
    fixtures = _fixtures()
    same = sum(render_svg(build_scene(il)) == render_svg(build_scene(il)) for il in fixtures)
    # separate processes with different hash seeds through the command line
    fa, fb = _big_fields(3, 24)
    paths = []
    for name, f in (("a.csv", fa), ("b.csv", fb)):
        p = tmp_path / name
        np.savetxt(p, f.values.reshape(f.rows, f.cols), delimiter=",")
        paths.append(str(p))
    outs = []
    for seed in ("1", "2"):
        o = tmp_path / f"out{seed}.svg"
        env = dict(os.environ, PYTHONHASHSEED=seed)
        subprocess.run([sys.executable, "-m", "parkview.cli", "compare", "--field-a", paths[0],
                        "--field-b", paths[1], "--grid-fraction", "4", "-o", str(o)],
                       check=True, env=env, capture_output=True)
        outs.append(o.read_bytes())
    ok = same == len(fixtures) and outs[0] == outs[1]
    report(9, ok, f"{same}/{len(fixtures)} fixtures byte-identical in process, "
                  f"command line output identical across hash seeds: {outs[0] == outs[1]}")
    assert same == len(fixtures)
    assert outs[0] == outs[1]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
