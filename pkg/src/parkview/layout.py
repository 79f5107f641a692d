"""Geometry of the side-by-side drawing: columns, hedges, active paths, colors, grid.

Heights are kept in data units; x positions are in layout units where an
inactive column is ``inactive_width`` wide.  The two trees share the height
axis.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .decomposition import PathBranchDecomposition, PathDecomposition, path_branch_decomposition
from .interleaving import INF, Branch, Interleaving, InvariantError
from .mergetree import Violation


class HedgePropertyError(InvariantError):
    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations[:5]))


class ColoringError(InvariantError):
    pass


class SceneError(InvariantError):
    pass


@dataclass
class LayoutConfig:
    active_width: float = 3.0
    inactive_width: float = 1.0
    grid_fraction: int = 1
    palette_size: int = 3
    max_grid_lines: int = 400
    tree_gap: float = 4.0  # horizontal space between the two trees
    cap_pad: float = 0.08  # headroom above the roots, as a fraction of the height range
    tol: float = 1e-9

    def __post_init__(self):
        if not (self.active_width > self.inactive_width > 0):
            raise ValueError("need active_width > inactive_width > 0")
        if int(self.grid_fraction) != self.grid_fraction or self.grid_fraction < 1:
            raise ValueError(f"grid_fraction must be an integer >= 1, got {self.grid_fraction}")
        if int(self.palette_size) != self.palette_size or self.palette_size < 3:
            raise ValueError(f"palette_size must be an integer >= 3, got {self.palette_size}")
        if self.max_grid_lines < 1:
            raise ValueError("max_grid_lines must be positive")


class Bar(NamedTuple):
    column: int
    kind: str  # "tree", "filler" or "bridge"
    bottom: float
    top: float


@dataclass
class Column:
    index: int
    path: int
    leaf: str
    x: float  # center
    width: float
    active: bool

    @property
    def x0(self):
        return self.x - self.width / 2

    @property
    def x1(self):
        return self.x + self.width / 2


@dataclass
class Hedge:
    """Histogram enclosing one branch; ``path`` indexes the target decomposition."""

    path: int
    branch: Branch
    bars: list
    top: float
    color: int = -1

    @property
    def first(self) -> int:
        return self.bars[0].column

    @property
    def last(self) -> int:
        return self.bars[-1].column

    def bar_at(self, col: int) -> Bar | None:
        k = col - self.first
        if 0 <= k < len(self.bars):
            return self.bars[k]
        return None

    @property
    def anchor(self) -> int:
        """Column of the lowest tree bar, leftmost on ties."""
        best = None
        for b in self.bars:
            if b.kind == "tree" and (best is None or b.bottom < best.bottom):
                best = b
        return best.column

    def to_dict(self) -> dict:
        return {"path": self.path, "top": self.top, "color": self.color,
                "bars": [list(b) for b in self.bars]}


@dataclass
class ActivePathGlyph:
    path: int
    column: int
    lo: float
    hi: float
    color: int

    def to_dict(self) -> dict:
        return {"path": self.path, "column": self.column, "lo": self.lo, "hi": self.hi, "color": self.color}


class Stroke(NamedTuple):
    column: int
    lo: float
    hi: float


class Connector(NamedTuple):
    vertex: str
    height: float
    col_lo: int
    col_hi: int


@dataclass
class TreeLayout:
    tree: object
    decomposition: PathDecomposition
    columns: list
    strokes: list
    connectors: list
    hedges: list = field(default_factory=list)
    glyphs: list = field(default_factory=list)
    offset: float = 0.0  # x of the left edge of the first column
    hedge_hue: str = "red"
    glyph_hue: str = "blue"

    @property
    def width(self) -> float:
        return sum(c.width for c in self.columns)

    def colors_used(self) -> int:
        return len({h.color for h in self.hedges})

    def to_dict(self) -> dict:
        return {
            "offset": self.offset,
            "hedge_hue": self.hedge_hue,
            "glyph_hue": self.glyph_hue,
            "columns": [{"index": c.index, "leaf": c.leaf, "x": c.x, "width": c.width, "active": c.active}
                        for c in self.columns],
            "strokes": [list(s) for s in self.strokes],
            "connectors": [list(c) for c in self.connectors],
            "hedges": [h.to_dict() for h in self.hedges],
            "glyphs": [g.to_dict() for g in self.glyphs],
        }


@dataclass
class Scene:
    left: TreeLayout
    right: TreeLayout
    delta: float
    cap: float
    floor: float
    grid: list
    grid_step: float
    palette_size: int

    def to_dict(self) -> dict:
        return {
            "delta": self.delta, "cap": self.cap, "floor": self.floor,
            "grid_step": self.grid_step, "grid": list(self.grid),
            "palette_size": self.palette_size,
            "left": self.left.to_dict(), "right": self.right.to_dict(),
        }

    def dump(self) -> bytes:
        return (json.dumps(self.to_dict(), sort_keys=True, indent=2) + "\n").encode()


# -- columns and hedges ------------------------------------------------------------


def build_columns(d: PathDecomposition, active, config: LayoutConfig | None = None, offset: float = 0.0) -> list:
    """One column per path in leaf order; ``active[k]`` widens column k."""
    config = config or LayoutConfig()
    t = d.tree
    out = []
    x = offset
    for k in range(len(d)):
        w = config.active_width if active[k] else config.inactive_width
        out.append(Column(k, k, t.ids[d.path_vertices(k)[0]], x + w / 2, w, bool(active[k])))
        x += w
    return out


def build_hedge(b: Branch, column_of, top: float | None = None, path: int = -1) -> Hedge | None:
    """Hedge of branch ``b``; ``column_of`` maps source edge ids to columns.

    ``top`` overrides the branch top (needed for the unbounded root path).
    Returns None for an empty branch.
    """
    if b.empty:
        return None
    if top is None:
        top = b.top_height
    comps = []
    for comp in b.components:
        low = {}
        for sg in comp:
            c = column_of(sg.edge)
            if c not in low or sg.bottom < low[c]:
                low[c] = sg.bottom
        comps.append(sorted(low.items()))
    comps.sort()
    for a, c in zip(comps, comps[1:]):
        if a[-1][0] >= c[0][0]:
            raise InvariantError(f"branch components overlap in columns {a[-1][0]} and {c[0][0]}")
    bars = []
    for comp in comps:
        for (c, lo), (c2, lo2) in zip(comp, comp[1:]):
            bars.append(Bar(c, "tree", lo, top))
            fill = max(lo, lo2)
            bars.extend(Bar(k, "filler", fill, top) for k in range(c + 1, c2))
        c, lo = comp[-1]
        bars.append(Bar(c, "tree", lo, top))
    if len(comps) > 1:
        shortest = min(top - br.bottom for br in bars)
        bridge = top - 0.5 * shortest
        out = []
        for br in bars:
            if out and br.column > out[-1].column + 1:
                out.extend(Bar(k, "bridge", bridge, top) for k in range(out[-1].column + 1, br.column))
            out.append(br)
        bars = out
    return Hedge(path, b, bars, top)


# -- adjacency and the three properties -------------------------------------------


@dataclass
class HedgeAdjacency:
    """Contacts between the hedges of one tree (indices into the hedge list)."""

    edges: set
    parents: list  # hedges touching the top of each hedge
    left: list  # hedges touching the left side of the leftmost bar
    right: list
    below: dict  # (hedge, column) -> hedges touching the bottom of that bar
    neighbours: list

    @property
    def parent(self) -> list:
        return [min(p) if p else -1 for p in self.parents]


def _column_intervals(hedges, n_columns=None):
    cols = {}
    for i, h in enumerate(hedges):
        for b in h.bars:
            cols.setdefault(b.column, []).append((b.bottom, b.top, i))
    for v in cols.values():
        v.sort()
    return cols


def hedge_adjacency(hedges: list, tol: float = 1e-9, strict: bool = True) -> HedgeAdjacency:
    """Contact graph of one tree's hedges; raises HedgePropertyError if strict
    and any of the three hedge properties fails."""
    n = len(hedges)
    cols = _column_intervals(hedges)
    edges = set()
    parents = [set() for _ in range(n)]
    left = [set() for _ in range(n)]
    right = [set() for _ in range(n)]
    below = {}
    overlaps = []

    def link(a, b):
        if a != b:
            edges.add((min(a, b), max(a, b)))

    for c, ivs in cols.items():
        for (b0, t0, i), (b1, t1, j) in zip(ivs, ivs[1:]):
            if t0 - b1 > tol:
                overlaps.append((c, i, j, min(t0, t1) - b1))
            elif abs(t0 - b1) <= tol:
                # j sits on top of i in this column
                link(i, j)
                parents[i].add(j)
                below.setdefault((j, c), set()).add(i)
        nxt = cols.get(c + 1)
        if not nxt:
            continue
        # sweep the two sorted interval lists for positive vertical overlap
        k = 0
        for b0, t0, i in ivs:
            while k < len(nxt) and nxt[k][1] <= b0 + tol:
                k += 1
            m = k
            while m < len(nxt) and nxt[m][0] < t0 - tol:
                b1, t1, j = nxt[m]
                if min(t0, t1) - max(b0, b1) > tol and i != j:
                    link(i, j)
                    if hedges[i].last == c:
                        right[i].add(j)
                    if hedges[j].first == c + 1:
                        left[j].add(i)
                m += 1
    neighbours = [set() for _ in range(n)]
    for a, b in edges:
        neighbours[a].add(b)
        neighbours[b].add(a)
    adj = HedgeAdjacency(edges, parents, left, right, below, neighbours)
    adj.overlaps = overlaps
    if strict:
        bad = check_hedge_properties(hedges, adj, tol)
        if bad:
            raise HedgePropertyError(bad)
    return adj


def check_hedge_properties(hedges: list, adj: HedgeAdjacency, tol: float = 1e-9) -> list:
    out = []
    for h in hedges:
        cs = [b.column for b in h.bars]
        if cs != list(range(cs[0], cs[0] + len(cs))):
            out.append(Violation("histogram", f"hedge {h.path}", f"columns {cs} are not contiguous"))
        if any(b.top != h.top for b in h.bars):
            out.append(Violation("histogram", f"hedge {h.path}", "bar tops differ"))
    for c, i, j, area in getattr(adj, "overlaps", []):
        out.append(Violation("disjoint", f"hedges {hedges[i].path}/{hedges[j].path}",
                             f"interiors overlap by {area:g} in column {c}"))
    for i, ps in enumerate(adj.parents):
        if len(ps) > 1:
            out.append(Violation("one-parent", f"hedge {hedges[i].path}",
                                 f"parents {sorted(hedges[p].path for p in ps)}"))
    for i, h in enumerate(hedges):
        longest = max(b.top - b.bottom for b in h.bars)
        for b in h.bars:
            if b.top - b.bottom >= longest - tol and adj.below.get((i, b.column)):
                out.append(Violation("longest-bar", f"hedge {h.path}",
                                     f"hedge touches the bottom of its longest bar in column {b.column}"))
    return out


# -- coloring ----------------------------------------------------------------------


def _is_descendant(parent, k, p):
    seen = 0
    while k >= 0 and seen <= len(parent):
        if k == p:
            return True
        k = parent[k]
        seen += 1
    return False


def color_hedges(hedges: list, adj: HedgeAdjacency, palette_size: int = 3, tol: float = 1e-9) -> list:
    """Top-down coloring with the left/right swap that keeps three colors enough.

    Hedges are taken by descending top.  When the left, right and parent
    neighbours of the current hedge G use three different colors, the parent's
    bar nearest to G that reaches below G's top is found, and colors l and r are
    exchanged on the parent's already colored descendants lying strictly between
    that bar and G.  G then gets the first free color (the least used free color
    when the palette has more than three entries).
    """
    n = len(hedges)
    order = sorted(range(n), key=lambda i: (-hedges[i].top, hedges[i].first))
    parent = adj.parent
    color = [-1] * n
    usage = [0] * palette_size
    for g in order:
        G = hedges[g]
        used = {color[k] for k in adj.neighbours[g] if color[k] >= 0}
        if len(used) >= palette_size:
            L = [k for k in adj.left[g] if color[k] >= 0]
            R = [k for k in adj.right[g] if color[k] >= 0]
            P = [k for k in adj.parents[g] if color[k] >= 0]
            if len(L) == 1 and len(R) == 1 and len(P) == 1 and \
                    len({color[L[0]], color[R[0]], color[P[0]]}) == 3:
                _swap(hedges, g, P[0], color[L[0]], color[R[0]], color, parent, tol)
                used = {color[k] for k in adj.neighbours[g] if color[k] >= 0}
        free = [c for c in range(palette_size) if c not in used]
        if not free:
            raise ColoringError(f"no free color for hedge {G.path} (neighbour colors {sorted(used)})")
        c = free[0] if palette_size == 3 else min(free, key=lambda c: (usage[c], c))
        color[g] = c
        usage[c] += 1
    for a, b in adj.edges:
        if color[a] == color[b]:
            raise ColoringError(f"hedges {hedges[a].path} and {hedges[b].path} share color {color[a]}")
    for h, c in zip(hedges, color):
        h.color = c
    return color


def _swap(hedges, g, p, l, r, color, parent, tol):
    G, P = hedges[g], hedges[p]
    lower = [b.column for b in P.bars if b.bottom < G.top - tol]
    lefts = [c for c in lower if c < G.first]
    rights = [c for c in lower if c > G.last]
    cl = max(lefts) if lefts else None
    cr = min(rights) if rights else None
    if cl is None and cr is None:
        raise ColoringError(f"parent of hedge {G.path} never reaches below its top")
    if cl is not None and (cr is None or G.first - cl <= cr - G.last):
        lo, hi = cl, G.first
    else:
        lo, hi = G.last, cr
    for k, H in enumerate(hedges):
        if k == g or color[k] < 0 or not (H.first > lo and H.last < hi):
            continue
        if not _is_descendant(parent, k, p):
            continue
        if color[k] == l:
            color[k] = r
        elif color[k] == r:
            color[k] = l


# -- scene -----------------------------------------------------------------------


def _tree_frame(t, d: PathDecomposition, active, cap, config, offset):
    columns = build_columns(d, active, config, offset)
    strokes = []
    for k in range(len(d)):
        leaf = d.path_vertices(k)[0]
        top = d.path_top(k)
        strokes.append(Stroke(k, t.height[leaf], cap if top < 0 else t.height[top]))
    connectors = []
    for v in range(len(t)):
        kids = t.children[v]
        if kids:
            cs = [d.path_of[c] for c in kids]
            connectors.append(Connector(t.ids[v], t.height[v], min(cs), max(cs)))
    return TreeLayout(t, d, columns, strokes, connectors, offset=offset)


def _hedges_and_glyphs(branches, column_of, cap, delta):
    hedges, glyphs = [], []
    for k, b in enumerate(branches):
        if b.empty:
            continue
        hi = b.top_vertex_height if b.top_vertex_height < INF else cap
        hedges.append(build_hedge(b, column_of, top=hi - delta, path=k))
        glyphs.append(ActivePathGlyph(k, k, b.bottom_height + delta, hi, -1))
    return hedges, glyphs


def grid_lines(lo: float, hi: float, delta: float, fraction: int = 1, max_lines: int = 400):
    """Heights k * step in [lo, hi] with step = delta / fraction.

    The step is multiplied by the smallest integer that keeps the count within
    ``max_lines``.  No lines for delta == 0.
    """
    if delta <= 0:
        return [], 0.0
    base = delta / fraction
    mult = 1
    while True:
        step = base * mult
        k0, k1 = math.ceil(lo / step), math.floor(hi / step)
        if k1 - k0 + 1 <= max_lines:
            return [k * step for k in range(k0, k1 + 1)], step
        mult = max(mult + 1, int(math.ceil((k1 - k0 + 1) / max_lines * mult)))


def build_scene(i: Interleaving, pbd: PathBranchDecomposition | None = None,
                config: LayoutConfig | None = None) -> Scene:
    """Lay out both trees, their hedges and active paths, color and validate."""
    config = config or LayoutConfig()
    if pbd is None:
        pbd = path_branch_decomposition(i)
    ta, tb = i.alpha.source, i.alpha.target
    delta = i.delta
    lo = min(min(ta.height), min(tb.height))
    hi = max(ta.height[ta.root], tb.height[tb.root])
    span = hi - lo + delta
    cap = hi + delta + (config.cap_pad * span if span > 0 else 1.0)

    # left tree: columns from beta's paths, hedges of alpha's branches
    left = _tree_frame(ta, pbd.beta_paths, [not b.empty for b in pbd.beta_branches], cap, config, 0.0)
    right = _tree_frame(tb, pbd.alpha_paths, [not b.empty for b in pbd.alpha_branches], cap, config,
                        left.width + config.tree_gap)
    right.hedge_hue, right.glyph_hue = "blue", "red"

    left.hedges, right.glyphs = _hedges_and_glyphs(pbd.alpha_branches, pbd.beta_paths.column_of, cap, delta)
    right.hedges, left.glyphs = _hedges_and_glyphs(pbd.beta_branches, pbd.alpha_paths.column_of, cap, delta)

    for lay, other in ((left, right), (right, left)):
        adj = hedge_adjacency(lay.hedges, config.tol)
        color_hedges(lay.hedges, adj, config.palette_size, config.tol)
        for h, gl in zip(lay.hedges, other.glyphs):
            gl.color = h.color
        lay.adjacency = adj

    grid, step = grid_lines(lo, cap, delta, config.grid_fraction, config.max_grid_lines)
    scene = Scene(left, right, delta, cap, lo, grid, step, config.palette_size)
    bad = scene_violations(scene)
    if bad:
        raise SceneError(str(bad[0]))
    return scene


def scene_violations(s: Scene) -> list:
    """Cross-tree checks: delta offset, order correspondence, colors, connectors."""
    out = []
    d = s.delta
    for lay, other in ((s.left, s.right), (s.right, s.left)):
        side = "left" if lay is s.left else "right"
        if len(lay.hedges) != len(other.glyphs):
            out.append(Violation("correspondence", side, "hedge and active path counts differ"))
            continue
        for h, g in zip(lay.hedges, other.glyphs):
            if h.path != g.path:
                out.append(Violation("correspondence", f"{side} hedge {h.path}", f"paired with path {g.path}"))
            if h.top != g.hi - d:
                out.append(Violation("delta-offset", f"{side} hedge {h.path}",
                                     f"top {h.top} is not {d} below active top {g.hi}"))
            if h.color != g.color:
                out.append(Violation("color", f"{side} hedge {h.path}", "active path has another color"))
            if not g.lo <= g.hi:
                out.append(Violation("active", f"path {g.path}", f"interval [{g.lo}, {g.hi}) is reversed"))
        by_anchor = sorted(lay.hedges, key=lambda h: h.anchor)
        seq = [h.path for h in by_anchor]
        if seq != sorted(seq):
            out.append(Violation("order", side, f"hedges by lowest leaf map to paths {seq}"))
        for a, b in getattr(lay, "adjacency", HedgeAdjacency(set(), [], [], [], {}, [])).edges:
            if lay.hedges[a].color == lay.hedges[b].color:
                out.append(Violation("color", side, f"adjacent hedges {a} and {b} share a color"))
        out.extend(connector_violations(lay))
    return out


def connector_violations(lay: TreeLayout) -> list:
    """Leaves drawn above a horizontal connector segment."""
    leaf_h = np.array([s.lo for s in lay.strokes])
    out = []
    for c in lay.connectors:
        if c.col_hi > c.col_lo and leaf_h[c.col_lo:c.col_hi + 1].max() >= c.height:
            out.append(Violation("leaf-above-connector", c.vertex,
                                 f"a leaf in columns {c.col_lo}..{c.col_hi} is not below {c.height}"))
    return out
