"""Shift maps, interleavings and the branch regions they induce.

A shift map is stored by its leaf images only.  Every other image follows by
walking up from the image of a descendant leaf, so internally we keep
``alpha_edge[v]``: the target edge holding the image of source vertex ``v``.

Preimages of target edges are described by *pieces*: maximal stretches of a
source edge whose image stays on one target edge.  Branch regions, edge
weights and components are all assembled from pieces.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass
from typing import NamedTuple

from .mergetree import (
    INF,
    OrderedMergeTree,
    TreePoint,
    Violation,
    Path,
)


class MapFormatError(ValueError):
    """A shift map or interleaving file cannot be interpreted."""


class InvalidMapError(ValueError):
    """An operation needed a valid shift map but got a broken one."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


class InvariantError(RuntimeError):
    """Internal consistency check failed; indicates a bug upstream."""


class Piece(NamedTuple):
    """Stretch [slo, shi) of source edge ``v`` whose image lies on target edge ``w``."""

    v: int
    w: int
    slo: float
    shi: float
    first: bool  # starts at the lower endpoint of v
    ends_at_parent: bool  # reaches the upper endpoint of v
    tops_out: bool  # image reaches the top of w


class Segment(NamedTuple):
    edge: str
    bottom: float
    top: float


@dataclass
class Branch:
    """The part of the source tree a shift map sends onto one target path."""

    path: Path
    components: list
    top_height: float
    bottom_height: float
    delta: float
    top_vertex_height: float = INF

    @property
    def size(self) -> int:
        return len(self.components)

    @property
    def empty(self) -> bool:
        return not self.components

    @property
    def kind(self) -> str:
        return ("empty", "simple")[self.size] if self.size < 2 else "compound"

    @property
    def active_interval(self):
        """Heights [lo, hi) of the active part of the path, or None."""
        if self.empty:
            return None
        return (self.bottom_height + self.delta, self.top_vertex_height)


class ShiftMap:
    """Map from ``source`` to ``target`` raising every point by ``delta``."""

    def __init__(self, source: OrderedMergeTree, target: OrderedMergeTree, delta: float, leaf_images):
        self.source = source
        self.target = target
        self.delta = float(delta)
        if not self.delta >= 0 or not math.isfinite(self.delta):
            raise MapFormatError(f"delta must be a finite non-negative number, got {delta}")
        images = {}
        for lid, p in dict(leaf_images).items():
            if lid not in source.index:
                raise MapFormatError(f"image given for unknown source node {lid!r}")
            if not source.is_leaf(source.index[lid]):
                raise MapFormatError(f"image given for internal node {lid!r}")
            if p.edge not in target.index:
                raise MapFormatError(f"leaf {lid!r} maps to unknown edge {p.edge!r}")
            images[lid] = TreePoint(p.edge, float(p.height))
        missing = [source.ids[v] for v in source.leaves if source.ids[v] not in images]
        if missing:
            raise MapFormatError(f"no image for leaves {missing}")
        self.leaf_images = images
        self._violations = None
        self._alpha_edge = None
        self._pieces = None
        self._glue = None

    def __repr__(self):
        return f"ShiftMap(delta={self.delta}, {len(self.leaf_images)} leaf images)"

    # -- validation and the vertex image table -----------------------------------

    def violations(self, exhaustive: bool = False) -> list:
        if exhaustive:
            return validate_shift_map(self, exhaustive=True)
        if self._violations is None:
            self._violations = validate_shift_map(self)
        return self._violations

    def require_valid(self):
        bad = self.violations()
        if bad:
            raise InvalidMapError(bad)

    @property
    def alpha_edge(self) -> list:
        if self._alpha_edge is None:
            self.require_valid()
        return self._alpha_edge

    def image_edge(self, v: int, h: float) -> int:
        """Target edge holding the image of the source point (v, h)."""
        return self.target.up(self.alpha_edge[v], h + self.delta)

    @property
    def pieces(self) -> list:
        if self._pieces is None:
            self._pieces = compute_pieces(self)
        return self._pieces

    def to_dict(self) -> dict:
        return {lid: {"edge": p.edge, "height": p.height} for lid, p in sorted(self.leaf_images.items())}


@dataclass
class Interleaving:
    alpha: ShiftMap
    beta: ShiftMap

    def __post_init__(self):
        if self.alpha.delta != self.beta.delta:
            raise MapFormatError(f"maps disagree on delta: {self.alpha.delta} vs {self.beta.delta}")
        if self.alpha.source is not self.beta.target or self.alpha.target is not self.beta.source:
            raise MapFormatError("maps do not run between the same two trees")

    @property
    def delta(self) -> float:
        return self.alpha.delta


def identity_map(t: OrderedMergeTree) -> ShiftMap:
    return ShiftMap(t, t, 0.0, {t.ids[v]: t.point(v) for v in t.leaves})


def identity_interleaving(t: OrderedMergeTree) -> Interleaving:
    return Interleaving(identity_map(t), identity_map(t))


def map_from_leaf_targets(source, target, delta, targets) -> ShiftMap:
    """Shift map sending each source leaf above the given target leaf."""
    images = {}
    for lid, tid in targets.items():
        h = source.height[source.index[lid]] + delta
        images[lid] = TreePoint(target.ids[target.up(target.index[tid], h)], h)
    return ShiftMap(source, target, delta, images)


# -- evaluation and validation ---------------------------------------------------


def evaluate(m: ShiftMap, x: TreePoint) -> TreePoint:
    """Image of the source point ``x``, exactly delta higher."""
    s = m.source
    v = s.point_index(x)
    m.require_valid()
    h = x.height + m.delta
    return TreePoint(m.target.ids[m.image_edge(v, x.height)], h)


def validate_shift_map(m: ShiftMap, exhaustive: bool = False) -> list:
    """Violations of the exact-shift, well-definedness and monotonicity axioms.

    The default monotonicity check compares only pairs of source edges that
    are neighbours at some height, at the lowest height both exist.  This is
    equivalent to checking every height.  ``exhaustive=True`` instead checks
    all points at every critical height and every midpoint between them.
    """
    s, t, d = m.source, m.target, m.delta
    out = []
    alpha = [-1] * len(s)
    for v in s.leaves:
        lid = s.ids[v]
        p = m.leaf_images[lid]
        want = s.height[v] + d
        w = t.index[p.edge]
        if p.height != want:
            out.append(Violation("shift", lid, f"image height {p.height} != {s.height[v]} + {d}"))
        elif not (t.height[w] <= p.height < t.top[w]):
            out.append(Violation("edge-range", lid, f"height {p.height} is not on target edge {p.edge!r}"))
        else:
            alpha[v] = w
    if out:
        return out

    for v in s.postorder:
        kids = s.children[v]
        if not kids:
            continue
        h = s.height[v] + d
        ups = [t.up(alpha[c], h) for c in kids]
        if any(u != ups[0] for u in ups):
            names = ", ".join(f"{s.ids[c]}->{t.ids[u]}" for c, u in zip(kids, ups))
            out.append(Violation("well-defined", s.ids[v], f"children images disagree at height {h}: {names}"))
        alpha[v] = ups[0]
    if out:
        return out

    if exhaustive:
        out.extend(_monotone_exhaustive(m, alpha))
    else:
        out.extend(_monotone_neighbours(m, alpha))
    if not out:
        m._alpha_edge = alpha
    return out


def _monotone_violation(m, a, b, h, wa, wb):
    s, t = m.source, m.target
    return Violation(
        "monotonicity", f"({s.ids[a]}, {s.ids[b]}) at height {h}",
        f"images ({t.ids[wa]}, {t.ids[wb]}) at height {h + m.delta} are out of order")


def _monotone_neighbours(m, alpha):
    s, t, d = m.source, m.target, m.delta
    lo_t = t.lo_rank
    # sweep source vertices by height, keeping the edges crossing the sweep line
    # sorted by leftmost leaf rank; every newly created neighbour pair is checked
    order = sorted(range(len(s)), key=lambda v: (s.height[v], s.lo_rank[v]))
    keys, active = [], []
    out = []
    i, n = 0, len(order)
    while i < n:
        h = s.height[order[i]]
        j = i
        while j < n and s.height[order[j]] == h:
            j += 1
        batch = order[i:j]
        for v in batch:
            for c in s.children[v]:
                k = bisect.bisect_left(keys, s.lo_rank[c])
                del keys[k], active[k]
        for v in batch:
            k = bisect.bisect_left(keys, s.lo_rank[v])
            keys.insert(k, s.lo_rank[v])
            active.insert(k, v)
        for v in batch:
            k = bisect.bisect_left(keys, s.lo_rank[v])
            for a, b in ((k - 1, k), (k, k + 1)):
                if a < 0 or b >= len(active):
                    continue
                va, vb = active[a], active[b]
                wa, wb = t.up(alpha[va], h + d), t.up(alpha[vb], h + d)
                if wa != wb and lo_t[wa] > lo_t[wb]:
                    out.append(_monotone_violation(m, va, vb, h, wa, wb))
        i = j
    return out


def _critical_heights(m):
    s, t, d = m.source, m.target, m.delta
    base = sorted(set(s.height) | {h - d for h in t.height})
    hs = list(base)
    hs += [(a + b) / 2 for a, b in zip(base, base[1:])]
    hs.append(base[-1] + 1.0)
    return sorted(set(hs))


def _monotone_exhaustive(m, alpha):
    s, t, d = m.source, m.target, m.delta
    out = []
    for h in _critical_heights(m):
        edges = [v for v in range(len(s)) if s.height[v] <= h < s.top[v]]
        edges.sort(key=s.lo_rank.__getitem__)
        imgs = [t.up(alpha[v], h + d) for v in edges]
        for k in range(len(edges) - 1):
            wa, wb = imgs[k], imgs[k + 1]
            if wa != wb and t.lo_rank[wa] > t.lo_rank[wb]:
                out.append(_monotone_violation(m, edges[k], edges[k + 1], h, wa, wb))
    return out


def _witness_points(t: OrderedMergeTree):
    for v in range(len(t)):
        yield v, t.height[v]
        top = t.top[v]
        yield v, (t.height[v] + top) / 2 if top < INF else t.height[v] + 1.0


def validate_interleaving(i: Interleaving) -> list:
    """Check beta(alpha(x)) is the ancestor of x 2*delta higher, both ways."""
    out = []
    for name, m in (("alpha", i.alpha), ("beta", i.beta)):
        for v in m.violations():
            out.append(Violation(v.rule, f"{name} {v.subject}", v.detail))
    if out:
        return out
    for first, second, label in ((i.alpha, i.beta, "beta∘alpha"), (i.beta, i.alpha, "alpha∘beta")):
        t = first.source
        for v, h in _witness_points(t):
            w1 = first.image_edge(v, h)
            h1 = h + first.delta
            w2 = second.image_edge(w1, h1)
            h2 = h1 + second.delta
            anc = t.up(v, h2)
            if anc != w2:
                out.append(Violation(
                    "round-trip", f"({t.ids[v]}, {h})",
                    f"{label} lands on edge {t.ids[w2]!r} at height {h2}, ancestor is on {t.ids[anc]!r}"))
    return out


# -- pieces, weights, branches ---------------------------------------------------


def compute_pieces(m: ShiftMap) -> list:
    """Route every source edge through the target; one Piece per target edge hit.

    Pieces of one source edge are consecutive in the returned list, source
    edges appear in preorder.
    """
    s, t, d = m.source, m.target, m.delta
    alpha = m.alpha_edge
    ttop, tpar = t.top, t.parent
    pieces = []
    for v in range(len(s)):
        w = alpha[v]
        slo = s.height[v]
        stop = s.top[v]
        limit = stop + d
        first = True
        while True:
            tt = ttop[w]
            if tt < limit:
                pieces.append(Piece(v, w, slo, tt - d, first, False, True))
                slo = tt - d
                w = tpar[w]
                first = False
                continue
            if tt == limit and tt < INF:
                pieces.append(Piece(v, w, slo, stop, first, True, True))
            else:
                pieces.append(Piece(v, w, slo, stop, first, True, False))
            break
    first_of = [0] * len(s)
    for k in range(len(pieces) - 1, -1, -1):
        first_of[pieces[k].v] = k
    m._first_of = first_of
    return pieces


def _glue_pairs(m: ShiftMap) -> list:
    """Pairs of piece indices that touch at a shared source point.

    Entries are (i, j, kind) where kind is "route" for consecutive pieces of
    one source edge (joined at a target vertex) and "vertex" for the last
    piece of a child edge and the first piece of its parent edge.
    """
    if m._glue is not None:
        return m._glue
    parent = m.source.parent
    pieces = m.pieces
    first_of = [0] * len(parent)
    for k, p in enumerate(pieces):
        if p.first:
            first_of[p.v] = k
    out = []
    for k, p in enumerate(pieces):
        if not p.ends_at_parent:
            out.append((k, k + 1, "route"))
        elif parent[p.v] >= 0:
            out.append((k, first_of[parent[p.v]], "vertex"))
    m._glue = out
    return out


def edge_weights(m: ShiftMap) -> list:
    """Number of connected components of the preimage of each target edge's interior."""
    t = m.target
    w = [0] * len(t)
    for p in m.pieces:
        if p.tops_out:
            w[p.w] += 1
    w[t.root] = 1
    return w


class _DSU:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, a):
        p = self.p
        while p[a] != a:
            p[a] = p[p[a]]
            a = p[a]
        return a

    def union(self, a, b):
        a, b = self.find(a), self.find(b)
        if a != b:
            self.p[max(a, b)] = min(a, b)


def _components(m: ShiftMap, keep, glue_ok) -> list:
    """Group the pieces with keep(piece) into connected components."""
    pieces = m.pieces
    idx = [k for k, p in enumerate(pieces) if keep(p)]
    if not idx:
        return []
    local = {k: i for i, k in enumerate(idx)}
    dsu = _DSU(len(idx))
    for a, b, kind in _glue_pairs(m):
        if a in local and b in local and glue_ok(pieces[a], pieces[b], kind):
            dsu.union(local[a], local[b])
    groups = {}
    for k in idx:
        groups.setdefault(dsu.find(local[k]), []).append(pieces[k])
    s = m.source
    comps = []
    for g in groups.values():
        segs = sorted((Segment(s.ids[p.v], p.slo, p.shi) for p in g),
                      key=lambda sg: (s.lo_rank[s.index[sg.edge]], sg.bottom))
        comps.append(segs)
    comps.sort(key=lambda c: min(s.lo_rank[s.index[sg.edge]] for sg in c))
    return comps


def branch_of_edge(m: ShiftMap, edge: str):
    """Preimage of the interior of target edge ``edge``: (components, weight)."""
    w = m.target.index[edge]
    comps = _components(m, lambda p: p.w == w, lambda a, b, kind: kind == "vertex" and a.w == b.w)
    weight = edge_weights(m)[w]
    if len(comps) != weight:
        raise InvariantError(f"edge {edge!r}: {len(comps)} components but weight {weight}")
    return comps, weight


def branches_of_paths(m: ShiftMap, path_of, paths) -> list:
    """Branches of all paths of a decomposition in one pass over the pieces.

    ``path_of[w]`` is the path index of target edge w, ``paths`` the Path list.
    Each piece touches at most one piece above it (the next piece on its source
    edge, or the first piece of the parent edge), so components are labelled
    top-down without a union-find.
    """
    s, t = m.source, m.target
    pieces = m.pieces
    n = len(pieces)
    pidx = [path_of[p.w] for p in pieces]
    label = [None] * n
    per_path = [[] for _ in paths]
    ids, lo, parent = s.ids, s.lo_rank, s.parent
    first_of = m._first_of
    k = 0
    while k < n:
        v = pieces[k].v
        end = k
        while end + 1 < n and pieces[end + 1].v == v:
            end += 1
        up = first_of[parent[v]] if parent[v] >= 0 else -1
        for j in range(end, k - 1, -1):
            p = pieces[j]
            seg = Segment(ids[v], p.slo, p.shi)
            if up >= 0 and pidx[up] == pidx[j]:
                c = label[j] = label[up]
                c[1].append(seg)
                if lo[v] < c[0]:
                    c[0] = lo[v]
                if p.slo < c[2]:
                    c[2] = p.slo
            else:
                c = label[j] = [lo[v], [seg], p.slo]
                per_path[pidx[j]].append(c)
            up = j
        k = end + 1
    out = []
    d = m.delta
    theight, tindex = t.height, t.index
    for k, path in enumerate(paths):
        comps = per_path[k]
        top_v = INF if path.top is None else theight[tindex[path.top]]
        if not comps:
            out.append(Branch(path, [], top_v - d, top_v - d, d, top_v))
            continue
        if len(comps) > 1:
            comps.sort()
        bottom = min(c[2] for c in comps)
        out.append(Branch(path, [c[1] for c in comps], top_v - d, bottom, d, top_v))
    return out


def branch_of_path(m: ShiftMap, path: Path) -> Branch:
    """The part of the source that ``m`` sends onto ``path`` (open at its top)."""
    t = m.target
    on = {t.index[v] for v in path.vertices}
    comps = _components(m, lambda p: p.w in on, lambda a, b, kind: True)
    top_v = INF if path.top is None else t.height[t.index[path.top]]
    top = top_v - m.delta
    bottom = min((sg.bottom for c in comps for sg in c), default=top)
    return Branch(path, comps, top, bottom, m.delta, top_v)


def column_intervals(b: Branch, column_of) -> dict:
    """Per source column, the (bottom, top) hull of the branch's segments.

    ``column_of`` maps a source edge id to its column.  Raises InvariantError
    if a column meets the branch in more than one interval.
    """
    by_col = {}
    for comp in b.components:
        for sg in comp:
            by_col.setdefault(column_of(sg.edge), []).append((sg.bottom, sg.top))
    out = {}
    for col, ivs in by_col.items():
        ivs.sort()
        hi = ivs[0][1]
        for lo2, hi2 in ivs[1:]:
            if lo2 > hi:
                raise InvariantError(f"branch meets column {col} in a split interval")
            hi = max(hi, hi2)
        out[col] = (ivs[0][0], hi)
    return out


# -- I/O -------------------------------------------------------------------------


def _read_images(raw, name):
    if not isinstance(raw, dict):
        raise MapFormatError(f"field {name!r} must be an object")
    out = {}
    for lid, p in raw.items():
        if not isinstance(p, dict) or "edge" not in p or "height" not in p:
            raise MapFormatError(f"{name} image of {lid!r} needs 'edge' and 'height'")
        h = p["height"]
        if isinstance(h, bool) or not isinstance(h, (int, float)):
            raise MapFormatError(f"{name} image of {lid!r} has non-numeric height")
        out[lid] = TreePoint(str(p["edge"]), float(h))
    return out


def read_interleaving(data, tree_a: OrderedMergeTree, tree_b: OrderedMergeTree) -> Interleaving:
    try:
        raw = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise MapFormatError(f"invalid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise MapFormatError("interleaving JSON must be an object")
    for key in ("delta", "alpha", "beta"):
        if key not in raw:
            raise MapFormatError(f"missing field {key!r}")
    d = raw["delta"]
    if isinstance(d, bool) or not isinstance(d, (int, float)):
        raise MapFormatError("delta must be a number")
    alpha = ShiftMap(tree_a, tree_b, d, _read_images(raw["alpha"], "alpha"))
    beta = ShiftMap(tree_b, tree_a, d, _read_images(raw["beta"], "beta"))
    return Interleaving(alpha, beta)


def write_interleaving(i: Interleaving) -> bytes:
    doc = {"delta": i.delta, "alpha": i.alpha.to_dict(), "beta": i.beta.to_dict()}
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode()
