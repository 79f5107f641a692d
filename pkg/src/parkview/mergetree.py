"""Ordered merge trees: data model, point arithmetic and JSON I/O.

A tree is stored with integer vertex indices in preorder; the public API speaks
vertex ids (opaque strings) and :class:`TreePoint` values.  A point on the
tree is named by the edge it lies on (the id of the edge's lower endpoint) and
its height.  The root edge extends upwards to infinity.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

INF = math.inf


class TreeFormatError(ValueError):
    """Input cannot be turned into a rooted tree at all."""


class TreeValidationError(ValueError):
    """A structurally sound tree violates a merge-tree invariant."""

    def __init__(self, violations):
        self.violations = list(violations)
        super().__init__("; ".join(str(v) for v in self.violations))


@dataclass(frozen=True)
class Violation:
    rule: str
    subject: str
    detail: str = ""

    def __str__(self):
        text = f"{self.rule} violation at {self.subject}"
        return f"{text}: {self.detail}" if self.detail else text

    def to_dict(self):
        return {"rule": self.rule, "subject": self.subject, "detail": self.detail}


class TreePoint(NamedTuple):
    edge: str
    height: float


class Path(NamedTuple):
    """Height-monotone path of a path decomposition, open at its top.

    ``vertices`` lists the lower endpoints of the path's edges from the bottom
    leaf upwards; ``top`` is the vertex the path ends at, ``None`` for the path
    that runs up the root edge to infinity.
    """

    vertices: tuple
    top: "str | None"

    @property
    def leaf(self) -> str:
        return self.vertices[0]

    @property
    def top_edge(self) -> str:
        return self.vertices[-1]


class OrderedMergeTree:
    """Rooted tree with vertex heights and ordered children.

    The left-to-right order of children is the leaf order.  An explicit
    ``leaf_order`` may be given instead (e.g. from a space-filling curve);
    :func:`validate_tree` then checks it against the tree structure.
    ``cells`` optionally tags vertices with the grid cell they came from.
    """

    def __init__(
        self,
        heights: Mapping[str, float],
        children: Mapping[str, Sequence[str]],
        root: str,
        leaf_order: Sequence[str] | None = None,
        cells: Mapping[str, tuple] | None = None,
    ):
        if root not in heights:
            raise TreeFormatError(f"root {root!r} is not a node")
        for v, kids in children.items():
            if v not in heights:
                raise TreeFormatError(f"children listed for unknown node {v!r}")
            for c in kids:
                if c not in heights:
                    raise TreeFormatError(f"node {v!r} has unknown child {c!r}")
        seen_parent = {}
        for v, kids in children.items():
            for c in kids:
                if c in seen_parent:
                    raise TreeFormatError(f"node {c!r} has two parents ({seen_parent[c]!r}, {v!r})")
                seen_parent[c] = v
        if root in seen_parent:
            raise TreeFormatError(f"root {root!r} has parent {seen_parent[root]!r}")

        ids, parent, kids_idx = [], [], []
        index = {}
        stack = [(root, -1)]
        while stack:
            v, p = stack.pop()
            if v in index:
                raise TreeFormatError(f"cycle through node {v!r}")
            index[v] = len(ids)
            ids.append(v)
            parent.append(p)
            kids_idx.append(None)
            for c in reversed(list(children.get(v, ()))):
                stack.append((c, index[v]))
        if len(ids) != len(heights):
            missing = sorted(set(heights) - set(index))
            raise TreeFormatError(f"nodes not reachable from root: {missing}")
        for v in ids:
            kids_idx[index[v]] = tuple(index[c] for c in children.get(v, ()))

        self.ids = tuple(ids)
        self.index = index
        self.root = 0
        self.parent = parent
        self.children = kids_idx
        self.height = [float(heights[v]) for v in ids]
        self.top = [INF if p < 0 else self.height[p] for p in parent]
        self.depth = [0] * len(ids)
        for i in range(1, len(ids)):
            self.depth[i] = self.depth[parent[i]] + 1

        dfs_leaves = [i for i in range(len(ids)) if not kids_idx[i]]
        self.explicit_order = leaf_order is not None
        if leaf_order is None:
            self.leaves = dfs_leaves
        else:
            order = []
            for v in leaf_order:
                if v not in index:
                    raise TreeFormatError(f"leaf_order names unknown node {v!r}")
                order.append(index[v])
            if sorted(order) != sorted(dfs_leaves):
                raise TreeFormatError("leaf_order is not a permutation of the leaves")
            self.leaves = order
        self.dfs_leaves = dfs_leaves
        self.leaf_rank = [-1] * len(ids)
        for r, v in enumerate(self.leaves):
            self.leaf_rank[v] = r

        # leftmost/rightmost descendant leaf rank; postorder for bottom-up passes
        self.postorder = list(range(len(ids) - 1, -1, -1))
        self.lo_rank = self.leaf_rank[:]
        self.hi_rank = self.leaf_rank[:]
        for v in self.postorder:
            if kids_idx[v]:
                self.lo_rank[v] = min(self.lo_rank[c] for c in kids_idx[v])
                self.hi_rank[v] = max(self.hi_rank[c] for c in kids_idx[v])
        self.cells = dict(cells) if cells else {}

    # -- small helpers on vertex indices -------------------------------------------

    def __len__(self):
        return len(self.ids)

    def __repr__(self):
        return f"OrderedMergeTree({len(self.ids)} vertices, {len(self.leaves)} leaves)"

    @property
    def n_leaves(self) -> int:
        return len(self.leaves)

    def is_leaf(self, v: int) -> bool:
        return not self.children[v]

    def up(self, v: int, h: float) -> int:
        """Index of the edge at height ``h`` above the point (v, >= f(v))."""
        top, parent = self.top, self.parent
        while top[v] <= h:
            v = parent[v]
        return v

    def leftmost_leaf(self, v: int) -> int:
        return self.leaves[self.lo_rank[v]]

    def is_descendant(self, v: int, u: int) -> bool:
        """Whether vertex ``v`` lies in the subtree of ``u`` (inclusive)."""
        du = self.depth[u]
        while self.depth[v] > du:
            v = self.parent[v]
        return v == u

    def lca_vertex(self, a: int, b: int) -> int:
        depth, parent = self.depth, self.parent
        while depth[a] > depth[b]:
            a = parent[a]
        while depth[b] > depth[a]:
            b = parent[b]
        while a != b:
            a, b = parent[a], parent[b]
        return a

    def point(self, v: int, h: float | None = None) -> TreePoint:
        return TreePoint(self.ids[v], self.height[v] if h is None else h)

    def vertex_point(self, vid: str) -> TreePoint:
        return TreePoint(vid, self.height[self.index[vid]])

    def leaf_ids(self) -> list:
        return [self.ids[v] for v in self.leaves]

    def point_index(self, p: TreePoint) -> int:
        try:
            v = self.index[p.edge]
        except KeyError:
            raise ValueError(f"unknown edge {p.edge!r}") from None
        if not (self.height[v] <= p.height < self.top[v]):
            raise ValueError(f"height {p.height} is not on edge {p.edge!r}")
        return v

    def heights_of(self, ids: Iterable[str]) -> list:
        return [self.height[self.index[v]] for v in ids]

    # -- conversion --------------------------------------------------------------

    def to_dict(self) -> dict:
        nodes = {}
        for v, vid in enumerate(self.ids):
            node = {"height": self.height[v], "children": [self.ids[c] for c in self.children[v]]}
            if vid in self.cells:
                node["cell"] = list(self.cells[vid])
            nodes[vid] = node
        out = {"root": self.ids[self.root], "nodes": nodes}
        if self.explicit_order:
            out["leaf_order"] = self.leaf_ids()
        return out

    @classmethod
    def from_dict(cls, data) -> "OrderedMergeTree":
        if not isinstance(data, dict):
            raise TreeFormatError("tree JSON must be an object")
        if "root" not in data:
            raise TreeFormatError("missing field 'root'")
        if "nodes" not in data or not isinstance(data["nodes"], dict):
            raise TreeFormatError("missing or malformed field 'nodes'")
        heights, children, cells = {}, {}, {}
        for vid, node in data["nodes"].items():
            if not isinstance(node, dict) or "height" not in node:
                raise TreeFormatError(f"node {vid!r} has no height")
            h = node["height"]
            if isinstance(h, bool) or not isinstance(h, (int, float)):
                raise TreeFormatError(f"node {vid!r} has non-numeric height {h!r}")
            heights[vid] = float(h)
            kids = node.get("children") or []
            if not isinstance(kids, list) or not all(isinstance(c, str) for c in kids):
                raise TreeFormatError(f"node {vid!r} has malformed children")
            children[vid] = kids
            if "cell" in node:
                cells[vid] = tuple(int(x) for x in node["cell"])
        return cls(heights, children, str(data["root"]), data.get("leaf_order"), cells)

    def with_children(self, children: Mapping[str, Sequence[str]]) -> "OrderedMergeTree":
        """Copy of this tree with reordered children (leaf order follows)."""
        heights = dict(zip(self.ids, self.height))
        return OrderedMergeTree(heights, children, self.ids[self.root], cells=self.cells)


def tree_from_nested(nested, prefix="v") -> OrderedMergeTree:
    """Build a tree from nested ``(id, height, [children...])`` tuples."""
    heights, children = {}, {}

    def walk(node):
        vid, h, kids = node
        heights[vid] = h
        children[vid] = [walk(k) for k in kids]
        return vid

    root = walk(nested)
    return OrderedMergeTree(heights, children, root)


# -- validation ------------------------------------------------------------------


def validate_tree(t: OrderedMergeTree) -> list:
    """Return the list of merge-tree invariant violations (empty if valid)."""
    out = []
    for v, vid in enumerate(t.ids):
        h = t.height[v]
        if not math.isfinite(h):
            out.append(Violation("height", vid, f"non-finite height {h}"))
    for v, vid in enumerate(t.ids):
        p = t.parent[v]
        if p >= 0 and not t.height[p] > t.height[v]:
            out.append(Violation(
                "strictness", f"edge {vid}–{t.ids[p]}",
                f"parent height {t.height[p]} is not above {t.height[v]}"))
        if len(t.children[v]) == 1:
            out.append(Violation("degree", vid, "internal vertex with a single child"))
    out.extend(_order_violations(t))
    return out


def _order_violations(t: OrderedMergeTree) -> list:
    if not t.explicit_order:
        return []  # a child-order induced leaf order always keeps subtrees contiguous
    out, seen = [], set()
    leaves = t.leaves
    for v in range(len(t.ids)):
        lo, hi = t.lo_rank[v], t.hi_rank[v]
        count = t.hi_rank[v] - t.lo_rank[v] + 1
        n_desc = _count_leaves(t, v)
        if n_desc == count:
            continue
        for r in range(lo + 1, hi):
            if not t.is_descendant(leaves[r], v):
                x1, x2, x3 = leaves[lo], leaves[r], leaves[hi]
                key = (x1, x2, x3)
                if key in seen:
                    break
                seen.add(key)
                w = t.lca_vertex(x1, x3)
                out.append(Violation(
                    "order", f"leaves ({t.ids[x1]}, {t.ids[x2]}, {t.ids[x3]})",
                    f"{t.ids[x2]} is not in the subtree of lca({t.ids[x1]}, {t.ids[x3]}) = {t.ids[w]}"))
                break
    if not out and list(t.leaves) != list(t.dfs_leaves):
        out.append(Violation("child-order", t.ids[t.root],
                             "children order does not induce the given leaf order"))
    return out


def _count_leaves(t, v):
    n, stack = 0, [v]
    while stack:
        u = stack.pop()
        if t.children[u]:
            stack.extend(t.children[u])
        else:
            n += 1
    return n


# -- point arithmetic ------------------------------------------------------------


def ancestor_at_height(t: OrderedMergeTree, p: TreePoint, h: float) -> TreePoint:
    """The unique point at height ``h`` on the path from ``p`` to the root."""
    v = t.point_index(p)
    if h < p.height:
        raise ValueError(f"target height {h} is below the point height {p.height}")
    return TreePoint(t.ids[t.up(v, h)], h)


def is_ancestor(t: OrderedMergeTree, a: TreePoint, p: TreePoint) -> bool:
    """Whether ``a`` lies on the path from ``p`` to the root."""
    if a.height < p.height:
        return False
    return ancestor_at_height(t, p, a.height) == a


def lca(t: OrderedMergeTree, u: TreePoint, v: TreePoint) -> TreePoint:
    a, b = t.point_index(u), t.point_index(v)
    w = t.lca_vertex(a, b)
    if a == b:
        return u if u.height >= v.height else v
    if w == a:
        return u
    if w == b:
        return v
    return TreePoint(t.ids[w], t.height[w])


def points_at_height(t: OrderedMergeTree, h: float) -> list:
    """Vertex indices of the edges crossing height ``h``, in ≤_h order."""
    pts = [v for v in range(len(t.ids)) if t.height[v] <= h < t.top[v]]
    pts.sort(key=t.lo_rank.__getitem__)
    return pts


def order_at_height(t: OrderedMergeTree, h: float) -> list:
    """All points of ``t`` at height ``h``, ordered left to right."""
    return [TreePoint(t.ids[v], h) for v in points_at_height(t, h)]


def compare_at_height(t: OrderedMergeTree, p: TreePoint, q: TreePoint) -> int:
    """-1, 0 or 1 as p is left of, equal to or right of q (same height)."""
    if p.height != q.height:
        raise ValueError("points must share a height")
    a, b = t.point_index(p), t.point_index(q)
    if a == b:
        return 0
    return -1 if t.lo_rank[a] < t.lo_rank[b] else 1


# -- I/O -------------------------------------------------------------------------


def read_tree(data: bytes | str, validate: bool = True) -> OrderedMergeTree:
    try:
        raw = json.loads(data)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise TreeFormatError(f"invalid JSON: {exc}") from exc
    t = OrderedMergeTree.from_dict(raw)
    if validate:
        bad = validate_tree(t)
        if bad:
            raise TreeValidationError(bad)
    return t


def write_tree(t: OrderedMergeTree) -> bytes:
    return (json.dumps(t.to_dict(), sort_keys=True, indent=2) + "\n").encode()
