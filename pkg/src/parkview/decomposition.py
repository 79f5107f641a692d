"""Path decompositions of a merge tree and the heavy path-branch decomposition.

A path decomposition is fixed by choosing one *through* child per internal
vertex; the path arriving via that child continues upward, all others end.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np

from .interleaving import (
    INF,
    Interleaving,
    InvariantError,
    ShiftMap,
    branch_of_path,
    branches_of_paths,
    edge_weights,
)
from .mergetree import OrderedMergeTree, Path


class PathDecomposition:
    """Paths of ``tree`` induced by a through-child choice.

    ``through`` maps internal vertex index -> child index.  ``paths`` are in
    leaf order, ``path_of[v]`` is the index of the path containing edge v.
    """

    def __init__(self, tree: OrderedMergeTree, through):
        self.tree = tree
        self.through = dict(through)
        t = tree
        through = self.through
        for v in range(len(t)):
            kids = t.children[v]
            if kids and through.get(v) not in kids:
                raise ValueError(f"vertex {t.ids[v]!r} needs a through edge among its children")
        path_of = self.path_of = [-1] * len(t)
        parent = t.parent
        paths = []
        for leaf in t.leaves:
            verts = [leaf]
            v = leaf
            k = len(paths)
            path_of[leaf] = k
            while True:
                p = parent[v]
                if p < 0:
                    top = None
                    break
                if through[p] != v:
                    top = p
                    break
                v = p
                verts.append(v)
                path_of[v] = k
            paths.append((tuple(verts), top))
        self._paths = paths
        self._path_objs = None

    @property
    def paths(self) -> list:
        if self._path_objs is None:
            ids = self.tree.ids
            self._path_objs = [Path(tuple(ids[u] for u in vs), None if top is None else ids[top])
                               for vs, top in self._paths]
        return self._path_objs

    def __len__(self):
        return len(self._paths)

    def path_vertices(self, k: int) -> tuple:
        """Vertex indices of path k, bottom first."""
        return self._paths[k][0]

    def path_top(self, k: int) -> int:
        """Index of the top vertex of path k, -1 for the path up the root edge."""
        top = self._paths[k][1]
        return -1 if top is None else top

    def column_of(self, edge_id: str) -> int:
        return self.path_of[self.tree.index[edge_id]]

    def through_ids(self) -> dict:
        t = self.tree
        return {t.ids[v]: t.ids[c] for v, c in sorted(self.through.items())}


@dataclass
class PathBranchDecomposition:
    """Heavy decompositions for both maps of an interleaving.

    ``alpha_paths`` decomposes alpha's target (the second tree), with one
    branch of the first tree per path; ``beta_paths`` is the mirror image.
    """

    alpha_paths: PathDecomposition
    alpha_branches: list
    beta_paths: PathDecomposition
    beta_branches: list
    alpha_debug: dict
    beta_debug: dict


def heavy_decomposition(m: ShiftMap):
    """Heavy path decomposition of m's target with its branches.

    At every internal vertex the child edge of maximum weight continues the
    path.  Ties go to the child whose path so far has the lowest active start
    (lowest image height on it), then to the leftmost child.

    Returns (PathDecomposition, branches, debug) where ``debug`` maps each
    internal vertex id to its chosen child and all candidate weights.
    """
    m.require_valid()
    t = m.target
    weights = edge_weights(m)
    d = m.delta
    low_edge = [INF] * len(t)
    for p in m.pieces:
        h = p.slo + d
        if h < low_edge[p.w]:
            low_edge[p.w] = h
    low_path = low_edge[:]
    through = {}
    children = t.children
    for v in t.postorder:
        kids = children[v]
        if not kids:
            continue
        c = kids[0]
        key = (-weights[c], low_path[c])
        for k in kids[1:]:
            kk = (-weights[k], low_path[k])
            if kk < key:
                c, key = k, kk
        through[v] = c
        if low_path[c] < low_path[v]:
            low_path[v] = low_path[c]
    pd = PathDecomposition(t, through)
    branches = branches_of_paths(m, pd.path_of, pd.paths)
    return pd, branches, HeavyDebug(t, through, weights)


class HeavyDebug:
    """Chosen through edge and candidate weights per internal vertex."""

    def __init__(self, tree, through, weights):
        self.tree, self.through, self.weights = tree, through, weights

    def to_dict(self) -> dict:
        t, w = self.tree, self.weights
        return {
            t.ids[v]: {"through": t.ids[c], "weights": {t.ids[k]: w[k] for k in t.children[v]}}
            for v, c in self.through.items()
        }

    def __getitem__(self, vid):
        return self.to_dict()[vid]


def dump_debug(debug) -> bytes:
    if isinstance(debug, HeavyDebug):
        debug = debug.to_dict()
    return (json.dumps(debug, sort_keys=True, indent=2) + "\n").encode()


def path_branch_decomposition(i: Interleaving) -> PathBranchDecomposition:
    ap, ab, ad = heavy_decomposition(i.alpha)
    bp, bb, bd = heavy_decomposition(i.beta)
    return PathBranchDecomposition(ap, ab, bp, bb, ad, bd)


def enumerate_all_decompositions(t: OrderedMergeTree, max_internal: int = 12):
    """Yield every path decomposition of ``t`` exactly once."""
    internal = [v for v in range(len(t)) if t.children[v]]
    if len(internal) > max_internal:
        raise ValueError(f"{len(internal)} internal vertices exceed the limit of {max_internal}")
    for choice in itertools.product(*(t.children[v] for v in internal)):
        yield PathDecomposition(t, zip(internal, choice))


def decomposition_cost(m: ShiftMap, d: PathDecomposition):
    """(total, max) number of branch components over the paths of ``d``.

    Counted from the branches themselves and cross-checked against the sum of
    non-through child weights per vertex.
    """
    sizes = [branch_of_path(m, p).size for p in d.paths]
    total = sum(sizes)
    t = m.target
    w = edge_weights(m)
    via_weights = w[t.root]
    for v, c in d.through.items():
        via_weights += sum(w[k] for k in t.children[v] if k != c)
    if via_weights != total:
        raise InvariantError(f"branch sizes sum to {total} but vertex costs sum to {via_weights}")
    return total, max(sizes)


# -- vectorised brute force ------------------------------------------------------


@dataclass
class DecompositionTable:
    """Every decomposition of one tree shape as sets of candidate paths.

    A candidate path is a leaf together with how far up it runs.  ``member``
    is (candidates x edges), ``decomp`` is (decompositions x candidates).
    """

    member: np.ndarray
    decomp: np.ndarray
    candidates: list


def decomposition_table(t: OrderedMergeTree, max_internal: int = 12) -> DecompositionTable:
    internal = [v for v in range(len(t)) if t.children[v]]
    if len(internal) > max_internal:
        raise ValueError(f"{len(internal)} internal vertices exceed the limit of {max_internal}")
    cand_index = {}
    candidates = []
    rows = []
    parent = t.parent
    for choice in itertools.product(*(t.children[v] for v in internal)):
        through = dict(zip(internal, choice))
        row = []
        for leaf in t.leaves:
            verts = [leaf]
            v = leaf
            while parent[v] >= 0 and through[parent[v]] == v:
                v = parent[v]
                verts.append(v)
            key = (tuple(verts), parent[v])
            if key not in cand_index:
                cand_index[key] = len(candidates)
                candidates.append(key)
            row.append(cand_index[key])
        rows.append(row)
    member = np.zeros((len(candidates), len(t)), dtype=np.int64)
    for c, (verts, _) in enumerate(candidates):
        member[c, list(verts)] = 1
    decomp = np.zeros((len(rows), len(candidates)), dtype=np.int64)
    for r, row in enumerate(rows):
        decomp[r, row] = 1
    return DecompositionTable(member, decomp, candidates)


def candidate_sizes(m: ShiftMap, table: DecompositionTable) -> np.ndarray:
    """Branch size of every candidate path, from piece and glue counts.

    Branch pieces form a forest, so components = pieces - glued pairs.
    """
    n = len(m.target)
    pieces = m.pieces
    first_of = m._first_of
    parent = m.source.parent
    ws = [p.w for p in pieces]
    glue = []
    for k, p in enumerate(pieces):
        if not p.ends_at_parent:
            glue.append(p.w * n + ws[k + 1])
        elif parent[p.v] >= 0:
            glue.append(p.w * n + ws[first_of[parent[p.v]]])
    count = np.bincount(ws, minlength=n)
    G = np.bincount(glue, minlength=n * n).reshape(n, n)
    M = table.member
    return M @ count - ((M @ G) * M).sum(axis=1)


def brute_force_optimum(m: ShiftMap, table: DecompositionTable | None = None):
    """Minimum (total, max) branch components over all decompositions."""
    if table is None:
        table = decomposition_table(m.target)
    sizes = candidate_sizes(m, table)
    D = table.decomp
    totals = D @ sizes
    maxes = (D * sizes).max(axis=1)
    return int(totals.min()), int(maxes.min())
