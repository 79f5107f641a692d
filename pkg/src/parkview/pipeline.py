"""Scalar field to merge trees to a monotone interleaving.

Steps: sublevel-set join tree by union-find, persistence simplification,
Hilbert-curve leaf order, Euler tour curves, continuous Fréchet distance of
the two tours, and an interleaving read off a Fréchet matching.
"""
from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

from .interleaving import Interleaving, InvalidMapError, ShiftMap, validate_interleaving
from .mergetree import OrderedMergeTree, TreePoint

try:
    from numba import njit
except ImportError:  # pragma: no cover - pure Python fallback, slow on big trees
    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


class FieldFormatError(ValueError):
    pass


@dataclass
class ScalarField2D:
    rows: int
    cols: int
    values: np.ndarray  # row-major, shape (rows, cols)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.rows, self.cols)
        if not np.all(np.isfinite(self.values)):
            raise FieldFormatError("field contains non-finite values")

    @classmethod
    def from_array(cls, a) -> "ScalarField2D":
        a = np.atleast_2d(np.asarray(a, dtype=float))
        return cls(a.shape[0], a.shape[1], a)


def read_field(text: str) -> ScalarField2D:
    """CSV rows, or a whitespace grid preceded by a ``rows cols`` header line."""
    lines = [ln.strip() for ln in text.strip().splitlines() if ln.strip()]
    if not lines:
        raise FieldFormatError("empty field file")
    try:
        if "," in lines[0]:
            a = np.loadtxt(io.StringIO("\n".join(lines)), delimiter=",", ndmin=2)
            return ScalarField2D.from_array(a)
        head = lines[0].split()
        if len(head) == 2 and all(h.isdigit() for h in head):
            rows, cols = int(head[0]), int(head[1])
            vals = np.array(" ".join(lines[1:]).split(), dtype=float)
            if vals.size != rows * cols:
                raise FieldFormatError(f"header says {rows}x{cols} but found {vals.size} values")
            return ScalarField2D(rows, cols, vals)
        a = np.loadtxt(io.StringIO("\n".join(lines)), ndmin=2)
        return ScalarField2D.from_array(a)
    except ValueError as exc:
        if isinstance(exc, FieldFormatError):
            raise
        raise FieldFormatError(f"cannot parse field: {exc}") from exc


# -- merge tree of sublevel sets -------------------------------------------------


def _neighbours(r, c, rows, cols, connectivity):
    steps = ((-1, 0), (1, 0), (0, -1), (0, 1))
    if connectivity == 8:
        steps += ((-1, -1), (-1, 1), (1, -1), (1, 1))
    for dr, dc in steps:
        rr, cc = r + dr, c + dc
        if 0 <= rr < rows and 0 <= cc < cols:
            yield rr * cols + cc


def merge_tree_from_field(f: ScalarField2D, connectivity: int = 4) -> OrderedMergeTree:
    """Join tree of the sublevel sets of ``f``; leaves are minima.

    Cells are swept by (value, flat index), which breaks ties symbolically.
    Where components meet at a height equal to one of their tops (plateaus),
    the tie is absorbed so heights stay strictly increasing.
    """
    if connectivity not in (4, 8):
        raise ValueError("connectivity must be 4 or 8")
    rows, cols = f.rows, f.cols
    vals = f.values.ravel()
    order = np.lexsort((np.arange(vals.size), vals))
    root = [-1] * vals.size

    def find(a):
        while root[a] != a:
            root[a] = root[root[a]]
            a = root[a]
        return a

    heights, children, cells = {}, {}, {}
    top = {}  # component root -> id of its current top vertex
    for idx in order.tolist():
        r, c = divmod(idx, cols)
        x = float(vals[idx])
        comps = sorted({find(n) for n in _neighbours(r, c, rows, cols, connectivity) if root[n] >= 0})
        root[idx] = idx
        if not comps:
            vid = f"m{r}_{c}"
            heights[vid], children[vid], cells[vid] = x, [], (r, c)
            top[idx] = vid
            continue
        if len(comps) == 1:
            root[idx] = comps[0]
            continue
        kids, dropped = [], []
        for k in comps:
            u = top.pop(k)
            if heights[u] < x:
                kids.append(u)
            elif children[u]:
                kids.extend(children.pop(u))
                del heights[u], cells[u]
            else:
                dropped.append(u)
        if not kids:
            kids, dropped = dropped[:1], dropped[1:]
        for u in dropped:
            del heights[u], children[u], cells[u]
        if len(kids) == 1:
            new_top = kids[0]
        else:
            new_top = f"s{r}_{c}"
            heights[new_top], children[new_top], cells[new_top] = x, kids, (r, c)
        for k in comps:
            root[k] = idx
        top[idx] = new_top
    (last,) = top.values()
    return OrderedMergeTree(heights, children, last, cells=cells)


def local_minima_count(f: ScalarField2D, connectivity: int = 4) -> int:
    """Cells below all their neighbours in (value, index) order."""
    rows, cols = f.rows, f.cols
    vals = f.values.ravel()
    n = 0
    for idx in range(vals.size):
        r, c = divmod(idx, cols)
        key = (vals[idx], idx)
        if all(key < (vals[m], m) for m in _neighbours(r, c, rows, cols, connectivity)):
            n += 1
    return n


# -- persistence simplification --------------------------------------------------


def leaf_persistence(t: OrderedMergeTree) -> dict:
    """Persistence of every leaf under the elder rule (lower, then left, survives)."""
    elder = [None] * len(t)
    pers = {}
    for v in t.postorder:
        kids = t.children[v]
        if not kids:
            elder[v] = v
            continue
        best = min((elder[c] for c in kids), key=lambda l: (t.height[l], t.leaf_rank[l]))
        elder[v] = best
        for c in kids:
            if elder[c] != best:
                pers[elder[c]] = t.height[v] - t.height[elder[c]]
    pers[elder[t.root]] = math.inf
    return pers


def restrict_to_leaves(t: OrderedMergeTree, keep) -> OrderedMergeTree:
    """Subtree spanned by the leaves in ``keep``, with degree-2 vertices removed."""
    keep = set(keep)
    top = [None] * len(t)
    heights, children = {}, {}
    for v in t.postorder:
        if not t.children[v]:
            if v in keep:
                top[v] = v
                heights[t.ids[v]] = t.height[v]
                children[t.ids[v]] = []
            continue
        live = [top[c] for c in t.children[v] if top[c] is not None]
        if len(live) == 1:
            top[v] = live[0]
        elif len(live) > 1:
            top[v] = v
            heights[t.ids[v]] = t.height[v]
            children[t.ids[v]] = [t.ids[u] for u in live]
    cells = {k: c for k, c in t.cells.items() if k in heights}
    return OrderedMergeTree(heights, children, t.ids[top[t.root]], cells=cells)


def simplify(t: OrderedMergeTree, threshold: float) -> OrderedMergeTree:
    """Drop every leaf whose persistence is below ``threshold``.

    Removing a young leaf never changes the persistence of the others, so
    all removals happen at once.  The oldest leaf always survives.
    """
    if threshold <= 0:
        return t
    pers = leaf_persistence(t)
    return restrict_to_leaves(t, [v for v, p in pers.items() if p >= threshold])


# -- leaf order ------------------------------------------------------------------


def hilbert_index(n: int, x: int, y: int) -> int:
    """Position of cell (x, y) along the Hilbert curve filling an n x n grid."""
    d = 0
    s = n // 2
    while s > 0:
        rx = 1 if x & s else 0
        ry = 1 if y & s else 0
        d += s * s * ((3 * rx) ^ ry)
        if ry == 0:
            if rx == 1:
                x = n - 1 - x
                y = n - 1 - y
            x, y = y, x
        s //= 2
    return d


def order_leaves(t: OrderedMergeTree, field: ScalarField2D, curve: str = "hilbert") -> OrderedMergeTree:
    """Reorder children by the smallest Hilbert index among their leaves."""
    if curve != "hilbert":
        raise ValueError(f"unknown curve {curve!r}")
    n = 1
    while n < max(field.rows, field.cols):
        n *= 2
    key = [0] * len(t)
    for v in t.postorder:
        if t.children[v]:
            key[v] = min(key[c] for c in t.children[v])
        else:
            cell = t.cells.get(t.ids[v])
            if cell is None:
                raise ValueError(f"leaf {t.ids[v]!r} has no grid position")
            r, c = cell
            key[v] = hilbert_index(n, c, r)
    children = {t.ids[v]: [t.ids[c] for c in sorted(t.children[v], key=key.__getitem__)]
                for v in range(len(t))}
    return t.with_children(children)


# -- tours and Fréchet distance --------------------------------------------------


def euler_tour(t: OrderedMergeTree, cap: float | None = None) -> np.ndarray:
    """Heights [cap, l1, lca(l1,l2), l2, ..., lk, cap] of the in-order tour.

    ``cap`` defaults to the root height.  Segment j of the curve hangs from
    leaf number j // 2.
    """
    if cap is None:
        cap = t.height[t.root]
    leaves = t.leaves
    out = [cap]
    for r, v in enumerate(leaves):
        out.append(t.height[v])
        if r + 1 < len(leaves):
            out.append(t.height[t.lca_vertex(v, leaves[r + 1])])
    out.append(cap)
    return np.array(out, dtype=float)


@njit(cache=True)
def _free(p, a, b, eps):
    """Parameters u in [0, 1] with |a + u (b - a) - p| <= eps, as (lo, hi); lo > hi if empty."""
    if a == b:
        if abs(a - p) <= eps:
            return 0.0, 1.0
        return 2.0, -1.0
    u1 = (p - eps - a) / (b - a)
    u2 = (p + eps - a) / (b - a)
    lo = min(u1, u2)
    hi = max(u1, u2)
    if lo < 0.0:
        lo = 0.0
    if hi > 1.0:
        hi = 1.0
    if lo > hi:
        return 2.0, -1.0
    return lo, hi


@njit(cache=True)
def _reach(P, Q, eps, keep):
    """Alt-Godau reachability.  Returns (ok, RL, RB).

    RL[i, j] is the reachable part of line s = i over Q segment j, RB[j, i]
    the reachable part of line u = j over P segment i (local parameters).
    Full tables are only filled when ``keep`` is set.
    """
    n = P.size - 1
    m = Q.size - 1
    if keep:
        RL = np.empty((n + 1, m, 2))
        RB = np.empty((m + 1, n, 2))
    else:
        RL = np.empty((1, 1, 2))
        RB = np.empty((1, 1, 2))
    L = np.empty((m, 2))
    B0 = np.empty((n, 2))
    if abs(P[0] - Q[0]) > eps or abs(P[n] - Q[m]) > eps:
        return False, RL, RB
    ok = True
    for j in range(m):
        lo, hi = _free(P[0], Q[j], Q[j + 1], eps)
        if ok and lo <= 0.0 and lo <= hi:
            L[j, 0] = 0.0
            L[j, 1] = hi
            ok = hi >= 1.0
        else:
            L[j, 0] = 2.0
            L[j, 1] = -1.0
            ok = False
        if keep:
            RL[0, j, 0] = L[j, 0]
            RL[0, j, 1] = L[j, 1]
    ok = True
    for i in range(n):
        lo, hi = _free(Q[0], P[i], P[i + 1], eps)
        if ok and lo <= 0.0 and lo <= hi:
            B0[i, 0] = 0.0
            B0[i, 1] = hi
            ok = hi >= 1.0
        else:
            B0[i, 0] = 2.0
            B0[i, 1] = -1.0
            ok = False
        if keep:
            RB[0, i, 0] = B0[i, 0]
            RB[0, i, 1] = B0[i, 1]
    for i in range(n):
        blo = B0[i, 0]
        bhi = B0[i, 1]
        for j in range(m):
            llo = L[j, 0]
            lhi = L[j, 1]
            rlo, rhi = _free(P[i + 1], Q[j], Q[j + 1], eps)
            tlo, thi = _free(Q[j + 1], P[i], P[i + 1], eps)
            # right side of the cell
            if blo <= bhi:
                nlo, nhi = rlo, rhi
            elif llo <= lhi:
                nlo, nhi = max(rlo, llo), rhi
            else:
                nlo, nhi = 2.0, -1.0
            # top side of the cell
            if llo <= lhi:
                olo, ohi = tlo, thi
            elif blo <= bhi:
                olo, ohi = max(tlo, blo), thi
            else:
                olo, ohi = 2.0, -1.0
            if nlo > nhi:
                nlo, nhi = 2.0, -1.0
            if olo > ohi:
                olo, ohi = 2.0, -1.0
            L[j, 0] = nlo
            L[j, 1] = nhi
            blo, bhi = olo, ohi
            if keep:
                RL[i + 1, j, 0] = nlo
                RL[i + 1, j, 1] = nhi
                RB[j + 1, i, 0] = olo
                RB[j + 1, i, 1] = ohi
    return L[m - 1, 0] <= L[m - 1, 1] and L[m - 1, 1] >= 1.0, RL, RB


def _slack(P, Q) -> float:
    scale = max(1.0, float(np.max(np.abs(P))), float(np.max(np.abs(Q))))
    return 1e-12 * scale


def frechet_decide(P, Q, eps: float) -> bool:
    """Is the Fréchet distance of the 1D curves P and Q at most eps?"""
    P = np.asarray(P, dtype=float)
    Q = np.asarray(Q, dtype=float)
    if P.size == 1 or Q.size == 1:
        return float(np.max(np.abs(P[:, None] - Q[None, :]))) <= eps
    return bool(_reach(P, Q, eps + _slack(P, Q), False)[0])


def _candidates(P, Q) -> np.ndarray:
    """Every value the Fréchet distance of two 1D polylines can take."""
    pu = np.unique(P)
    qu = np.unique(Q)
    parts = [np.abs(pu[:, None] - qu[None, :]).ravel()]
    for u in (pu, qu):
        if u.size > 1:
            iu = np.triu_indices(u.size, 1)
            parts.append(np.abs(u[iu[0]] - u[iu[1]]) / 2)
    return np.unique(np.concatenate(parts))


def frechet_delta(c1, c2) -> float:
    """Continuous Fréchet distance between two piecewise-linear 1D curves.

    For 1D curves the distance is a vertex-vertex gap or half a gap between
    two vertices of one curve; we binary search that finite candidate set
    with the free-space decision procedure.
    """
    P = np.asarray(c1, dtype=float)
    Q = np.asarray(c2, dtype=float)
    if P.size == 1 or Q.size == 1:
        return float(np.max(np.abs(P[:, None] - Q[None, :])))
    lo_bound = max(abs(P[0] - Q[0]), abs(P[-1] - Q[-1]))
    if frechet_decide(P, Q, lo_bound):
        return float(lo_bound)
    cand = _candidates(P, Q)
    cand = cand[cand > lo_bound]
    lo, hi = 0, cand.size - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if frechet_decide(P, Q, float(cand[mid])):
            hi = mid
        else:
            lo = mid + 1
    return float(cand[lo])


def frechet_matching(c1, c2, eps: float) -> np.ndarray:
    """A monotone path (s, u) through the free space at ``eps``.

    Returned as an (k, 2) array of parameter pairs from (0, 0) to (n, m);
    every integer s and every integer u appears on some vertex of the path.
    """
    P = np.asarray(c1, dtype=float)
    Q = np.asarray(c2, dtype=float)
    n, m = P.size - 1, Q.size - 1
    if n == 0 or m == 0:
        if n == 0:
            return np.array([[0.0, float(j)] for j in range(m + 1)])
        return np.array([[float(i), 0.0] for i in range(n + 1)])
    ok, RL, RB = _reach(P, Q, eps + _slack(P, Q), True)
    if not ok:
        raise ValueError(f"no matching at distance {eps}")
    return _backtrack(RL, RB, n, m)


@njit(cache=True)
def _step_back(RL, RB, i, j, ls, lu):
    """Predecessor of local point (ls, lu) in cell (i, j), or (-1, -1)."""
    llo, lhi = RL[i, j, 0], RL[i, j, 1]
    blo, bhi = RB[j, i, 0], RB[j, i, 1]
    if llo <= lhi and llo <= lu and ls > 0.0:
        return float(i), j + min(lu, lhi)
    if blo <= bhi and blo <= ls and lu > 0.0:
        return i + min(ls, bhi), float(j)
    return -1.0, -1.0


@njit(cache=True)
def _backtrack(RL, RB, n, m):
    out = np.empty((2 * (n + m) + 4, 2))
    k = 0
    s = float(n)
    u = float(m)
    out[k, 0] = s
    out[k, 1] = u
    k += 1
    while s > 0.0 or u > 0.0:
        if s == 0.0:
            # along the start lines every vertex is reachable by continuity
            u = float(int(math.ceil(u)) - 1)
        elif u == 0.0:
            s = float(int(math.ceil(s)) - 1)
        else:
            fs = math.floor(s)
            fu = math.floor(u)
            ns, nu = -1.0, -1.0
            if fs != s:
                ns, nu = _step_back(RL, RB, int(fs), int(u) - 1, s - fs, 1.0)
            elif fu != u:
                ns, nu = _step_back(RL, RB, int(s) - 1, int(fu), 1.0, u - fu)
            else:
                # a cell corner: try the three cells it closes
                si, ui = int(s), int(u)
                ns, nu = _step_back(RL, RB, si - 1, ui - 1, 1.0, 1.0)
                if ns < 0.0 and ui < m:
                    ns, nu = _step_back(RL, RB, si - 1, ui, 1.0, 0.0)
                if ns < 0.0 and si < n:
                    ns, nu = _step_back(RL, RB, si, ui - 1, 0.0, 1.0)
            if ns < 0.0 or (ns == s and nu == u):
                return out[:0]
            s, u = ns, nu
        if k == out.shape[0]:
            bigger = np.empty((2 * k, 2))
            bigger[:k] = out
            out = bigger
        out[k, 0] = s
        out[k, 1] = u
        k += 1
    return out[:k][::-1].copy()


def _vertex_partners(path, axis, count):
    """For each integer value 0..count on ``axis``, the other coordinate where the path first meets it."""
    other = 1 - axis
    res = np.full(count + 1, -1.0)
    for a, b in path:
        pt = (a, b)
        x = pt[axis]
        if x == int(x) and res[int(x)] < 0:
            res[int(x)] = pt[other]
    if np.any(res < 0):
        raise ValueError("matching path skips a curve vertex")
    return res


def _segment_leaf(param: float, n_segments: int) -> int:
    j = min(int(math.floor(param)), n_segments - 1)
    return j // 2


def interleaving_from_matching(t1: OrderedMergeTree, t2: OrderedMergeTree, path, delta: float) -> Interleaving:
    """Shift maps read off a tour matching; validated before returning.

    Leaf r of t1 sits at tour vertex 2r+1.  It is matched to a parameter on
    t2's tour, whose segment hangs from some leaf of t2; the image is that
    leaf's ancestor at the shifted height.  The same holds the other way.
    """
    n = 2 * t1.n_leaves
    m = 2 * t2.n_leaves
    path = np.asarray(path, dtype=float)
    u_of = _vertex_partners(path, 0, n)
    s_of = _vertex_partners(path, 1, m)

    def images(src, dst, partner, n_dst):
        out = {}
        for r, v in enumerate(src.leaves):
            h = src.height[v] + delta
            leaf = dst.leaves[_segment_leaf(partner[2 * r + 1], n_dst)]
            out[src.ids[v]] = TreePoint(dst.ids[dst.up(leaf, h)], h)
        return out

    alpha = ShiftMap(t1, t2, delta, images(t1, t2, u_of, m))
    beta = ShiftMap(t2, t1, delta, images(t2, t1, s_of, n))
    il = Interleaving(alpha, beta)
    bad = validate_interleaving(il)
    if bad:
        raise InvalidMapError(bad)
    return il


def common_cap(t1: OrderedMergeTree, t2: OrderedMergeTree) -> float:
    return max(t1.height[t1.root], t2.height[t2.root])


def delta_margin(d: float, scale: float) -> float:
    """Interleaving height used for a Fréchet distance d: d rounded up a hair."""
    if d == 0:
        return 0.0
    return d + max(1e-9, 1e-12 * scale)


def interleaving_from_trees(t1: OrderedMergeTree, t2: OrderedMergeTree):
    """Monotone interleaving between two ordered trees via their tours.

    Returns (interleaving, frechet distance).
    """
    cap = common_cap(t1, t2)
    P = euler_tour(t1, cap)
    Q = euler_tour(t2, cap)
    d = frechet_delta(P, Q)
    path = frechet_matching(P, Q, d)
    scale = max(np.max(np.abs(P)), np.max(np.abs(Q)), 1.0)
    il = interleaving_from_matching(t1, t2, path, delta_margin(d, scale))
    return il, d


def field_to_tree(f: ScalarField2D, persistence: float = 0.0, connectivity: int = 4) -> OrderedMergeTree:
    t = merge_tree_from_field(f, connectivity)
    t = simplify(t, persistence)
    return order_leaves(t, f)


@dataclass
class Comparison:
    tree_a: OrderedMergeTree
    tree_b: OrderedMergeTree
    interleaving: Interleaving
    frechet: float

    @property
    def delta(self) -> float:
        return self.interleaving.delta


def compare_fields(fa: ScalarField2D, fb: ScalarField2D, persistence: float = 0.0,
                   connectivity: int = 4) -> Comparison:
    ta = field_to_tree(fa, persistence, connectivity)
    tb = field_to_tree(fb, persistence, connectivity)
    il, d = interleaving_from_trees(ta, tb)
    return Comparison(ta, tb, il, d)
