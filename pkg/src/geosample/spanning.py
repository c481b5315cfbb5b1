"""Spanning structures with low crossing number over canonical lines.

Builds, in order of dependency: exact Tukey regions D_k (intersection of all
closed halfplanes containing >= n-k points), pocket covers of P \\ D_k by
openly disjoint triangles holding <= 2k points each, shallow spanning trees
of P \\ D_k, and the layered spanning tree whose crossing number against a
line of weight w is O(sqrt(w) log(n/w)) instead of the uniform O(sqrt(n)).

Region arithmetic is exact rational throughout; the multiplicative-weights
tree builder is the only floating-point component (weights only, never
geometry).
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from fractions import Fraction
from functools import cmp_to_key
from typing import Optional, Sequence, Tuple

import numpy as np

from . import _kernels
from .geometry import Halfplane, PointSet
from .rng import substream

try:
    from gmpy2 import mpq as _R
except ImportError:  # pragma: no cover
    _R = Fraction

__all__ = [
    "Tree",
    "Matching",
    "TukeyRegion",
    "PocketCover",
    "PlaneCrossingReport",
    "line_weight",
    "welzl_tree",
    "tukey_region",
    "pocket_cover",
    "shallow_tree",
    "relative_crossing_tree",
    "tree_to_matching",
    "paraboloid_counterexample",
    "crossing_stats",
    "write_edge_list",
    "read_edge_list",
]


# ---------------------------------------------------------------------------
# domain types


@dataclass(frozen=True)
class Tree:
    """Spanning tree as an edge list over PointSet indices."""

    edges: tuple
    root: Optional[int] = None

    def __post_init__(self):
        object.__setattr__(
            self, "edges", tuple((min(u, v), max(u, v)) for u, v in self.edges)
        )

    @property
    def nodes(self) -> set:
        out = set()
        for u, v in self.edges:
            out.add(u)
            out.add(v)
        return out


@dataclass(frozen=True)
class Matching:
    """Perfect matching as disjoint index pairs."""

    pairs: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "pairs", tuple((min(u, v), max(u, v)) for u, v in self.pairs)
        )
        seen = set()
        for u, v in self.pairs:
            if u == v or u in seen or v in seen:
                raise ValueError("matching pairs must be disjoint")
            seen.add(u)
            seen.add(v)


@dataclass(frozen=True)
class TukeyRegion:
    """Intersection of all closed halfplanes containing >= n-k points.

    polygon: CCW tuple of exact rational vertices; () is the empty region;
    one vertex is a point, two a segment.  whole_plane marks the k >= n
    sentinel, where every halfplane qualifies vacuously... none do, so the
    intersection is the entire plane.
    """

    k: int
    polygon: tuple
    whole_plane: bool = False

    @property
    def is_empty(self) -> bool:
        return not self.whole_plane and len(self.polygon) == 0

    def contains(self, p) -> bool:
        if self.whole_plane:
            return True
        m = len(self.polygon)
        if m == 0:
            return False
        if m == 1:
            return self.polygon[0][0] == p[0] and self.polygon[0][1] == p[1]
        if m == 2:
            return _on_segment(p, self.polygon[0], self.polygon[1])
        for i in range(m):
            u = self.polygon[i]
            v = self.polygon[(i + 1) % m]
            if _cross(v[0] - u[0], v[1] - u[1], p[0] - u[0], p[1] - u[1]) < 0:
                return False
        return True


@dataclass(frozen=True)
class PocketCover:
    """Triangles covering P \\ D_k, each touching the Tukey boundary.

    triangles: convex CCW polygons (unbounded pieces clipped to a box about
    4x the point extent, which cannot change any point/line incidence).
    levels[i] = floor(log2 weight_i) where the weight of a piece cut off by
    a split is the point count of the pocket that was split, and the weight
    of a terminal pocket is its own count.  members[i] are the P-indices
    assigned to triangle i; anchors[i] is a Tukey-polygon vertex index where
    the triangle touches the boundary, used to order triangles along it.
    """

    triangles: tuple
    levels: tuple
    members: tuple
    anchors: tuple
    tukey: TukeyRegion


@dataclass(frozen=True)
class PlaneCrossingReport:
    """Per-plane counts of parts whose projected extent straddles the plane."""

    planes: tuple  # ("x" | "y", c) for the plane axis = c + 1/2
    crossed: tuple

    @property
    def max_crossings(self) -> int:
        return max(self.crossed, default=0)


# ---------------------------------------------------------------------------
# exact rational primitives


def _cross(ax, ay, bx, by):
    return ax * by - ay * bx


def _sign(v) -> int:
    return (v > 0) - (v < 0)


def _on_segment(p, u, v) -> bool:
    if _cross(v[0] - u[0], v[1] - u[1], p[0] - u[0], p[1] - u[1]) != 0:
        return False
    lox, hix = (u[0], v[0]) if u[0] <= v[0] else (v[0], u[0])
    loy, hiy = (u[1], v[1]) if u[1] <= v[1] else (v[1], u[1])
    return lox <= p[0] <= hix and loy <= p[1] <= hiy


def _ring_area2(ring):
    s = 0
    for i in range(len(ring)):
        u = ring[i]
        v = ring[(i + 1) % len(ring)]
        s += u[0] * v[1] - u[1] * v[0]
    return s


def _clip_ring(ring, a, b, c):
    """Sutherland-Hodgman: keep a*x + b*y <= c, exact; on-line points kept."""
    out = []
    m = len(ring)
    if m == 0:
        return out
    vals = [a * p[0] + b * p[1] - c for p in ring]
    for i in range(m):
        p, vp = ring[i], vals[i]
        q, vq = ring[(i + 1) % m], vals[(i + 1) % m]
        if vp <= 0:
            out.append(p)
        if (vp < 0 < vq) or (vq < 0 < vp):
            t = _R(vp) / (vp - vq)
            out.append((p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])))
    ded = []
    for p in out:
        if not ded or p != ded[-1]:
            ded.append(p)
    if len(ded) > 1 and ded[0] == ded[-1]:
        ded.pop()
    return ded


def _split_components(ring):
    """Split a weakly simple ring into simple positive-area sub-rings.

    Clipping a pocket by a line through a base vertex produces a ring pinched
    at that vertex: the vertex lies in the interior of the synthetic edge the
    clip introduced, or appears twice.  Insert such vertices into the edges
    they touch, then cut at repeated vertices.
    """
    ring = list(ring)
    changed = True
    while changed:
        changed = False
        m = len(ring)
        for i in range(m):
            u, v = ring[i], ring[(i + 1) % m]
            if u == v:
                continue
            for p in ring:
                if p != u and p != v and _on_segment(p, u, v):
                    ring.insert(i + 1, p)
                    changed = True
                    break
            if changed:
                break
    comps = []
    stack = [ring]
    while stack:
        r = stack.pop()
        pos = {}
        dup = None
        for i, p in enumerate(r):
            if p in pos:
                dup = (pos[p], i)
                break
            pos[p] = i
        if dup is None:
            if len(r) >= 3 and _ring_area2(r) > 0:
                comps.append(r)
            continue
        i, j = dup
        stack.append(r[i:j])
        stack.append(r[j:] + r[:i])
    return comps


def _point_in_ring(p, ring) -> bool:
    """Closed containment in a (possibly concave) simple ring, exact."""
    m = len(ring)
    for i in range(m):
        if _on_segment(p, ring[i], ring[(i + 1) % m]):
            return True
    inside = False
    px, py = p[0], p[1]
    for i in range(m):
        u, v = ring[i], ring[(i + 1) % m]
        if (u[1] > py) != (v[1] > py):
            # x-coordinate of the edge at height py, compared exactly
            lhs = (v[0] - u[0]) * (py - u[1])
            rhs = (px - u[0]) * (v[1] - u[1])
            if v[1] > u[1]:
                hit = lhs > rhs
            else:
                hit = lhs < rhs
            if hit:
                inside = not inside
    return inside


def _hull_ring(points):
    """Monotone chain on exact rational points; CCW, >= 1 vertex."""
    pts = sorted(set(points))
    if len(pts) <= 2:
        return pts
    lower, upper = [], []
    for p in pts:
        while len(lower) >= 2 and _cross(
            lower[-1][0] - lower[-2][0], lower[-1][1] - lower[-2][1],
            p[0] - lower[-2][0], p[1] - lower[-2][1],
        ) <= 0:
            lower.pop()
        lower.append(p)
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(
            upper[-1][0] - upper[-2][0], upper[-1][1] - upper[-2][1],
            p[0] - upper[-2][0], p[1] - upper[-2][1],
        ) <= 0:
            upper.pop()
        upper.append(p)
    return lower[:-1] + upper[:-1]


def _canon_ring(ring):
    if len(ring) <= 1:
        return tuple(ring)
    k = min(range(len(ring)), key=lambda i: ring[i])
    return tuple(ring[k:] + ring[:k])


def _to_fraction_ring(ring):
    return tuple(
        (Fraction(int(x.numerator), int(x.denominator)),
         Fraction(int(y.numerator), int(y.denominator)))
        for x, y in ((_R(px), _R(py)) for px, py in ring)
    )


# ---------------------------------------------------------------------------
# line weight


def _line_coeffs(line):
    if isinstance(line, Halfplane):
        return line.boundary_coeffs()
    a, b, c = line
    return a, b, c


def line_weight(P: PointSet, line) -> int:
    """min(#points strictly above, #points below or on) for the line.

    The line is (a, b, c) meaning a*x + b*y = c, or a Halfplane's boundary.
    "Above" is the larger-y side (larger-x side for verticals); points on
    the line always count with the below side.
    """
    a, b, c = _line_coeffs(line)
    if a == 0 and b == 0:
        raise ValueError("degenerate line")
    if b < 0 or (b == 0 and a < 0):
        a, b, c = -a, -b, -c
    above = sum(1 for p in P.points if a * p[0] + b * p[1] - c > 0)
    return min(above, len(P) - above)


# ---------------------------------------------------------------------------
# multiplicative-weights spanning tree


def _candidate_edges(P: PointSet):
    n = len(P)
    if n <= 64:
        return [(i, j) for i in range(n) for j in range(i + 1, n)]
    from scipy.spatial import Delaunay

    tri = Delaunay(P.array().astype(float))
    edges = set()
    for simplex in tri.simplices:
        s = sorted(int(v) for v in simplex)
        for i in range(len(s)):
            for j in range(i + 1, len(s)):
                edges.add((s[i], s[j]))
    return sorted(edges)


def _test_signs(P: PointSet, cap: int = 2048) -> np.ndarray:
    """Boolean side matrix (L, n) for a deterministic canonical test set."""
    arr = P.array()
    n = len(P)
    if P.dim == 2:
        ii, jj = np.triu_indices(n, k=1)
        total = len(ii)
        if total > cap:
            pick = substream(0, "welzl", "lines").choice(total, size=cap, replace=False)
            pick.sort()
            ii, jj = ii[pick], jj[pick]
        a = arr[ii, 1] - arr[jj, 1]
        b = arr[jj, 0] - arr[ii, 0]
        c = a * arr[ii, 0] + b * arr[ii, 1]
        vals = a[:, None] * arr[None, :, 0] + b[:, None] * arr[None, :, 1] - c[:, None]
        return vals > 0
    # 3-D: planes through sampled point triples
    total = _kernels.triple_count(n)
    if total > cap:
        rng = substream(0, "welzl", "planes")
        seen = set()
        while len(seen) < cap:
            t = tuple(sorted(int(v) for v in rng.choice(n, size=3, replace=False)))
            seen.add(t)
        trips = np.array(sorted(seen), dtype=np.int64)
    else:
        trips = np.array(
            [(i, j, l) for i in range(n) for j in range(i + 1, n) for l in range(j + 1, n)],
            dtype=np.int64,
        )
    p = arr[trips[:, 0]]
    nv = np.cross(arr[trips[:, 1]] - p, arr[trips[:, 2]] - p)
    off = np.einsum("ij,ij->i", nv, p)
    vals = nv @ arr.T - off[:, None]
    return vals > 0


def welzl_tree(P: PointSet) -> Tree:
    """Spanning tree with about sqrt(n) crossings per canonical line.

    Classical iterative reweighting over a canonical test set: at each step
    add the candidate edge crossing the least total test-line weight between
    two components, then double the weights of the lines it crosses.
    """
    n = len(P)
    if n < 2:
        raise ValueError("need at least 2 points")
    if n == 2:
        return Tree(edges=((0, 1),))
    P.require_general_position()
    signs = _test_signs(P)  # (L, n)
    cand = _candidate_edges(P)
    eu = np.array([e[0] for e in cand])
    ev = np.array([e[1] for e in cand])
    crossed = (signs[:, eu] ^ signs[:, ev]).T  # (E, L)
    xf = crossed.astype(np.float32)
    w = np.ones(signs.shape[0], dtype=np.float64)
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    edges = []
    for _ in range(n - 1):
        cost = xf @ w
        alive = np.fromiter(
            (find(u) != find(v) for u, v in cand), count=len(cand), dtype=bool
        )
        cost[~alive] = np.inf
        e = int(np.argmin(cost))
        u, v = cand[e]
        parent[find(u)] = find(v)
        edges.append((u, v))
        w[crossed[e]] *= 2.0
        mx = w.max()
        if mx > 1e250:
            w /= mx
    return Tree(edges=tuple(edges))


# ---------------------------------------------------------------------------
# Tukey region


def tukey_region(P: PointSet, k: int) -> TukeyRegion:
    """Exact D_k via halfplanes bounded by lines through point pairs.

    Every closed halfplane with >= n-k points can be translated/rotated to
    one bounded by a line through two input points without losing points,
    so the pair-line family realizes the same intersection.
    """
    n = len(P)
    if k < 0:
        raise ValueError("k must be nonnegative")
    if k >= n:
        return TukeyRegion(k=k, polygon=(), whole_plane=True)
    arr = P.array()
    ones = np.ones((1, n), dtype=np.int64)
    ii, jj = np.triu_indices(n, k=1)
    cons = {}  # (a, b, c) reduced, meaning a x + b y <= c -> closed count
    for start, stop, pos, neg in _kernels.pair_chunks(arr, ones, check_gp=False):
        # closed le-count = n - strictly positive; closed ge-count symmetric,
        # so a side qualifies iff the opposite strict count is <= k
        posc = np.asarray([int(v) for v in pos[0]], dtype=np.int64)
        negc = np.asarray([int(v) for v in neg[0]], dtype=np.int64)
        for t in np.nonzero((posc <= k) | (negc <= k))[0]:
            t = int(t)
            i, j = int(ii[start + t]), int(jj[start + t])
            p, q = P.points[i], P.points[j]
            a = p[1] - q[1]
            b = q[0] - p[0]
            c = a * p[0] + b * p[1]
            if posc[t] <= k:
                _add_constraint(cons, a, b, c, n - int(posc[t]))
            if negc[t] <= k:
                _add_constraint(cons, -a, -b, -c, n - int(negc[t]))
    box = P.coord_bound + 1
    state = ("ring", [(_R(-box), _R(-box)), (_R(box), _R(-box)),
                      (_R(box), _R(box)), (_R(-box), _R(box))])
    for (a, b, c), _cnt in sorted(cons.items(), key=lambda kv: (kv[1], kv[0])):
        state = _clip_region(state, a, b, c)
        if state[0] == "empty":
            break
    kind, data = state
    if kind == "empty":
        poly = ()
    elif kind == "ring":
        poly = _canon_ring(data)
    else:
        poly = tuple(sorted(set(map(tuple, data))))
    return TukeyRegion(k=k, polygon=_to_fraction_ring(poly))


def _add_constraint(cons, a, b, c, count):
    g = math.gcd(math.gcd(abs(a), abs(b)), abs(c))
    if g == 0:
        return
    key = (a // g, b // g, c // g)
    prev = cons.get(key)
    if prev is None or count < prev:
        cons[key] = count


def _clip_region(state, a, b, c):
    kind, data = state
    if kind == "empty":
        return state
    if kind == "ring":
        vals = [a * p[0] + b * p[1] - c for p in data]
        if all(v <= 0 for v in vals):
            return state
        ring = _clip_ring(data, a, b, c)
        uniq = sorted(set(ring))
        if len(ring) >= 3 and _ring_area2(ring) > 0:
            return ("ring", ring)
        if not uniq:
            return ("empty", None)
        if len(uniq) == 1:
            return ("flat", uniq)
        return ("flat", [uniq[0], uniq[-1]])
    # flat: one or two collinear points
    pts = [p for p in data]
    vals = [a * p[0] + b * p[1] - c for p in pts]
    if len(pts) == 1:
        return ("flat", pts) if vals[0] <= 0 else ("empty", None)
    u, v = pts
    vu, vv = vals
    if vu <= 0 and vv <= 0:
        return ("flat", pts)
    if vu > 0 and vv > 0:
        return ("empty", None)
    t = _R(vu) / (vu - vv)
    w = (u[0] + t * (v[0] - u[0]), u[1] + t * (v[1] - u[1]))
    keep = u if vu <= 0 else v
    if keep == w:
        return ("flat", [w])
    return ("flat", sorted([keep, w]))


# ---------------------------------------------------------------------------
# pocket cover


class _Pocket:
    __slots__ = ("ring", "base", "members")

    def __init__(self, ring, base, members):
        self.ring = ring        # CCW rational ring
        self.base = base        # D-vertex indices along its boundary arc
        self.members = members  # P indices inside


def pocket_cover(P: PointSet, k: int) -> PocketCover:
    """Cover P \\ D_k by openly disjoint triangles of <= 2k points each.

    Start with the two halfplane pieces beyond the vertical supporting lines
    of D_k and the pockets above and below D_k between them; repeatedly take
    a pocket holding more than 2k points and cut it with a line supporting
    D_k at a pocket base vertex, chosen to balance the two remaining
    sub-pockets (lexicographically smallest vertex on ties).  The cut-off
    piece holds at most 2k points because the cut line avoids the interior
    of D_k.
    """
    n = len(P)
    D = tukey_region(P, k)
    if D.whole_plane:
        return PocketCover((), (), (), (), D)
    if D.is_empty:
        raise ValueError("Tukey region is empty; pockets undefined")
    if len(D.polygon) < 3:
        raise ValueError("degenerate Tukey region; pockets undefined")
    outside = [i for i in range(n) if not D.contains(P.points[i])]
    if not outside:
        return PocketCover((), (), (), (), D)
    dverts = [(_R(x), _R(y)) for x, y in D.polygon]
    m = len(dverts)
    centroid = (
        sum(v[0] for v in dverts) / m,
        sum(v[1] for v in dverts) / m,
    )
    pts = {i: (_R(P.points[i][0]), _R(P.points[i][1])) for i in outside}

    arr = P.array()
    ext = max(int(arr[:, 0].max() - arr[:, 0].min()),
              int(arr[:, 1].max() - arr[:, 1].min()), 1)
    pad = 2 * ext
    lox, hix = int(arr[:, 0].min()) - pad, int(arr[:, 0].max()) + pad
    loy, hiy = int(arr[:, 1].min()) - pad, int(arr[:, 1].max()) + pad
    lox, hix, loy, hiy = map(_R, (lox, hix, loy, hiy))

    xs = [v[0] for v in dverts]
    x_l, x_r = min(xs), max(xs)
    # extreme vertices; a vertical edge contributes its two endpoints
    left_ids = [i for i in range(m) if dverts[i][0] == x_l]
    right_ids = [i for i in range(m) if dverts[i][0] == x_r]
    il_top = max(left_ids, key=lambda i: dverts[i][1])
    il_bot = min(left_ids, key=lambda i: dverts[i][1])
    ir_top = max(right_ids, key=lambda i: dverts[i][1])
    ir_bot = min(right_ids, key=lambda i: dverts[i][1])

    # upper chain CCW runs right->left; collect it left->right
    upper = [ir_top]
    i = ir_top
    while i != il_top:
        i = (i + 1) % m
        upper.append(i)
    upper.reverse()
    lower = [il_bot]
    i = il_bot
    while i != ir_bot:
        i = (i + 1) % m
        lower.append(i)
    lower.reverse()  # right->left

    # pockets are bounded sideways by the vertical supporting lines, not the box
    ring_above = [dverts[i] for i in upper] + [(x_r, hiy), (x_l, hiy)]
    ring_below = [dverts[i] for i in lower] + [(x_l, loy), (x_r, loy)]
    triangles: list = []
    levels: list = []
    members: list = []
    anchors: list = []

    left_pts = [i for i in outside if pts[i][0] < x_l]
    right_pts = [i for i in outside if pts[i][0] > x_r]
    mid_pts = [i for i in outside if x_l <= pts[i][0] <= x_r]
    above_pts = []
    below_pts = []
    for i in mid_pts:
        if _point_in_ring(pts[i], ring_above):
            above_pts.append(i)
        else:
            below_pts.append(i)

    if left_pts:
        ring = [(lox, loy), (x_l, loy), (x_l, hiy), (lox, hiy)]
        triangles.append(ring)
        levels.append(len(left_pts))
        members.append(left_pts)
        anchors.append(il_top)
    if right_pts:
        ring = [(x_r, loy), (hix, loy), (hix, hiy), (x_r, hiy)]
        triangles.append(ring)
        levels.append(len(right_pts))
        members.append(right_pts)
        anchors.append(ir_top)

    queue = deque()
    if above_pts:
        queue.append(_Pocket(ring_above, list(upper), above_pts))
    if below_pts:
        queue.append(_Pocket(ring_below, list(lower), below_pts))

    guard = 8 * (len(outside) // max(k, 1) + 8)
    splits = 0
    while queue:
        pk = queue.popleft()
        if len(pk.members) <= 2 * k:
            hull = _hull_ring(pk.ring)
            triangles.append(hull)
            levels.append(len(pk.members))
            members.append(pk.members)
            anchors.append(pk.base[0])
            continue
        splits += 1
        if splits > guard:
            raise RuntimeError("pocket splitting failed to make progress")
        far_recs, subs, far_members, weight = _split_pocket(pk, dverts, centroid, pts, 2 * k)
        for ring, fmem in zip(far_recs, far_members):
            if fmem:
                triangles.append(ring)
                levels.append(weight)
                members.append(fmem)
                anchors.append(subs[0].base[-1] if subs else pk.base[0])
        queue.extend(subs)

    final_levels = tuple(int(math.floor(math.log2(max(w, 1)))) for w in levels)
    return PocketCover(
        triangles=tuple(_to_fraction_ring(_canon_ring(r)) for r in triangles),
        levels=final_levels,
        members=tuple(tuple(sorted(ms)) for ms in members),
        anchors=tuple(anchors),
        tukey=D,
    )


def _split_pocket(pk, dverts, centroid, pts, two_k):
    """Pick the supporting line balancing the sub-pockets; apply the cut."""
    m = len(dverts)
    best = None  # (imbalance, order, t, cand_dir, eval data)
    order = 0
    for t in sorted(pk.base, key=lambda i: dverts[i]):
        ev = _eval_vertex(pk, t, dverts, centroid, pts)
        if ev is None:
            continue
        imbalance, cand = ev
        if best is None or imbalance < best[0]:
            best = (imbalance, order, t, cand)
            if imbalance == 0:
                break
        order += 1
    if best is None:
        raise RuntimeError("no admissible supporting line for any base vertex")
    _, _, t, cand = best
    v = dverts[t]
    na, nb, nc = _near_coeffs(v, cand, centroid)
    near = _split_components(_clip_ring(pk.ring, na, nb, nc))
    far = _split_components(_clip_ring(pk.ring, -na, -nb, -nc))
    r = pk.base.index(t)
    base_a, base_b = pk.base[: r + 1], pk.base[r:]
    ring_a, ring_b = _identify_sides(near, base_a, base_b, dverts, t)
    mem_a, mem_b, mem_far = [], [], []
    for s in pk.members:
        p = pts[s]
        val = na * p[0] + nb * p[1] - nc
        if val > 0:
            mem_far.append(s)
        elif ring_a is not None and _point_in_ring(p, ring_a):
            mem_a.append(s)
        elif ring_b is not None and _point_in_ring(p, ring_b):
            mem_b.append(s)
        else:
            raise RuntimeError("point escaped both sub-pockets")
    if len(mem_far) > two_k:
        raise RuntimeError("cut-off piece exceeds 2k points; supporting line invalid")
    if max(len(mem_a), len(mem_b)) >= len(pk.members):
        raise RuntimeError("pocket split made no progress")
    subs = []
    if ring_a is not None:
        subs.append(_Pocket(ring_a, base_a, mem_a))
    if ring_b is not None:
        subs.append(_Pocket(ring_b, base_b, mem_b))
    far_members: list = [[] for _ in far]
    for s in mem_far:
        placed = False
        for fi, fr in enumerate(far):
            if _point_in_ring(pts[s], fr):
                far_members[fi].append(s)
                placed = True
                break
        if not placed:
            raise RuntimeError("far point escaped the cut-off piece")
    return [_hull_ring(r) for r in far], subs, far_members, len(pk.members)


def _near_coeffs(v, d, centroid):
    """Halfplane (a, b, c): a x + b y <= c is the D side of line(v, d)."""
    a = -d[1]
    b = d[0]
    c = a * v[0] + b * v[1]
    side = a * centroid[0] + b * centroid[1] - c
    if side > 0:
        a, b, c = -a, -b, -c
    return a, b, c


def _identify_sides(near_rings, base_a, base_b, dverts, t):
    """Match near components to the sub-arcs before/after the cut vertex."""
    marker_a = dverts[base_a[-2]] if len(base_a) >= 2 else None
    marker_b = dverts[base_b[1]] if len(base_b) >= 2 else None
    ring_a = ring_b = None
    rest = list(near_rings)
    if marker_a is not None:
        for r in rest:
            if _point_in_ring(marker_a, r):
                ring_a = r
                break
        if ring_a is not None:
            rest = [r for r in rest if r is not ring_a]
    if marker_b is not None:
        for r in rest:
            if _point_in_ring(marker_b, r):
                ring_b = r
                break
        if ring_b is not None:
            rest = [r for r in rest if r is not ring_b]
    # degenerate arcs: hand remaining components out deterministically
    for r in sorted(rest, key=lambda rr: min(rr)):
        if ring_a is None:
            ring_a = r
        elif ring_b is None:
            ring_b = r
        else:
            raise RuntimeError("unexpected extra near component")
    return ring_a, ring_b


def _eval_vertex(pk, t, dverts, centroid, pts):
    """Best candidate direction at base vertex t; returns (imbalance, dir)."""
    m = len(dverts)
    v = dverts[t]
    u1 = (v[0] - dverts[(t - 1) % m][0], v[1] - dverts[(t - 1) % m][1])
    u2 = (dverts[(t + 1) % m][0] - v[0], dverts[(t + 1) % m][1] - v[1])

    def in_cone(d):
        return _cross(u1[0], u1[1], d[0], d[1]) > 0 and _cross(d[0], d[1], u2[0], u2[1]) > 0

    events = {}
    silent = []
    for s in pk.members:
        d = (pts[s][0] - v[0], pts[s][1] - v[1])
        nd = (-d[0], -d[1])
        if in_cone(d):
            rep = d
        elif in_cone(nd):
            rep = nd
        else:
            silent.append(s)
            continue
        key = _dir_key(rep)
        events.setdefault(key, (rep, []))[1].append(s)

    def cmp_dirs(e1, e2):
        cr = _cross(e1[1][0][0], e1[1][0][1], e2[1][0][0], e2[1][0][1])
        return -1 if cr > 0 else (1 if cr < 0 else 0)

    ordered = sorted(events.items(), key=cmp_to_key(cmp_dirs))
    dirs = [rep for _, (rep, _) in ordered]
    groups = [mems for _, (_, mems) in ordered]
    cands = []
    if not dirs:
        cands = [(u1[0] + u2[0], u1[1] + u2[1])]
    else:
        cands.append((u1[0] + dirs[0][0], u1[1] + dirs[0][1]))
        for a, b in zip(dirs, dirs[1:]):
            cands.append((a[0] + b[0], a[1] + b[1]))
        cands.append((dirs[-1][0] + u2[0], dirs[-1][1] + u2[1]))

    ring_cache = {}

    def rings_at(ci):
        if ci not in ring_cache:
            na, nb, nc = _near_coeffs(v, cands[ci], centroid)
            comps = _split_components(_clip_ring(pk.ring, na, nb, nc))
            r = pk.base.index(t)
            ra, rb = _identify_sides(comps, pk.base[: r + 1], pk.base[r:], dverts, t)
            ring_cache[ci] = (na, nb, nc, ra, rb)
        return ring_cache[ci]

    def state_at(s, ci):
        na, nb, nc, ra, rb = rings_at(ci)
        p = pts[s]
        val = na * p[0] + nb * p[1] - nc
        if val > 0:
            return "F"
        if ra is not None and _point_in_ring(p, ra):
            return "A"
        if rb is not None and _point_in_ring(p, rb):
            return "B"
        return "F"  # numerically impossible; treat as cut off

    counts = {"A": 0, "B": 0, "F": 0}
    for s in silent:
        counts[state_at(s, 0)] += 1
    pre = []
    post = []
    for gi, mems in enumerate(groups):
        st_pre = state_at(mems[0], gi)
        st_post = state_at(mems[0], gi + 1)
        pre.append(st_pre)
        post.append(st_post)
        counts[st_pre] += len(mems)
    best = None
    for ci in range(len(cands)):
        if ci > 0:
            counts[pre[ci - 1]] -= len(groups[ci - 1])
            counts[post[ci - 1]] += len(groups[ci - 1])
        nA, nB = counts["A"], counts["B"]
        if max(nA, nB) >= len(pk.members):
            continue
        imb = abs(nA - nB)
        if best is None or imb < best[0]:
            best = (imb, cands[ci])
    return best


def _dir_key(d):
    g = _R(d[0]) if d[0] != 0 else _R(d[1])
    return (d[0] / g if g != 0 else _R(0), d[1] / g if g != 0 else _R(0))


# ---------------------------------------------------------------------------
# shallow tree and the layered relative-crossing tree


def shallow_tree(P: PointSet, k: int, cover: Optional[PocketCover] = None) -> Tree:
    """Spanning tree of P \\ D_k from per-triangle trees plus connectors.

    Each triangle's points get their own low-crossing tree; triangles are
    then chained in the order their anchors appear along the Tukey boundary.
    The chaining edge between consecutive representatives is the straight
    segment the Steiner-removal argument leaves behind: it replaces a path
    along the boundary, and a line separating its endpoints crosses that
    path at least once, so per-line crossings never increase.
    """
    if cover is None:
        cover = pocket_cover(P, k)
    occupied = [i for i in range(len(cover.triangles)) if cover.members[i]]
    if not occupied:
        raise ValueError("no points outside the Tukey region")
    occupied.sort(key=lambda i: (cover.anchors[i], i))
    edges = []
    reps = []
    for i in occupied:
        mem = list(cover.members[i])
        reps.append(min(mem))
        if len(mem) >= 2:
            sub = welzl_tree(P.subset(mem))
            edges.extend((mem[u], mem[v]) for u, v in sub.edges)
    for r1, r2 in zip(reps, reps[1:]):
        edges.append((r1, r2))
    return Tree(edges=tuple(edges))


def _steiner_path_segments(P: PointSet, cover: PocketCover):
    """Pre-removal connector walk: rep -> anchor -> boundary -> anchor -> rep.

    One sub-walk per consecutive pair of occupied triangles; the walk
    re-traverses interior spokes, so those segments appear once per adjacent
    pair.  Each straightened connector replaces its own sub-walk, which a
    separating line must cross, so per-line crossings cannot go up.  Only
    used by tests.
    """
    occupied = [i for i in range(len(cover.triangles)) if cover.members[i]]
    occupied.sort(key=lambda i: (cover.anchors[i], i))
    poly = cover.tukey.polygon
    segs = []
    for i, j in zip(occupied, occupied[1:]):
        a, b = cover.anchors[i], cover.anchors[j]
        segs.append((P.points[min(cover.members[i])], poly[a]))
        step = a
        while step != b:
            nxt = (step + 1) % len(poly)
            segs.append((poly[step], poly[nxt]))
            step = nxt
        segs.append((poly[b], P.points[min(cover.members[j])]))
    return segs


def relative_crossing_tree(P: PointSet) -> Tree:
    """Spanning tree whose crossings scale with the line's weight.

    Layer i spans the points outside D(remaining, 2^i) with a shallow tree;
    the survivors recurse with the doubled depth.  A line of weight w only
    ever crosses layers with 2^i < about w (deeper Tukey regions capture the
    line entirely on one side), which is what buys the sqrt(w) log(n/w)
    bound.  Small leftovers fall back to the uniform tree.
    """
    n = len(P)
    if n < 2:
        raise ValueError("need at least 2 points")
    P.require_general_position()
    active = list(range(n))
    layers = []  # (indices, edges in P numbering)
    i = 1
    while active:
        mrem = len(active)
        if mrem == 1:
            layers.append((active, []))
            break
        k = 2 ** i
        if mrem <= max(64, 8 * k):
            sub = welzl_tree(P.subset(active))
            layers.append((active, [(active[u], active[v]) for u, v in sub.edges]))
            break
        sub_ps = P.subset(active)
        try:
            cover = pocket_cover(sub_ps, k)
        except ValueError:
            cover = None
        if cover is None or not cover.triangles:
            sub = welzl_tree(sub_ps)
            layers.append((active, [(active[u], active[v]) for u, v in sub.edges]))
            break
        tree = shallow_tree(sub_ps, k, cover=cover)
        outside_local = sorted(m for ms in cover.members for m in ms)
        outside = [active[u] for u in outside_local]
        layers.append((outside, [(active[u], active[v]) for u, v in tree.edges]))
        outset = set(outside_local)
        active = [a for u, a in enumerate(active) if u not in outset]
        i += 1
    edges = []
    reps = []
    for idx, le in layers:
        edges.extend(le)
        reps.append(min(idx))
    for r1, r2 in zip(reps, reps[1:]):
        edges.append((r1, r2))
    return Tree(edges=tuple(edges))


# ---------------------------------------------------------------------------
# matchings


def tree_to_matching(T: Tree, P: PointSet) -> Matching:
    """Tour the tree, keep first visits, pair consecutive path points.

    The first-visit path crosses each line at most twice as often as the
    tree; taking every other path edge as a pair keeps the separated-pair
    count within the same factor.
    """
    n = len(P)
    if n % 2 != 0:
        raise ValueError("matching needs an even number of points")
    adj = [[] for _ in range(n)]
    for u, v in T.edges:
        adj[u].append(v)
        adj[v].append(u)
    for a in adj:
        a.sort()
    root = T.root if T.root is not None else 0
    seen = [False] * n
    order = []
    stack = [root]
    while stack:
        x = stack.pop()
        if seen[x]:
            continue
        seen[x] = True
        order.append(x)
        for y in reversed(adj[x]):
            if not seen[y]:
                stack.append(y)
    if len(order) != n:
        raise ValueError("tree does not span the point set")
    pairs = [(order[i], order[i + 1]) for i in range(0, n, 2)]
    return Matching(pairs=tuple(pairs))


# ---------------------------------------------------------------------------
# the lifted-grid lower bound

def paraboloid_counterexample(m: int, partition: Sequence[Sequence[int]]) -> PlaneCrossingReport:
    """Count parts crossed by each half-integer axis plane of the lifted grid.

    The ground set is the m x m grid lifted to the paraboloid (index
    (i-1)*m + (j-1) for grid cell (i, j), 1-based).  A part is crossed by
    the plane x = c + 1/2 iff its projected x-extent straddles it; no lifted
    point lies on any such plane.  Any partition into parts of comparable
    size (max <= 2 min) is accepted; on this input every near-balanced
    partition has some plane crossing many parts.
    """
    if m < 2:
        raise ValueError("m must be at least 2")
    nn = m * m
    seen = [False] * nn
    sizes = []
    for part in partition:
        if len(part) == 0:
            raise ValueError("invalid partition: empty part")
        for idx in part:
            if not (0 <= idx < nn) or seen[idx]:
                raise ValueError("invalid partition: not a disjoint cover")
            seen[idx] = True
        sizes.append(len(part))
    if not all(seen):
        raise ValueError("invalid partition: does not cover the grid")
    if max(sizes) > 2 * min(sizes):
        raise ValueError("invalid partition: part sizes spread beyond a factor 2")
    extents = []
    for part in partition:
        xs = [idx // m + 1 for idx in part]
        ys = [idx % m + 1 for idx in part]
        extents.append((min(xs), max(xs), min(ys), max(ys)))
    planes = []
    crossed = []
    for axis in ("x", "y"):
        for c in range(1, m):
            planes.append((axis, c))
            if axis == "x":
                cnt = sum(1 for lo, hi, _, _ in extents if lo <= c < hi)
            else:
                cnt = sum(1 for _, _, lo, hi in extents if lo <= c < hi)
            crossed.append(cnt)
    return PlaneCrossingReport(planes=tuple(planes), crossed=tuple(crossed))


# ---------------------------------------------------------------------------
# crossing statistics over the canonical lines (vectorized)


def crossing_stats(P: PointSet, edges: Sequence[Tuple[int, int]]):
    """(weights, crossings) per canonical pair line, in flat pair order.

    weight = min(#strictly above, #below or on) with the vertical-line
    convention of `line_weight`; an edge crosses a line when its endpoints
    fall strictly on opposite sides under that same closed/open split.
    """
    arr = P.array()
    n = len(P)
    if np.abs(arr).max(initial=0) > _kernels._PAIR_SAFE_BOUND:
        raise ValueError("coordinates too large for the vectorized profiler")
    ii, jj = np.triu_indices(n, k=1)
    x, y = arr[:, 0], arr[:, 1]
    a_all = y[ii] - y[jj]
    b_all = x[jj] - x[ii]
    c_all = a_all * x[ii] + b_all * y[ii]
    eu = np.array([e[0] for e in edges], dtype=np.int64)
    ev = np.array([e[1] for e in edges], dtype=np.int64)
    npairs = len(ii)
    weights = np.empty(npairs, dtype=np.int64)
    crossings = np.empty(npairs, dtype=np.int64)
    chunk = max(1, _kernels._CHUNK_CELLS // max(n + len(edges), 1))
    for start in range(0, npairs, chunk):
        stop = min(start + chunk, npairs)
        vals = (
            a_all[start:stop, None] * x[None, :]
            + b_all[start:stop, None] * y[None, :]
            - c_all[start:stop, None]
        )
        above = vals > 0
        flip = (b_all[start:stop] < 0) | (
            (b_all[start:stop] == 0) & (a_all[start:stop] < 0)
        )
        above[flip] = vals[flip] < 0
        cnt = above.sum(axis=1)
        weights[start:stop] = np.minimum(cnt, n - cnt)
        if len(edges):
            crossings[start:stop] = (above[:, eu] ^ above[:, ev]).sum(axis=1)
        else:
            crossings[start:stop] = 0
    return weights, crossings


# ---------------------------------------------------------------------------
# serialization


def write_edge_list(path, obj, source: str = "", seed: Optional[int] = None):
    """Edge list, `u v` per line, with a provenance header."""
    kind = "tree" if isinstance(obj, Tree) else "matching"
    rows = obj.edges if kind == "tree" else obj.pairs
    with open(path, "w") as fh:
        fh.write(f"# geosample edges v1 kind={kind}\n")
        fh.write(f"# source: {source}\n")
        fh.write(f"# seed: {'' if seed is None else int(seed)}\n")
        for u, v in rows:
            fh.write(f"{u} {v}\n")


def read_edge_list(path):
    kind = None
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "kind=" in line:
                    kind = line.split("kind=")[1].split()[0]
                continue
            u, v = line.split()
            rows.append((int(u), int(v)))
    if kind == "tree":
        return Tree(edges=tuple(rows))
    if kind == "matching":
        return Matching(pairs=tuple(rows))
    raise ValueError("missing or unknown edge-list kind header")
