"""Approximate halfplane counting in the plane via dual line arrangements.

A halfplane count over a planar point set dualizes to counting the dual
lines strictly below (or above) a query point.  This module builds exact
k-levels of the dual arrangement by a full sweep, simplifies them by
shortcutting, and assembles two query structures:

* ``FastStructure``: exact levels 0..M-1 with M = ceil(1/eps^(7/6)) plus a
  geometric ladder of simplified level curves above them.  Every answer
  satisfies (1-eps) w <= answer <= (1+eps) w against the true count w, and
  answers are exact below the ladder.
* ``LinearStructure``: a ladder starting at a random level M in
  [1/eps^2, 2/eps^2], with exact counting below the lowest ladder curve via
  per-edge slab lists of a low exact level.

Every curve carries a certified count window [lo, hi] obtained by an exact
scan of the counts attained along the curve; region tags are chosen inside
the implied feasible window, so the query contract is a certificate, not an
asymptotic promise.  Builders resample a curve whenever its complexity or
its window fails, up to RESAMPLE_CAP attempts.

Answers track the closed count (boundary points included), matching the
halfplane containment convention: location is weak (a query on a curve
reads that curve's tag), and any line weakly below a query is strictly
below every curve point above it, so the certified windows cover closed
counts as well.  The guarantee covers boundaries through at most one input
point; canonical halfplanes never pass through two.
"""

import math
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Optional

import numpy as np

from .constants import DEFAULTS, FrozenConstants
from .geometry import (
    GeneralPositionError,
    Halfplane,
    PointSet,
    dualize,
    dualize_halfplane,
)
from .rng import derive_seed, substream
from .sampling import frac

RESAMPLE_CAP = 16

# shortcut denominator from the ladder construction: (1 + eps/12)^3 <= 1 + eps
# for every eps in (0, 1], so a gamma curve drawn and simplified with eps/12
# stays inside the (1 +- eps) sandwich of its nominal level
SHORTCUT_C = 12

# crossing abscissae are sorted by float key; runs closer than this are
# re-sorted exactly, so the sweep order is exact for any input
_X_KEY_TOL = 1e-7


# ---------------------------------------------------------------------------
# dual line plumbing


def _line_arrays(lines):
    """Integer (slope, intercept) arrays for a sequence of dual lines.

    The sweep kernels compare crossings in int64; integrality and a
    magnitude bound certify that no intermediate product overflows.
    """
    n = len(lines)
    if n == 0:
        raise ValueError("empty line set")
    a = np.empty(n, dtype=np.int64)
    b = np.empty(n, dtype=np.int64)
    for i, ln in enumerate(lines):
        sl = Fraction(ln.slope)
        ic = Fraction(ln.intercept)
        if sl.denominator != 1 or ic.denominator != 1:
            raise ValueError("level machinery expects integer dual lines")
        a[i] = int(sl)
        b[i] = int(ic)
    # |a*xn + b*xd| <= 4*max|a|*max|b| must fit in int64
    bound = max(1, int(np.abs(a).max())) * max(1, int(np.abs(b).max()))
    if bound > 1 << 60:
        raise ValueError("dual line coefficients too large for exact kernels")
    if len(np.unique(a)) != n:
        raise GeneralPositionError("two dual lines are parallel")
    return a, b


def _dual_arrays(ps: PointSet):
    if ps.dim != 2:
        raise ValueError("expects a 2-D point set")
    return _line_arrays([dualize(p) for p in ps])


def _crossing_depths(a, b, chunk_cells=4_000_000):
    """Yield (below, on) counts for every pairwise crossing, chunked.

    below = lines strictly beneath the crossing, on = lines through it
    other than the crossing pair; on > 0 is a degeneracy.
    """
    n = len(a)
    ii, jj = np.triu_indices(n, k=1)
    step = max(1, chunk_cells // max(n, 1))
    for s in range(0, len(ii), step):
        i = ii[s : s + step]
        j = jj[s : s + step]
        xn = b[j] - b[i]
        xd = a[i] - a[j]
        neg = xd < 0
        xn = np.where(neg, -xn, xn)
        xd = np.where(neg, -xd, xd)
        yn = a[i] * xn + b[i] * xd
        vals = a[None, :] * xn[:, None] + b[None, :] * xd[:, None]
        below = (vals < yn[:, None]).sum(axis=1)
        on = (vals == yn[:, None]).sum(axis=1) - 2
        yield below, on


# ---------------------------------------------------------------------------
# level curves


@dataclass(frozen=True)
class LevelCurve:
    """X-monotone polygonal curve over all abscissae.

    There are len(vertices)+1 edges; edge e spans the abscissae between
    vertices e-1 and e, with the outer two being infinite rays.
    edge_lines[e] is the index of the supporting dual line, or -1 for a
    shortcut chord; edges_ab mirrors it with (slope, intercept) pairs so the
    curve can be evaluated without the line set.  For an exact level, every
    point of the curve has exactly level_index lines strictly below it
    (vertices sit one lower when the incoming line passes above).  tag is
    the count reported for queries in the open region directly above.
    """

    level_index: int
    vertices: tuple = field(repr=False)
    edge_lines: tuple = field(repr=False)
    tag: int
    edges_ab: tuple = field(repr=False)

    def __post_init__(self):
        if len(self.edge_lines) != len(self.vertices) + 1:
            raise ValueError("edge/vertex count mismatch")
        if len(self.edges_ab) != len(self.edge_lines):
            raise ValueError("edge coefficient mismatch")

    @property
    def complexity(self) -> int:
        return len(self.vertices)

    def edge_at(self, x) -> int:
        # on-vertex abscissae may resolve to either side; both agree there
        return bisect_right(self.vertices, x, key=lambda v: v[0])

    def y_at(self, x) -> Fraction:
        e = self.edge_at(x)
        ab = self.edges_ab[e]
        if ab is not None:
            return ab[0] * x + ab[1]
        (xl, yl) = self.vertices[e - 1]
        (xr, yr) = self.vertices[e]
        return yl + (yr - yl) * (x - xl) / (xr - xl)


def _make_curve(k, verts, lines, a, b, tag=None):
    edges_ab = tuple(
        (Fraction(int(a[l])), Fraction(int(b[l]))) if l >= 0 else None for l in lines
    )
    return LevelCurve(
        level_index=int(k),
        vertices=tuple(verts),
        edge_lines=tuple(lines),
        tag=int(k) + 1 if tag is None else int(tag),
        edges_ab=edges_ab,
    )


def _sorted_crossing_order(a, b):
    """All pairwise crossings sorted by exact abscissa.

    Returns (i, j, xn, xd) int64 arrays with xd > 0, in nondecreasing x.
    Sorting uses float keys; runs of nearly equal keys are re-sorted by the
    exact rational, so the order is exact.  Equal abscissae on pairs that
    share a line mean three concurrent lines.
    """
    n = len(a)
    ii, jj = np.triu_indices(n, k=1)
    ii = ii.astype(np.int64)
    jj = jj.astype(np.int64)
    xn = b[jj] - b[ii]
    xd = a[ii] - a[jj]
    neg = xd < 0
    xn = np.where(neg, -xn, xn)
    xd = np.where(neg, -xd, xd)
    key = xn / xd
    order = np.argsort(key, kind="stable")
    ii, jj, xn, xd, key = ii[order], jj[order], xn[order], xd[order], key[order]
    # exact repair of near-ties
    m = len(key)
    s = 0
    while s < m:
        e = s + 1
        while e < m and key[e] - key[e - 1] <= _X_KEY_TOL * (1.0 + abs(key[e])):
            e += 1
        if e - s > 1:
            idx = list(range(s, e))
            idx.sort(key=lambda t: Fraction(int(xn[t]), int(xd[t])))
            for t, src in enumerate(idx):
                if src != s + t:
                    break
            else:
                src = None
            if src is not None:
                sel = np.array(idx, dtype=np.int64)
                ii[s:e], jj[s:e] = ii[sel], jj[sel]
                xn[s:e], xd[s:e] = xn[sel], xd[sel]
            # three concurrent lines show up as equal abscissae sharing a line
            for t in range(s, e - 1):
                if xn[t] * xd[t + 1] == xn[t + 1] * xd[t]:
                    shared = {int(ii[t]), int(jj[t])} & {int(ii[t + 1]), int(jj[t + 1])}
                    if shared:
                        raise GeneralPositionError("three dual lines concurrent")
        s = e
    return ii, jj, xn, xd


def _sweep(a, b, indices, slab_index=None):
    """One left-to-right sweep of the dual arrangement.

    Returns (curves, slabs) where curves maps each requested level index k
    to (vertices, edge_lines) and slabs is the per-edge tuple of the
    slab_index-level's strictly-below line sets (None when not requested).
    """
    n = len(a)
    want = set(int(k) for k in indices)
    if slab_index is not None:
        want.add(int(slab_index))
    for k in want:
        if not 0 <= k < n:
            raise ValueError("level index out of range")
    order = list(np.argsort(-a, kind="stable"))  # bottom-to-top at x -> -inf
    pos = np.empty(n, dtype=np.int64)
    for p, ln in enumerate(order):
        pos[ln] = p
    verts = {k: [] for k in want}
    lines = {k: [order[k]] for k in want}
    slabs = None
    if slab_index is not None:
        slabs = [tuple(sorted(int(v) for v in order[:slab_index]))]
    ii, jj, xn, xd = _sorted_crossing_order(a, b)
    for t in range(len(ii)):
        li, lj = int(ii[t]), int(jj[t])
        pi, pj = int(pos[li]), int(pos[lj])
        if pi > pj:
            li, lj, pi, pj = lj, li, pj, pi
        if pj != pi + 1:
            raise GeneralPositionError("sweep order violated (degenerate input)")
        order[pi], order[pj] = lj, li
        pos[li], pos[lj] = pj, pi
        for k in (pi, pj):
            if k in want:
                x = Fraction(int(xn[t]), int(xd[t]))
                y = Fraction(int(a[li]) * int(xn[t]) + int(b[li]) * int(xd[t]), int(xd[t]))
                verts[k].append((x, y))
                lines[k].append(int(order[k]))
        if slab_index is not None and slab_index in (pi, pj):
            slabs.append(tuple(sorted(int(v) for v in order[:slab_index])))
    for k in want:
        # the rightmost ray must ride the (k+1)-th smallest slope
        if lines[k][-1] != order[k]:
            raise GeneralPositionError("level sweep did not close")
    return {k: (verts[k], lines[k]) for k in want}, slabs


def build_levels(L, indices):
    """Exact k-levels of a dual line arrangement, one sweep for all indices.

    L: sequence of DualLine with integer coefficients in general position
    (no two parallel, no three concurrent -- checked).  Returns LevelCurve
    objects sorted by level index, tagged with k+1 (the exact count of the
    open region directly above an exact level).
    """
    a, b = _line_arrays(L)
    ks = sorted(set(int(k) for k in indices))
    swept, _ = _sweep(a, b, ks)
    out = []
    for k in ks:
        verts, lines = swept[k]
        out.append(_make_curve(k, verts, lines, a, b))
    return out


def level_band_complexity(L, x, y):
    """Exact total vertex count of the levels x, x+1, ..., x+y.

    The Lemma-levels bound O(n x^(1/3) y^(2/3)) concerns the regime
    x >= y > 0; the count itself is defined for any band inside [0, n-1],
    which admits the whole-arrangement identity sum = 2*C(n,2).
    """
    a, b = _line_arrays(L)
    n = len(a)
    x, y = int(x), int(y)
    if x < 0 or y < 0 or x + y > n - 1:
        raise ValueError("band must sit inside the level range 0..n-1")
    total = 0
    for below, on in _crossing_depths(a, b):
        if (on > 0).any():
            raise GeneralPositionError("three dual lines concurrent")
        # a crossing with d lines below it is a vertex of Level_d and Level_{d+1}
        total += int(((below >= x) & (below <= x + y)).sum())
        total += int(((below >= x - 1) & (below <= x + y - 1)).sum())
    return total


def simplify_level(curve: LevelCurve, eps, k=None):
    """Shortcut an exact level in jumps of floor(eps*k) vertices.

    Keeps the two infinite rays and every floor(eps*k)-th vertex (the last
    one always), replacing the skipped runs by chords.  When eps*k < 1 the
    shortcut is void and the curve itself is returned; the identity return
    is the flag.  The shortcut curve stays between the exact levels
    ceil(k(1-eps)) and floor(k(1+eps)); callers certify the actual count
    window with _curve_count_bounds.
    """
    if k is None:
        k = curve.level_index
    elif int(k) != curve.level_index:
        raise ValueError("k does not match the curve's level index")
    if any(l < 0 for l in curve.edge_lines):
        raise ValueError("can only simplify an exact level")
    step = int(frac(eps) * k)
    if step <= 1 or not curve.vertices:
        return curve
    keep = list(range(0, len(curve.vertices), step))
    if keep[-1] != len(curve.vertices) - 1:
        keep.append(len(curve.vertices) - 1)
    verts = tuple(curve.vertices[i] for i in keep)
    lines = (curve.edge_lines[0],) + (-1,) * (len(keep) - 1) + (curve.edge_lines[-1],)
    edges_ab = (curve.edges_ab[0],) + (None,) * (len(keep) - 1) + (curve.edges_ab[-1],)
    return LevelCurve(
        level_index=curve.level_index,
        vertices=verts,
        edge_lines=lines,
        tag=curve.tag,
        edges_ab=edges_ab,
    )


# ---------------------------------------------------------------------------
# exact count windows along a curve


def _point_depth(a, b, x: Fraction, y: Fraction) -> int:
    """Number of lines strictly below the point (x, y), exact."""
    xn, xd = x.numerator, x.denominator
    if xd % y.denominator == 0:
        rhs = y.numerator * (xd // y.denominator)
        # vectorized only while products stay within int64
        if max(abs(xn), xd) < 1 << 40 and abs(rhs) < 1 << 62:
            lhs = a * xn + b * xd
            return int((lhs < rhs).sum())
    return sum(1 for i in range(len(a)) if int(a[i]) * x + int(b[i]) < y)


def _chord_bounds(a, b, xl, yl, xr, yr):
    """Exact [min, max] strictly-below count over the open chord interior."""
    cs = (yr - yl) / (xr - xl)
    ci = yl - cs * xl
    cross = []
    for r in range(len(a)):
        da = int(a[r]) - cs
        if da == 0:
            continue
        x = (ci - int(b[r])) / da
        if xl < x < xr:
            cross.append((x, -1 if int(a[r]) > cs else 1))
    cross.sort(key=lambda c: c[0])
    x0 = (xl + (cross[0][0] if cross else xr)) / 2
    base = _point_depth(a, b, x0, cs * x0 + ci)
    lo = hi = cur = base
    for _, d in cross:
        cur += d
        lo = min(lo, cur)
        hi = max(hi, cur)
    return lo, hi


def _curve_count_bounds(a, b, curve: LevelCurve):
    """Certified [lo, hi] of the strictly-below count over every curve point.

    Exact levels need no scan: edge interiors sit at k, vertices at k-1
    exactly when the outgoing line is steeper than the incoming one.
    Chord edges of simplified curves are scanned exactly.
    """
    k = curve.level_index
    if all(l >= 0 for l in curve.edge_lines):
        lo = k
        for i in range(len(curve.vertices)):
            if a[curve.edge_lines[i + 1]] > a[curve.edge_lines[i]]:
                lo = k - 1
                break
        return lo, k
    lo = hi = k  # the two rays are pieces of the exact level
    for e, l in enumerate(curve.edge_lines):
        if l >= 0:
            continue
        (xl, yl) = curve.vertices[e - 1]
        (xr, yr) = curve.vertices[e]
        clo, chi = _chord_bounds(a, b, xl, yl, xr, yr)
        lo = min(lo, clo)
        hi = max(hi, chi)
    for (vx, vy) in curve.vertices:
        d = _point_depth(a, b, vx, vy)
        lo = min(lo, d)
        hi = max(hi, d)
    return lo, hi


# ---------------------------------------------------------------------------
# the two structures


@dataclass(frozen=True)
class CurveStack:
    """One query side: vertically ordered disjoint curves with tags.

    curves[:gamma_start] are exact levels; the rest are ladder curves.
    bounds are the certified count windows, aligned with curves.  For the
    linear structure, slab_curve is an exact level certified to lie above
    the lowest ladder curve, and slabs[e] lists the slab_level lines
    strictly below its edge e (queries below the ladder count exactly
    against that list).  exact_all marks the degenerate tiny-n fallback
    where every query is answered by a full scan.
    """

    curves: tuple
    bounds: tuple
    gamma_start: int
    draws: tuple = ()
    lines_a: tuple = field(default=(), repr=False)
    lines_b: tuple = field(default=(), repr=False)
    slab_curve: Optional[LevelCurve] = None
    slabs: Optional[tuple] = field(default=None, repr=False)
    slab_level: Optional[int] = None
    m_base: Optional[int] = None
    exact_all: bool = False
    resamples: int = 0

    @property
    def complexity(self) -> int:
        return sum(c.complexity for c in self.curves)

    @property
    def storage(self) -> int:
        total = self.complexity
        if self.slab_curve is not None:
            total += self.slab_curve.complexity
            total += sum(len(s) for s in self.slabs)
        return total


def _stack_tag(stack: CurveStack, qx: Fraction, qy: Fraction):
    """Tag of the highest curve weakly below (qx, qy), or None.

    Weak location makes the answer track the closed (boundary-inclusive)
    count: a query on an exact level reads that level's tag, which equals
    its closed count exactly, and a query on a ladder curve reads a tag
    certified for the belt the curve bounds from below.
    """
    lo, hi = 0, len(stack.curves) - 1
    best = None
    while lo <= hi:
        mid = (lo + hi) // 2
        if stack.curves[mid].y_at(qx) <= qy:
            best = mid
            lo = mid + 1
        else:
            hi = mid - 1
    return None if best is None else stack.curves[best].tag


def _exact_below(stack: CurveStack, qx: Fraction, qy: Fraction) -> int:
    """Closed (weakly below) count by full scan."""
    return sum(
        1 for i in range(len(stack.lines_a)) if stack.lines_a[i] * qx + stack.lines_b[i] <= qy
    )


def _slab_count(stack: CurveStack, qx: Fraction, qy: Fraction) -> int:
    """Exact closed count for a query strictly below the lowest ladder curve.

    Every line weakly below q is strictly below the slab level's edge over
    q, so the per-edge list is a superset and the scan is exact.
    """
    if stack.exact_all or stack.slab_curve is None:
        return _exact_below(stack, qx, qy)
    e = stack.slab_curve.edge_at(qx)
    cnt = 0
    for r in stack.slabs[e]:
        if stack.lines_a[r] * qx + stack.lines_b[r] <= qy:
            cnt += 1
    return cnt


def _belt_window(eps: Fraction, n: int, wmin: int, wmax: int):
    """Integer tags valid for every true count in [wmin, wmax], or None."""
    lo = math.ceil((1 - eps) * wmax)
    hi = min(n, math.floor((1 + eps) * wmin))
    lo = max(lo, 0)
    return (lo, hi) if lo <= hi else None


def _draw_level(n_i: Fraction, eps: Fraction, rng, lo_cap: int, hi_cap: int):
    """Random level index near the nominal ladder value n_i.

    The construction window is (n_i/(1-eps/c), n_i(1+eps/c)^2); when it
    holds no integer (the usual case at desk scale) the nearest integer to
    its midpoint is used -- the certified count window downstream does not
    care where the draw came from.
    """
    lo_f = n_i / (1 - eps / SHORTCUT_C)
    hi_f = n_i * (1 + eps / SHORTCUT_C) ** 2
    lo = max(lo_cap, math.ceil(lo_f))
    hi = min(hi_cap, math.floor(hi_f))
    if lo > hi:
        k = math.floor((lo_f + hi_f) / 2 + Fraction(1, 2))
        return max(lo_cap, min(hi_cap, k))
    return int(rng.integers(lo, hi + 1))


def _ladder(base: Fraction, eps: Fraction, n: int, start: int):
    """Nominal ladder values n_i = floor(base*(1+eps)^i) for i >= start, < n."""
    vals = []
    i = start
    while True:
        v = math.floor(base * (1 + eps) ** i)
        if v >= n:
            break
        vals.append(v)
        i += 1
    return vals


def _build_gamma(a, b, n, eps, seed, label, i, nominal, k_hi, prev_hi, wmin_prev, constants, bound):
    """Draw, simplify, and certify one ladder curve; resample on failure.

    Accepts a curve when its complexity is within `bound`, its certified
    count window sits strictly above prev_hi, and the belt below it admits
    a tag (window against wmin_prev).  Returns (curve, (lo, hi), belt_window,
    resamples).
    """
    last_err = "no attempt"
    for attempt in range(RESAMPLE_CAP):
        rng = substream(seed, label, "draw", i, attempt)
        k = _draw_level(Fraction(nominal), eps, rng, max(nominal, prev_hi + 1), k_hi)
        swept, _ = _sweep(a, b, {k})
        verts, lines = swept[k]
        if len(verts) > bound:
            last_err = f"level {k} complexity {len(verts)} > {bound:.0f}"
            continue
        curve = _make_curve(k, verts, lines, a, b)
        gamma = simplify_level(curve, eps / SHORTCUT_C, k)
        lo, hi = _curve_count_bounds(a, b, gamma)
        if lo <= prev_hi:
            last_err = f"curve window [{lo},{hi}] not above previous hi {prev_hi}"
            continue
        belt = _belt_window(eps, n, wmin_prev, hi)
        if belt is None:
            last_err = f"no valid tag for belt below level {k}"
            continue
        return gamma, (lo, hi), belt, attempt
    raise RuntimeError(f"ladder resample cap reached at rung {i}: {last_err}")


def _build_stack(a, b, eps: Fraction, seed: int, constants, kind: str) -> CurveStack:
    n = len(a)
    lines_a = tuple(int(v) for v in a)
    lines_b = tuple(int(v) for v in b)
    resamples = 0

    if kind == "fast":
        m = math.ceil(float(eps) ** (-7.0 / 6.0) - 1e-12)
        gamma_bound = constants.c_complexity * n / float(eps) ** (1.0 / 3.0)
    else:
        m_lo = math.ceil(1 / eps / eps)
        m_hi = min(math.floor(2 / eps / eps), n - 1)
        if m_lo > m_hi:
            # degenerate tiny-n case: no ladder fits, answer by full scans
            return CurveStack(
                curves=(),
                bounds=(),
                gamma_start=0,
                lines_a=lines_a,
                lines_b=lines_b,
                exact_all=True,
            )
        m = int(substream(seed, "m").integers(m_lo, m_hi + 1))
        gamma_bound = constants.c_complexity * n

    if kind == "fast" and m >= n:
        # large eps or tiny n: the structure is just every exact level
        swept, _ = _sweep(a, b, range(n))
        curves = []
        bounds = []
        for k in range(n):
            verts, lines = swept[k]
            curves.append(_make_curve(k, verts, lines, a, b, tag=min(k + 1, n)))
            bounds.append(_curve_count_bounds(a, b, curves[-1]))
        return CurveStack(
            curves=tuple(curves),
            bounds=tuple(bounds),
            gamma_start=n,
            lines_a=lines_a,
            lines_b=lines_b,
        )

    if kind == "fast":
        base_indices = range(m)
        nominal = _ladder(Fraction(m), eps, n, start=1)
        prev_hi = m - 1  # certified top of Level_{m-1}
        wmin_prev = m  # a point strictly above Level_{m-1} has >= m lines below
    else:
        base_indices = ()
        nominal = _ladder(Fraction(m), eps, n, start=0)  # m < n, so never empty
        prev_hi = -1  # no curve below the first rung; its belt is the slab zone
        wmin_prev = None

    curves = []
    bounds = []
    if base_indices:
        swept, _ = _sweep(a, b, base_indices)
        for k in base_indices:
            verts, lines = swept[k]
            curves.append(_make_curve(k, verts, lines, a, b))
            bounds.append(_curve_count_bounds(a, b, curves[-1]))

    gamma_start = len(curves)
    draws = []
    belts = []
    gammas = []
    gbounds = []
    for i, n_i in enumerate(nominal):
        if wmin_prev is None:
            # linear-structure first rung: everything below it is exact, so
            # only complexity and ordering gate the draw; belt handled below
            for attempt in range(RESAMPLE_CAP):
                rng = substream(seed, "gamma", "draw", i, attempt)
                k = _draw_level(Fraction(n_i), eps, rng, max(n_i, prev_hi + 1), n - 1)
                swept, _ = _sweep(a, b, {k})
                verts, lines = swept[k]
                if len(verts) <= gamma_bound:
                    break
                resamples += 1
            else:
                raise RuntimeError("ladder resample cap reached at rung 0")
            gamma = simplify_level(_make_curve(k, verts, lines, a, b), eps / SHORTCUT_C, k)
            lo, hi = _curve_count_bounds(a, b, gamma)
            gammas.append(gamma)
            gbounds.append((lo, hi))
            belts.append(None)
            draws.append(k)
            prev_hi = hi
            wmin_prev = lo
            continue
        gamma, (lo, hi), belt, extra = _build_gamma(
            a, b, n, eps, seed, "gamma", i, n_i, n - 1, prev_hi, wmin_prev, constants, gamma_bound
        )
        resamples += extra
        gammas.append(gamma)
        gbounds.append((lo, hi))
        belts.append(belt)
        draws.append(gamma.level_index)
        prev_hi = hi
        wmin_prev = lo

    # top region above the last curve: counts in [wmin_prev, n]
    top = _belt_window(eps, n, wmin_prev, n)
    if top is None:
        raise RuntimeError("no valid tag for the region above the top curve")

    # assign tags: each curve's tag serves the open region directly above it
    tagged = []
    for j, c in enumerate(curves):
        if j < gamma_start - 1:
            tagged.append(replace(c, tag=min(c.level_index + 1, n)))
        else:
            # top exact level: its region runs up to the first ladder curve
            # (or all the way up when the ladder is empty)
            w = belts[0] if gammas else top
            tagged.append(replace(c, tag=(w[0] + w[1]) // 2))
    for i, g in enumerate(gammas):
        if i + 1 < len(gammas):
            w = belts[i + 1]
        else:
            w = top
        tagged.append(replace(g, tag=(w[0] + w[1]) // 2))

    all_bounds = tuple(bounds) + tuple(gbounds)

    slab_curve = None
    slabs = None
    slab_level = None
    if kind == "linear":
        slab_level = gbounds[0][1] + 2  # certified strictly above the first rung
        if slab_level >= n:
            slab_level = None  # tiny n: exact queries fall back to full scans
        else:
            swept, slabs = _sweep(a, b, (), slab_index=slab_level)
            verts, lines = swept[slab_level]
            if len(verts) > gamma_bound:
                raise RuntimeError("slab level complexity exceeded the resample bound")
            slab_curve = _make_curve(slab_level, verts, lines, a, b)
            slabs = tuple(slabs)

    return CurveStack(
        curves=tuple(tagged),
        bounds=all_bounds,
        gamma_start=gamma_start,
        draws=tuple(draws),
        lines_a=lines_a,
        lines_b=lines_b,
        slab_curve=slab_curve,
        slabs=slabs,
        slab_level=slab_level,
        m_base=m if kind == "linear" else None,
        resamples=resamples,
    )


@dataclass(frozen=True)
class FastStructure:
    """Fast-query halfplane counter: exact bottom levels plus a tag ladder.

    below answers 'dual lines strictly below q' queries; above is the same
    machinery over the mirrored duals and answers strictly-above queries.
    slopes holds the sorted point x-coordinates for vertical boundaries,
    which are answered exactly.
    """

    eps: Fraction
    n: int
    m_exact: int
    below: CurveStack
    above: CurveStack
    slopes: tuple
    seed: int
    constants: FrozenConstants = DEFAULTS

    @property
    def complexity(self) -> int:
        return self.below.complexity + self.above.complexity


@dataclass(frozen=True)
class LinearStructure:
    """Small-space halfplane counter: tag ladder with exact slab floor.

    Queries resolving below the lowest ladder curve are answered exactly
    against the per-edge slab lists; everything above gets a certified tag.
    Total storage is reported, not bounded (the persistent-structure space
    argument is out of scope).
    """

    eps: Fraction
    n: int
    below: CurveStack
    above: CurveStack
    slopes: tuple
    seed: int
    constants: FrozenConstants = DEFAULTS

    @property
    def m_below(self):
        return self.below.m_base

    @property
    def storage(self) -> int:
        return self.below.storage + self.above.storage


def build_fast(P: PointSet, eps, seed: int, constants: FrozenConstants = DEFAULTS):
    """Fast-query counting structure over a 2-D point set.

    Exact levels 0..M-1 with M = ceil(1/eps^(7/6)), then simplified curves
    near the ladder n_i = floor(M(1+eps)^i), each certified for complexity,
    pairwise disjointness, and tag-window feasibility (resampling up to
    RESAMPLE_CAP).  Every query answer lands within (1 +- eps) of the true
    count; below the ladder, answers are exact.
    """
    eps = frac(eps)
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    n = len(P)
    if n * float(eps) ** (7.0 / 6.0) < 1.0:
        raise ValueError("need n*eps^(7/6) >= 1")
    a, b = _dual_arrays(P)
    m = math.ceil(float(eps) ** (-7.0 / 6.0) - 1e-12)
    below = _build_stack(a, b, eps, derive_seed(seed, "fast", "below"), constants, "fast")
    above = _build_stack(-a, -b, eps, derive_seed(seed, "fast", "above"), constants, "fast")
    slopes = tuple(sorted(int(p[0]) for p in P))
    return FastStructure(
        eps=eps, n=n, m_exact=m, below=below, above=above, slopes=slopes, seed=seed,
        constants=constants,
    )


def build_linear(P: PointSet, eps, seed: int, constants: FrozenConstants = DEFAULTS):
    """Small-space counting structure over a 2-D point set.

    The ladder starts at a random level M in [1/eps^2, 2/eps^2]; queries
    below the lowest ladder curve are answered exactly via the slab lists
    of an exact level certified to lie above it.
    """
    eps = frac(eps)
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    n = len(P)
    if n < 1 / eps / eps:
        raise ValueError("need n >= 1/eps^2")
    a, b = _dual_arrays(P)
    below = _build_stack(a, b, eps, derive_seed(seed, "linear", "below"), constants, "linear")
    above = _build_stack(-a, -b, eps, derive_seed(seed, "linear", "above"), constants, "linear")
    slopes = tuple(sorted(int(p[0]) for p in P))
    return LinearStructure(
        eps=eps, n=n, below=below, above=above, slopes=slopes, seed=seed, constants=constants,
    )


def _vertical_count(slopes, n, dq) -> int:
    if dq.kind == "slope_le":
        return bisect_right(slopes, dq.threshold)
    return n - bisect_left(slopes, dq.threshold)


def _query(structure, h: Halfplane, exact_floor: bool) -> int:
    dq = dualize_halfplane(h)
    if dq.kind in ("slope_le", "slope_ge"):
        return _vertical_count(structure.slopes, structure.n, dq)
    qx, qy = dq.point
    if dq.kind == "above":
        stack, qy = structure.above, -qy
    else:
        stack = structure.below
    if stack.exact_all:
        return _exact_below(stack, qx, qy)
    tag = _stack_tag(stack, qx, qy)
    if tag is not None:
        return tag
    if exact_floor:
        return _slab_count(stack, qx, qy)
    return 0


def query_fast(S: FastStructure, h: Halfplane) -> int:
    """Estimate |h cap P| within relative error eps, exact below the ladder."""
    return _query(S, h, exact_floor=False)


def query_linear(S: LinearStructure, h: Halfplane) -> int:
    """Estimate |h cap P|; exact whenever the dual point falls below the
    lowest ladder curve, within relative eps otherwise."""
    return _query(S, h, exact_floor=True)


def summary_csv(structure) -> str:
    """Per-curve summary of a built structure (both sides) as CSV text."""
    rows = ["side,kind,level,vertices,tag,count_lo,count_hi"]
    for side in ("below", "above"):
        stack = getattr(structure, side)
        for j, c in enumerate(stack.curves):
            kind = "level" if j < stack.gamma_start else "gamma"
            lo, hi = stack.bounds[j]
            rows.append(f"{side},{kind},{c.level_index},{c.complexity},{c.tag},{lo},{hi}")
        if stack.slab_curve is not None:
            c = stack.slab_curve
            rows.append(f"{side},slab,{c.level_index},{c.complexity},,,")
    return "\n".join(rows) + "\n"
