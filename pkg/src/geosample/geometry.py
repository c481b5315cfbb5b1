"""Exact planar/spatial primitives: points, halfplanes, duality, canonical ranges.

Points are tuples of Python ints.  All predicates are integer arithmetic;
there is no floating point anywhere in a containment or orientation test.
Coordinates are bounded (default 2**20) so the vectorized int64 paths in
`_kernels` are provably overflow-free; range coefficients produced by the
canonical enumerations may be arbitrarily large Python ints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Sequence

import numpy as np

from .rng import substream

__all__ = [
    "LE",
    "GE",
    "DEFAULT_COORD_BOUND",
    "GeneralPositionError",
    "Halfplane",
    "Halfspace",
    "DualLine",
    "PointSet",
    "orient",
    "orient3",
    "dualize",
    "dualize_line",
    "dualize_halfplane",
    "DualQuery",
    "canonical_halfplanes",
    "canonical_halfspaces",
    "CanonicalHalfplanes",
    "CanonicalHalfspaces",
    "write_points",
    "read_points",
    "perturb",
]

LE = "le"
GE = "ge"

DEFAULT_COORD_BOUND = 2**20


class GeneralPositionError(ValueError):
    """Input violates the general-position precondition of a construction."""


def orient(p, q, r) -> int:
    """Sign of the cross product (q-p) x (r-p): +1 left turn, -1 right, 0 collinear."""
    v = (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])
    return (v > 0) - (v < 0)


def orient3(p, q, r, s) -> int:
    """Sign of det[q-p; r-p; s-p]; 0 iff the four points are coplanar."""
    ax, ay, az = q[0] - p[0], q[1] - p[1], q[2] - p[2]
    bx, by, bz = r[0] - p[0], r[1] - p[1], r[2] - p[2]
    cx, cy, cz = s[0] - p[0], s[1] - p[1], s[2] - p[2]
    v = ax * (by * cz - bz * cy) - ay * (bx * cz - bz * cx) + az * (bx * cy - by * cx)
    return (v > 0) - (v < 0)


@dataclass(frozen=True)
class Halfplane:
    """Closed halfplane a*x + b*y <= c (sense 'le') or >= c (sense 'ge')."""

    a: int
    b: int
    c: int
    sense: str = LE

    def value(self, p) -> int:
        return self.a * p[0] + self.b * p[1] - self.c

    def contains(self, p) -> bool:
        v = self.value(p)
        return v <= 0 if self.sense == LE else v >= 0

    def boundary_coeffs(self):
        """(a, b, c) of the boundary line, orientation as stored."""
        return (self.a, self.b, self.c)


@dataclass(frozen=True)
class Halfspace:
    """Closed halfspace a*x + b*y + c*z <= e or >= e."""

    a: int
    b: int
    c: int
    e: int
    sense: str = LE

    def value(self, p) -> int:
        return self.a * p[0] + self.b * p[1] + self.c * p[2] - self.e

    def contains(self, p) -> bool:
        v = self.value(p)
        return v <= 0 if self.sense == LE else v >= 0


@dataclass(frozen=True)
class DualLine:
    """Line y = slope*x + intercept in the dual plane; coefficients exact."""

    slope: Fraction
    intercept: Fraction

    def y_at(self, x):
        return self.slope * x + self.intercept


def dualize(p) -> DualLine:
    """Point (a, b) -> dual line y = a*x - b."""
    return DualLine(Fraction(p[0]), Fraction(-p[1]))


def dualize_line(line: DualLine):
    """Line y = m*x + t -> dual point (m, -t); inverse of `dualize`."""
    return (line.slope, -line.intercept)


@dataclass(frozen=True)
class DualQuery:
    """Dual form of a halfplane count query.

    kind 'below': count dual lines strictly below `point`, plus those through
    it when `closed`; that equals the number of input points in the halfplane.
    kind 'above' is symmetric.  kind 'slope_le'/'slope_ge' covers vertical
    boundaries, where the count is over dual slopes against `threshold`
    (the global rotation convention folds verticals into slope ranks).
    """

    kind: str
    point: tuple | None = None
    threshold: Fraction | None = None
    closed: bool = True


def dualize_halfplane(h: Halfplane) -> DualQuery:
    if h.b != 0:
        # boundary y = m x + t with m = -a/b, t = c/b; dual point (m, -t)
        m = Fraction(-h.a, h.b)
        t = Fraction(h.c, h.b)
        q = (m, -t)
        upper = (h.sense == GE) == (h.b > 0)
        return DualQuery(kind="below" if upper else "above", point=q, closed=True)
    if h.a == 0:
        raise ValueError("degenerate halfplane (a = b = 0)")
    thr = Fraction(h.c, h.a)
    right = (h.sense == GE) == (h.a > 0)
    return DualQuery(kind="slope_ge" if right else "slope_le", threshold=thr, closed=True)


class PointSet:
    """Immutable ordered set of distinct integer points.

    The coordinate bound certifies that the vectorized integer kernels cannot
    overflow; it is part of the on-disk header so round-trips are bit-exact.
    """

    def __init__(self, points, coord_bound: int = DEFAULT_COORD_BOUND):
        pts = [tuple(int(x) for x in p) for p in points]
        if not pts:
            raise ValueError("empty point set")
        dim = len(pts[0])
        if dim not in (2, 3):
            raise ValueError("dimension must be 2 or 3")
        if any(len(p) != dim for p in pts):
            raise ValueError("mixed dimensions")
        if len(set(pts)) != len(pts):
            raise ValueError("duplicate points")
        bound = int(coord_bound)
        worst = max(abs(x) for p in pts for x in p)
        if worst > bound:
            raise ValueError(f"coordinate {worst} exceeds bound {bound}")
        self.points: tuple = tuple(pts)
        self.dim = dim
        self.coord_bound = bound
        self._array = np.array(pts, dtype=np.int64)
        self._gp: bool | None = None

    def __len__(self):
        return len(self.points)

    def __getitem__(self, i):
        return self.points[i]

    def __iter__(self):
        return iter(self.points)

    def __eq__(self, other):
        return isinstance(other, PointSet) and self.points == other.points

    def __hash__(self):
        return hash(self.points)

    def array(self) -> np.ndarray:
        """(n, dim) int64 view; treat as read-only."""
        return self._array

    def subset(self, indices) -> "PointSet":
        idx = [int(i) for i in indices]
        return PointSet([self.points[i] for i in idx], self.coord_bound)

    def in_general_position(self) -> bool:
        if self._gp is None:
            if self.dim == 2:
                self._gp = _no_three_collinear(self.points)
            else:
                self._gp = _no_four_coplanar(self._array)
        return self._gp

    def require_general_position(self):
        if not self.in_general_position():
            what = "collinear triple" if self.dim == 2 else "coplanar quadruple"
            raise GeneralPositionError(f"point set contains a {what}")


def _no_three_collinear(points) -> bool:
    # direction hashing per anchor: a repeated reduced direction means a
    # collinear triple through the anchor
    for i, p in enumerate(points):
        seen = set()
        for q in points[i + 1 :]:
            dx, dy = q[0] - p[0], q[1] - p[1]
            g = math.gcd(abs(dx), abs(dy))
            d = (dx // g, dy // g)
            if d[0] < 0 or (d[0] == 0 and d[1] < 0):
                d = (-d[0], -d[1])
            if d in seen:
                return False
            seen.add(d)
    return True


def _no_four_coplanar(arr: np.ndarray) -> bool:
    n = len(arr)
    if n < 4:
        return True
    for i in range(n - 2):
        base = arr - arr[i]
        for j in range(i + 1, n - 1):
            # normals of planes through (i, j, k); a repeated (reduced,
            # sign-canonical) normal over k > j means a coplanar quadruple
            nrm = np.cross(base[j], base[j + 1 :])
            if nrm.ndim == 1:
                nrm = nrm[None, :]
            g = np.gcd.reduce(np.abs(nrm), axis=1)
            if np.any(g == 0):
                return False  # collinear triple, degenerate too
            nrm = nrm // g[:, None]
            lead = np.where(
                nrm[:, 0] != 0,
                np.sign(nrm[:, 0]),
                np.where(nrm[:, 1] != 0, np.sign(nrm[:, 1]), np.sign(nrm[:, 2])),
            )
            nrm = nrm * lead[:, None]
            if len(np.unique(nrm, axis=0)) != len(nrm):
                return False
    return True


# ---------------------------------------------------------------------------
# canonical range families
#
# Every subset of P cut off by a halfplane is cut off by one whose boundary
# passes through <= 2 points of P, with each boundary point either kept or
# dropped.  Per unordered pair we therefore emit 8 ranges: {left, right} x
# {open, closed, keep-i, keep-j}.  Open/closed come from doubling the
# coefficients and shifting by one; the keep-one variants are honest integer
# halfplanes obtained by rotating the boundary about the kept point by an
# amount too small to move any other point across.  3-D is analogous with
# plane triples and 16 variants.
# ---------------------------------------------------------------------------

_HP_VARIANTS = 8
_HS_VARIANTS = 16


class CanonicalHalfplanes(Sequence):
    """Lazy sequence of the canonical halfplanes of a 2-D point set."""

    def __init__(self, ps: PointSet):
        if ps.dim != 2:
            raise ValueError("expects a 2-D point set")
        ps.require_general_position()
        self.ps = ps
        n = len(ps)
        if n >= 2:
            ii, jj = np.triu_indices(n, k=1)
            self._ii = ii.astype(np.int64)
            self._jj = jj.astype(np.int64)
        else:
            self._ii = np.zeros(0, dtype=np.int64)
            self._jj = np.zeros(0, dtype=np.int64)
        # rotation magnitude: strictly dominates |d . (r - p)| for all r
        self._T = 8 * ps.coord_bound * ps.coord_bound + 1

    @property
    def n_pairs(self) -> int:
        return len(self._ii)

    def __len__(self):
        n = len(self.ps)
        if n == 1:
            return 4
        return _HP_VARIANTS * self.n_pairs

    def pair(self, pair_idx: int):
        return int(self._ii[pair_idx]), int(self._jj[pair_idx])

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return [self[i] for i in range(*idx.indices(len(self)))]
        if idx < 0:
            idx += len(self)
        if not 0 <= idx < len(self):
            raise IndexError(idx)
        if len(self.ps) == 1:
            x0 = self.ps[0][0]
            return [
                Halfplane(2, 0, 2 * x0 + 1, LE),
                Halfplane(2, 0, 2 * x0 - 1, LE),
                Halfplane(2, 0, 2 * x0 - 1, GE),
                Halfplane(2, 0, 2 * x0 + 1, GE),
            ][idx]
        pair_idx, variant = divmod(idx, _HP_VARIANTS)
        i, j = self.pair(pair_idx)
        return self._materialize(i, j, variant)

    def _materialize(self, i: int, j: int, variant: int) -> Halfplane:
        p, q = self.ps[i], self.ps[j]
        dx, dy = q[0] - p[0], q[1] - p[1]
        a, b = -dy, dx  # left normal: a*x + b*y - c = orient(p, q, .)
        c = a * p[0] + b * p[1]
        side, kind = divmod(variant, 4)
        s = 1 if side == 0 else -1  # +1 left, -1 right
        if kind == 0:  # open: strict side only
            return Halfplane(2 * s * a, 2 * s * b, 2 * s * c + 1, GE)
        if kind == 1:  # closed: side plus both boundary points
            return Halfplane(2 * s * a, 2 * s * b, 2 * s * c - 1, GE)
        T = self._T
        if kind == 2:  # keep i, drop j: rotate about p so q leaves the side
            A = T * s * a - dx
            B = T * s * b - dy
            C = T * s * c - (dx * p[0] + dy * p[1])
        else:  # keep j, drop i
            A = T * s * a + dx
            B = T * s * b + dy
            C = T * s * c + (dx * q[0] + dy * q[1])
        return Halfplane(A, B, C, GE)

    def variant_counts(self, left, right, mi, mj):
        """Counts in all 8 variants from strict-side counts and memberships.

        `left`/`right` count subset points strictly on each side of the pair
        line (defining points excluded); `mi`/`mj` are 0/1 membership of the
        endpoints.  Order matches __getitem__.
        """
        both = mi + mj
        return [
            left,
            left + both,
            left + mi,
            left + mj,
            right,
            right + both,
            right + mi,
            right + mj,
        ]


class CanonicalHalfspaces(Sequence):
    """Lazy sequence of the canonical halfspaces of a 3-D point set.

    Triples i < j < k are enumerated by increasing k, pairs (i, j)
    lexicographic within each k (matching the kernel's streaming order); each
    yields 16 variants: {positive, negative} side x boundary subsets of the
    triple.  Inclusion-pattern order: none, all, i, j, k, ij, ik, jk.
    """

    _PATTERNS = [(0, 0, 0), (1, 1, 1), (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, 0, 1), (0, 1, 1)]

    def __init__(self, ps: PointSet):
        if ps.dim != 3:
            raise ValueError("expects a 3-D point set")
        ps.require_general_position()
        if len(ps) < 3:
            raise ValueError("need at least 3 points")
        self.ps = ps
        n = len(ps)
        trips = []
        for k in range(2, n):
            ii, jj = np.triu_indices(k, k=1)
            trips.append(np.stack([ii, jj, np.full(len(ii), k)], axis=1))
        self._trips = np.concatenate(trips, axis=0).astype(np.int64)
        B = ps.coord_bound
        self._T = 576 * B**4 + 1

    @property
    def n_triples(self) -> int:
        return len(self._trips)

    def __len__(self):
        return _HS_VARIANTS * self.n_triples

    def triple(self, t: int):
        i, j, k = self._trips[t]
        return int(i), int(j), int(k)

    def __getitem__(self, idx):
        if isinstance(idx, slice):
            return [self[i] for i in range(*idx.indices(len(self)))]
        if idx < 0:
            idx += len(self)
        if not 0 <= idx < len(self):
            raise IndexError(idx)
        t, variant = divmod(idx, _HS_VARIANTS)
        return self._materialize(t, variant)

    def _materialize(self, t: int, variant: int) -> Halfspace:
        i, j, k = self.triple(t)
        p, q, r = self.ps[i], self.ps[j], self.ps[k]
        u = (q[0] - p[0], q[1] - p[1], q[2] - p[2])
        v = (r[0] - p[0], r[1] - p[1], r[2] - p[2])
        nx = u[1] * v[2] - u[2] * v[1]
        ny = u[2] * v[0] - u[0] * v[2]
        nz = u[0] * v[1] - u[1] * v[0]
        e = nx * p[0] + ny * p[1] + nz * p[2]
        side, pat = divmod(variant, 8)
        s = 1 if side == 0 else -1
        A, B, C, E = s * nx, s * ny, s * nz, s * e
        keep = self._PATTERNS[pat]
        if keep == (0, 0, 0):
            return Halfspace(2 * A, 2 * B, 2 * C, 2 * E + 1, GE)
        if keep == (1, 1, 1):
            return Halfspace(2 * A, 2 * B, 2 * C, 2 * E - 1, GE)
        # mixed: add a small affine g with the requested signs on the triple
        sig = [1 if keep[m] else -1 for m in range(3)]
        g = _signed_functional((p, q, r), (nx, ny, nz), sig)
        T = self._T
        return Halfspace(T * A + g[0], T * B + g[1], T * C + g[2], T * E - g[3], GE)


def _signed_functional(triple, nvec, sig):
    """Integer affine functional with prescribed signs on a plane triple.

    Returns (gx, gy, gz, g0) with g(x) = gx*x + gy*y + gz*z + g0; |g| on any
    point within the coordinate bound is < 576*B^4, matching the T used by
    the caller.
    """
    p, q, r = triple
    out = [0, 0, 0, 0]
    for target, a0, a1 in ((p, q, r), (q, r, p), (r, p, q)):
        d = (a1[0] - a0[0], a1[1] - a0[1], a1[2] - a0[2])
        wx = d[1] * nvec[2] - d[2] * nvec[1]
        wy = d[2] * nvec[0] - d[0] * nvec[2]
        wz = d[0] * nvec[1] - d[1] * nvec[0]
        w0 = -(wx * a0[0] + wy * a0[1] + wz * a0[2])
        val = wx * target[0] + wy * target[1] + wz * target[2] + w0
        assert val != 0
        s = sig[(p, q, r).index(target)] * (1 if val > 0 else -1)
        out[0] += s * wx
        out[1] += s * wy
        out[2] += s * wz
        out[3] += s * w0
    return tuple(out)


def canonical_halfplanes(ps: PointSet) -> CanonicalHalfplanes:
    """All halfplane ranges needed to realize every induced subset of ps."""
    return CanonicalHalfplanes(ps)


def canonical_halfspaces(ps: PointSet) -> CanonicalHalfspaces:
    return CanonicalHalfspaces(ps)


# ---------------------------------------------------------------------------
# serialization: header "dim n coord_bound", one point per line
# ---------------------------------------------------------------------------


def write_points(ps: PointSet, path):
    with open(path, "w") as fh:
        fh.write(f"{ps.dim} {len(ps)} {ps.coord_bound}\n")
        for p in ps:
            fh.write(" ".join(str(x) for x in p) + "\n")


def read_points(path) -> PointSet:
    with open(path) as fh:
        head = fh.readline().split()
        if len(head) != 3:
            raise ValueError("bad point-set header")
        dim, n, bound = (int(x) for x in head)
        pts = []
        for _ in range(n):
            row = fh.readline().split()
            if len(row) != dim:
                raise ValueError("bad point row")
            pts.append(tuple(int(x) for x in row))
    return PointSet(pts, coord_bound=bound)


def perturb(ps: PointSet, seed: int, radius: int = 3) -> PointSet:
    """Deterministic jitter that repairs degenerate inputs.

    Coordinates are magnified by 2*radius + 2 before jittering, so every
    point keeps a private cell: axis orders are preserved and the jitter has
    room to break collinearities (unit-spaced grids admit no general-position
    placement at their own scale).  Draws that stay degenerate against the
    prefix are redone.  Not for random-looking data, just to unstick grids
    and other degenerate inputs.
    """
    rng = substream(seed, "perturb")
    scale = 2 * radius + 2
    bound = scale * ps.coord_bound + radius
    out: list[tuple] = []
    for p in ps:
        for attempt in range(64):
            off = rng.integers(-radius, radius + 1, size=ps.dim)
            cand = tuple(int(scale * p[d] + off[d]) for d in range(ps.dim))
            if cand in out:
                continue
            if ps.dim == 2 and any(
                orient(out[i], out[j], cand) == 0 for i in range(len(out)) for j in range(i + 1, len(out))
            ):
                continue
            if ps.dim == 3 and len(out) >= 3 and _hits_plane(out, cand):
                continue
            out.append(cand)
            break
        else:
            raise GeneralPositionError("perturbation failed to separate input")
    return PointSet(out, coord_bound=bound)


def _hits_plane(prefix, cand) -> bool:
    m = len(prefix)
    for i in range(m):
        for j in range(i + 1, m):
            for k in range(j + 1, m):
                if orient3(prefix[i], prefix[j], prefix[k], cand) == 0:
                    return True
    return False
