"""Brute-force ground truth: exact counters, discrepancy, crossing profiles.

Everything here is a plain loop over points with integer arithmetic, written
independently of the vectorized kernels it audits.  Allowed to be O(n^3);
never imports the construction modules.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

from .geometry import Halfplane, Halfspace, PointSet

__all__ = [
    "exact_count",
    "discrepancy",
    "crossing_profile",
    "CrossingProfile",
]


def exact_count(points: PointSet, h) -> int:
    """Number of points of `points` inside the halfplane/halfspace `h`."""
    return sum(1 for p in points.points if h.contains(p))


def discrepancy(coloring: Sequence[int], points: PointSet, h) -> int:
    """Signed sum of the +-1 coloring over the points inside `h`."""
    if len(coloring) != len(points):
        raise ValueError("coloring length mismatch")
    chi = 0
    for sign, p in zip(coloring, points.points):
        if sign not in (-1, +1):
            raise ValueError("coloring entries must be -1 or +1")
        if h.contains(p):
            chi += sign
    return chi


# Separator side convention: normalize the separator's normal so the last
# nonzero coefficient is positive (earlier coordinates break ties), then call a
# point "above" when it lies strictly on the positive side; points on the
# separator fold into the weak-below side.  An edge is crossed iff its
# endpoints land in different classes.  This is the operational form of the
# global rotation tie-rule, and unlike the raw orientation determinant of the
# defining tuple it does not depend on the tuple's index order.


def _coeffs2(p, q):
    a = p[1] - q[1]
    b = q[0] - p[0]
    c = a * p[0] + b * p[1]
    if b < 0 or (b == 0 and a < 0):
        a, b, c = -a, -b, -c
    return a, b, c


def _side2(coeffs, r) -> bool:
    a, b, c = coeffs
    return a * r[0] + b * r[1] > c


def _coeffs3(p, q, r):
    ux, uy, uz = q[0] - p[0], q[1] - p[1], q[2] - p[2]
    vx, vy, vz = r[0] - p[0], r[1] - p[1], r[2] - p[2]
    na = uy * vz - uz * vy
    nb = uz * vx - ux * vz
    nc = ux * vy - uy * vx
    if nc < 0 or (nc == 0 and (nb < 0 or (nb == 0 and na < 0))):
        na, nb, nc = -na, -nb, -nc
    d = na * p[0] + nb * p[1] + nc * p[2]
    return na, nb, nc, d


def _side3(coeffs, s) -> bool:
    na, nb, nc, d = coeffs
    return na * s[0] + nb * s[1] + nc * s[2] > d


@dataclass
class CrossingProfile:
    """Per-separator (weight, crossings) records plus per-weight maxima."""

    records: List[Tuple[int, int]]
    max_by_weight: Dict[int, int] = field(default_factory=dict)
    lines_by_weight: Dict[int, int] = field(default_factory=dict)

    def __post_init__(self):
        if not self.max_by_weight:
            for w, x in self.records:
                self.max_by_weight[w] = max(self.max_by_weight.get(w, 0), x)
                self.lines_by_weight[w] = self.lines_by_weight.get(w, 0) + 1

    @property
    def max_crossings(self) -> int:
        return max((x for _, x in self.records), default=0)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            out = csv.writer(fh)
            out.writerow(["weight", "max_crossings", "count_of_lines"])
            for w in sorted(self.max_by_weight):
                out.writerow([w, self.max_by_weight[w], self.lines_by_weight[w]])


def crossing_profile(edges: Sequence[Tuple[int, int]], points: PointSet) -> CrossingProfile:
    """Weight and edge-crossing count of every canonical separator.

    Separators are the C(n,2) point-pair lines in the plane and the C(n,3)
    point-triple planes in space.  The weight of a separator is the smaller
    of its two side counts under the tie rule above; an edge is crossed when
    its endpoints separate.
    """
    pts = points.points
    n = len(pts)
    for i, j in edges:
        if not (0 <= i < n and 0 <= j < n):
            raise ValueError("edge endpoint out of range")
    records = []
    if points.dim == 2:
        for a in range(n):
            for b in range(a + 1, n):
                line = _coeffs2(pts[a], pts[b])
                pos = sum(1 for r in pts if _side2(line, r))
                w = min(pos, n - pos)
                x = sum(1 for i, j in edges if _side2(line, pts[i]) != _side2(line, pts[j]))
                records.append((w, x))
    elif points.dim == 3:
        for a in range(n):
            for b in range(a + 1, n):
                for c in range(b + 1, n):
                    plane = _coeffs3(pts[a], pts[b], pts[c])
                    pos = sum(1 for s in pts if _side3(plane, s))
                    w = min(pos, n - pos)
                    x = sum(
                        1
                        for i, j in edges
                        if _side3(plane, pts[i]) != _side3(plane, pts[j])
                    )
                    records.append((w, x))
    else:
        raise ValueError("crossing_profile expects 2-D or 3-D points")
    return CrossingProfile(records=records)
