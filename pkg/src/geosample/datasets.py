"""Deterministic point-set generators for experiments and tests.

All generators are pure functions of their arguments; randomness flows
through named substreams of a single seed.  The uniform generators do
rejection sampling to guarantee general position (and, in the plane,
distinct x-coordinates so that dual slopes are distinct); the grid and
paraboloid generators are intentionally degenerate and skip those checks.
"""

from __future__ import annotations

import math
from typing import List, Tuple

import numpy as np

from .geometry import DEFAULT_COORD_BOUND, PointSet
from .rng import substream

__all__ = [
    "uniform_points2d",
    "uniform_points3d",
    "grid_points",
    "convex_points",
    "paraboloid_grid",
    "row_block_partition",
    "grid_block_partition",
]

_MAX_DRAWS = 64  # rejection draws per accepted point before giving up


def _canonical_rows(vecs: np.ndarray) -> np.ndarray:
    # gcd-reduce each row and fix the sign of the first nonzero entry
    g = np.gcd.reduce(np.abs(vecs), axis=1)
    g = np.maximum(g, 1)
    red = vecs // g[:, None]
    lead = np.zeros(len(red), dtype=np.int64)
    for col in range(red.shape[1]):
        lead = np.where(lead == 0, red[:, col], lead)
    return red * np.where(lead < 0, -1, 1)[:, None]


def uniform_points2d(n: int, seed: int, coord_bound: int = DEFAULT_COORD_BOUND) -> PointSet:
    """n integer points uniform in [-B, B]^2, distinct x, no 3 collinear."""
    rng = substream(seed, "datasets", "uniform2d")
    if n > 2 * coord_bound:
        raise ValueError("coordinate range cannot host n distinct abscissas")
    pts: List[Tuple[int, int]] = []
    xs_seen = set()
    dirs: List[set] = []  # dirs[a] = reduced directions from point a
    draws = 0
    while len(pts) < n:
        draws += 1
        if draws > _MAX_DRAWS * max(n, 1):
            raise RuntimeError("rejection sampling stalled; lower n or raise the bound")
        cx, cy = (int(v) for v in rng.integers(-coord_bound, coord_bound + 1, size=2))
        if cx in xs_seen:
            continue
        if pts:
            arr = np.array(pts, dtype=np.int64)
            red = _canonical_rows(np.array([cx, cy], dtype=np.int64) - arr)
            cols = [tuple(row) for row in red]
            if any(c in dirs[a] for a, c in enumerate(cols)):
                continue
        else:
            cols = []
        for a, c in enumerate(cols):
            dirs[a].add(c)
        dirs.append(set(cols))
        pts.append((cx, cy))
        xs_seen.add(cx)
    return PointSet(pts, coord_bound=coord_bound)


def uniform_points3d(n: int, seed: int, coord_bound: int = 1024) -> PointSet:
    """n integer points uniform in [-B, B]^3 with no 4 coplanar.

    A candidate c is admissible iff the gcd-reduced normals (p_i - c) x (p_j - c)
    over all accepted pairs are nonzero and pairwise distinct: a zero normal is a
    collinear triple, a repeat is a coplanar quadruple through c.  Quadruples not
    involving c were admissible when their own last point was accepted.
    """
    rng = substream(seed, "datasets", "uniform3d")
    pts: List[Tuple[int, int, int]] = []
    draws = 0
    while len(pts) < n:
        draws += 1
        if draws > _MAX_DRAWS * max(n, 1):
            raise RuntimeError("rejection sampling stalled; lower n or raise the bound")
        c = np.array([int(v) for v in rng.integers(-coord_bound, coord_bound + 1, size=3)],
                     dtype=np.int64)
        m = len(pts)
        if m >= 2:
            arr = np.array(pts, dtype=np.int64) - c[None, :]
            ii, jj = np.triu_indices(m, k=1)
            normals = np.cross(arr[ii], arr[jj])
            if np.any(np.all(normals == 0, axis=1)):
                continue
            red = _canonical_rows(normals)
            uniq = np.unique(red, axis=0)
            if len(uniq) != len(red):
                continue
        elif m == 1 and all(int(v) == 0 for v in (np.array(pts[0]) - c)):
            continue
        pts.append((int(c[0]), int(c[1]), int(c[2])))
    return PointSet(pts, coord_bound=coord_bound)


def grid_points(m: int) -> PointSet:
    """The m x m integer grid {1..m}^2; deliberately degenerate."""
    if m < 1:
        raise ValueError("m must be positive")
    pts = [(i, j) for i in range(1, m + 1) for j in range(1, m + 1)]
    return PointSet(pts, coord_bound=max(m, 1))


def convex_points(n: int, seed: int, coord_bound: int = DEFAULT_COORD_BOUND) -> PointSet:
    """n points in convex position on the parabola y = x^2."""
    half = math.isqrt(coord_bound)
    if n > 2 * half:
        raise ValueError("parabola support too small for n points")
    rng = substream(seed, "datasets", "convex")
    xs = rng.choice(np.arange(-half, half, dtype=np.int64), size=n, replace=False)
    xs = np.sort(xs)
    pts = [(int(x), int(x) * int(x)) for x in xs]
    return PointSet(pts, coord_bound=coord_bound)


def paraboloid_grid(m: int) -> PointSet:
    """The lifted grid {(i, j, i^2 + j^2) : i, j = 1..m} in convex position."""
    if m < 1:
        raise ValueError("m must be positive")
    pts = [(i, j, i * i + j * j) for i in range(1, m + 1) for j in range(1, m + 1)]
    return PointSet(pts, coord_bound=max(2 * m * m, 1))


# partitions of the m x m grid index space (cell (i, j) -> (i-1)*m + (j-1)),
# for the plane-crossing experiments on the lifted grid


def row_block_partition(m: int, k: int) -> List[List[int]]:
    """k parts of m/k consecutive grid rows each (m divisible by k)."""
    if k < 1 or m % k != 0:
        raise ValueError("k must divide m")
    h = m // k
    return [
        [i * m + j for i in range(t * h, (t + 1) * h) for j in range(m)]
        for t in range(k)
    ]


def grid_block_partition(m: int, k: int) -> List[List[int]]:
    """k near-square rectangular blocks tiling the m x m grid.

    The block grid is gx x gy with gx the largest divisor of k at most
    sqrt(k) that yields integer block sides; parts are equal-size
    rectangles, so the comparable-size requirement holds with slack.
    """
    gx = None
    for d in range(math.isqrt(k), 0, -1):
        if k % d == 0 and m % d == 0 and m % (k // d) == 0:
            gx = d
            break
    if gx is None:
        raise ValueError("no rectangular block tiling for this (m, k)")
    gy = k // gx
    w, h = m // gx, m // gy
    parts: List[List[int]] = [[] for _ in range(k)]
    for i in range(m):
        for j in range(m):
            parts[(i // w) * gy + (j // h)].append(i * m + j)
    return parts
