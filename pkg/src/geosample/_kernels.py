"""Chunked exact-integer counting kernels.

The exhaustive verifiers and oracles all reduce to the same inner loop:
classify every ground point against every canonical boundary (pair line in
2-D, triple plane in 3-D) and accumulate weighted counts per side.  The
int64 fast path is used only when the coordinate magnitudes certify that no
intermediate can overflow; otherwise the same loop runs on Python integers,
slower but still exact.
"""

from __future__ import annotations

import numpy as np

from .geometry import GeneralPositionError

# products below stay under 8*B^2 (2-D) and 48*B^3 (3-D)
_PAIR_SAFE_BOUND = 2**29
_TRIPLE_SAFE_BOUND = 2**19

_CHUNK_CELLS = 6_000_000


def pair_chunks(arr: np.ndarray, weights: np.ndarray, check_gp: bool = True):
    """Accumulate `weights` per side of every pair line of a 2-D set.

    arr: (n, 2) int64.  weights: (r, n) int64 rows to accumulate.  Yields
    (start, stop, pos, neg) over pairs in lexicographic (i, j) order, where
    pos/neg have shape (r, stop - start) and count weight strictly on the
    left/right of the directed line i -> j.  Points on the line (only the
    defining pair, in general position) land in neither.
    """
    n = len(arr)
    ii, jj = np.triu_indices(n, k=1)
    if np.abs(arr).max(initial=0) > _PAIR_SAFE_BOUND:
        yield from _pair_chunks_object(arr, weights, ii, jj, check_gp)
        return
    x = arr[:, 0]
    y = arr[:, 1]
    a_all = y[ii] - y[jj]
    b_all = x[jj] - x[ii]
    c_all = a_all * x[ii] + b_all * y[ii]
    wT = weights.T.astype(np.int64)
    chunk = max(1, _CHUNK_CELLS // max(n, 1))
    for start in range(0, len(ii), chunk):
        stop = min(start + chunk, len(ii))
        vals = (
            a_all[start:stop, None] * x[None, :]
            + b_all[start:stop, None] * y[None, :]
            - c_all[start:stop, None]
        )
        posm = vals > 0
        negm = vals < 0
        if check_gp:
            on = n - (posm.sum(axis=1) + negm.sum(axis=1))
            if np.any(on != 2):
                raise GeneralPositionError("collinear triple hit by pair kernel")
        pos = (posm @ wT).T
        neg = (negm @ wT).T
        yield start, stop, pos, neg


def _pair_chunks_object(arr, weights, ii, jj, check_gp):
    n = len(arr)
    pts = [(int(p[0]), int(p[1])) for p in arr]
    w = [[int(v) for v in row] for row in weights]
    r = len(w)
    chunk = 4096
    for start in range(0, len(ii), chunk):
        stop = min(start + chunk, len(ii))
        pos = np.zeros((r, stop - start), dtype=object)
        neg = np.zeros((r, stop - start), dtype=object)
        for t in range(start, stop):
            i, j = int(ii[t]), int(jj[t])
            px, py = pts[i]
            qx, qy = pts[j]
            a, b = py - qy, qx - px
            c = a * px + b * py
            on = 0
            pcol = [0] * r
            ncol = [0] * r
            for s, (sx, sy) in enumerate(pts):
                v = a * sx + b * sy - c
                if v > 0:
                    for k in range(r):
                        pcol[k] += w[k][s]
                elif v < 0:
                    for k in range(r):
                        ncol[k] += w[k][s]
                else:
                    on += 1
            if check_gp and on != 2:
                raise GeneralPositionError("collinear triple hit by pair kernel")
            for k in range(r):
                pos[k, t - start] = pcol[k]
                neg[k, t - start] = ncol[k]
        yield start, stop, pos, neg


def triple_chunks(arr: np.ndarray, weights: np.ndarray, check_gp: bool = True):
    """3-D analog of `pair_chunks` over plane triples.

    Triples are enumerated by increasing k, pairs (i < j < k) lexicographic
    within each k, matching CanonicalHalfspaces.  Yields (start, stop,
    trip_idx, pos, neg) with trip_idx of shape (stop-start, 3).
    """
    n = len(arr)
    if np.abs(arr).max(initial=0) > _TRIPLE_SAFE_BOUND:
        yield from _triple_chunks_object(arr, weights, check_gp)
        return
    wT = weights.T.astype(np.int64)
    chunk = max(1, _CHUNK_CELLS // max(n, 1))
    start = 0
    for k in range(2, n):
        ii_k, jj_k = np.triu_indices(k, k=1)
        for lo in range(0, len(ii_k), chunk):
            hi = min(lo + chunk, len(ii_k))
            ii = ii_k[lo:hi]
            jj = jj_k[lo:hi]
            d1 = arr[jj] - arr[ii]
            d2 = arr[k][None, :] - arr[ii]
            nrm = np.cross(d1, d2)
            e = np.einsum("td,td->t", nrm, arr[ii])
            vals = (
                nrm[:, 0, None] * arr[None, :, 0]
                + nrm[:, 1, None] * arr[None, :, 1]
                + nrm[:, 2, None] * arr[None, :, 2]
                - e[:, None]
            )
            posm = vals > 0
            negm = vals < 0
            if check_gp:
                on = n - (posm.sum(axis=1) + negm.sum(axis=1))
                if np.any(on != 3):
                    raise GeneralPositionError("coplanar quadruple hit by triple kernel")
            pos = (posm @ wT).T
            neg = (negm @ wT).T
            trip = np.stack([ii, jj, np.full(len(ii), k)], axis=1)
            stop = start + len(ii)
            yield start, stop, trip, pos, neg
            start = stop


def _triple_chunks_object(arr, weights, check_gp):
    n = len(arr)
    pts = [tuple(int(v) for v in p) for p in arr]
    w = [[int(v) for v in row] for row in weights]
    r = len(w)
    start = 0
    for k in range(2, n):
        rows = []
        for i in range(k - 1):
            for j in range(i + 1, k):
                rows.append((i, j))
        pos = np.zeros((r, len(rows)), dtype=object)
        neg = np.zeros((r, len(rows)), dtype=object)
        trip = np.zeros((len(rows), 3), dtype=np.int64)
        for t, (i, j) in enumerate(rows):
            p, q, s3 = pts[i], pts[j], pts[k]
            ux, uy, uz = q[0] - p[0], q[1] - p[1], q[2] - p[2]
            vx, vy, vz = s3[0] - p[0], s3[1] - p[1], s3[2] - p[2]
            nx = uy * vz - uz * vy
            ny = uz * vx - ux * vz
            nz = ux * vy - uy * vx
            e = nx * p[0] + ny * p[1] + nz * p[2]
            on = 0
            for si, (sx, sy, sz) in enumerate(pts):
                v = nx * sx + ny * sy + nz * sz - e
                if v > 0:
                    for m in range(r):
                        pos[m, t] += w[m][si]
                elif v < 0:
                    for m in range(r):
                        neg[m, t] += w[m][si]
                else:
                    on += 1
            if check_gp and on != 3:
                raise GeneralPositionError("coplanar quadruple hit by triple kernel")
            trip[t] = (i, j, k)
        stop = start + len(rows)
        yield start, stop, trip, pos, neg
        start = stop


def pair_count(n: int) -> int:
    return n * (n - 1) // 2


def triple_count(n: int) -> int:
    return n * (n - 1) * (n - 2) // 6
