import itertools
from fractions import Fraction

import numpy as np
import pytest

from geosample.datasets import grid_points, uniform_points2d, uniform_points3d
from geosample.geometry import (
    GE,
    LE,
    DualLine,
    GeneralPositionError,
    Halfplane,
    Halfspace,
    PointSet,
    canonical_halfplanes,
    canonical_halfspaces,
    dualize,
    dualize_halfplane,
    dualize_line,
    orient,
    orient3,
    perturb,
    read_points,
    write_points,
)

from _reference import (
    contains_ref,
    induced_subsets,
    realizable_subsets,
    subset_realizable,
)


# ---------------------------------------------------------------------------
# predicates


def test_orient_examples():
    assert orient((0, 0), (1, 0), (0, 1)) == 1
    assert orient((0, 0), (1, 0), (2, 0)) == 0
    assert orient((0, 0), (1, 0), (1, -1)) == -1


def test_orient_antisymmetric():
    pts = uniform_points2d(6, seed=1).points
    for p, q, r in itertools.permutations(pts[:4], 3):
        assert orient(p, q, r) == -orient(q, p, r) == -orient(p, r, q)


def test_orient3_sign_and_coplanar():
    assert orient3((0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1)) == 1
    assert orient3((0, 0, 0), (1, 0, 0), (0, 1, 0), (1, 1, 0)) == 0


# ---------------------------------------------------------------------------
# point sets


def test_pointset_rejects_duplicates_and_bounds():
    with pytest.raises(ValueError):
        PointSet([(0, 0), (0, 0)])
    with pytest.raises(ValueError):
        PointSet([(0, 0), (5, 5)], coord_bound=4)
    with pytest.raises(ValueError):
        PointSet([])


def test_general_position_flags():
    assert not grid_points(3).in_general_position()
    assert uniform_points2d(32, seed=3).in_general_position()
    assert uniform_points3d(16, seed=3).in_general_position()
    with pytest.raises(GeneralPositionError):
        grid_points(3).require_general_position()


def test_perturb_repairs_grid():
    g = grid_points(5)
    fixed = perturb(g, seed=9)
    assert fixed.in_general_position()
    # each point stays within its magnified cell
    assert all(
        max(abs(8 * a - b) for a, b in zip(p, q)) <= 3
        for p, q in zip(g.points, fixed.points)
    )
    assert perturb(g, seed=9) == fixed  # deterministic
    g3 = PointSet([(i, j, 0) for i in range(3) for j in range(3)])
    assert perturb(g3, seed=2).in_general_position()


def test_point_io_roundtrip(tmp_path):
    for ps in (uniform_points2d(17, seed=2), uniform_points3d(9, seed=2)):
        path = tmp_path / "pts.txt"
        write_points(ps, path)
        back = read_points(path)
        assert back == ps and back.coord_bound == ps.coord_bound
        # byte-exact rewrite
        write_points(back, tmp_path / "pts2.txt")
        assert (tmp_path / "pts.txt").read_bytes() == (tmp_path / "pts2.txt").read_bytes()


# ---------------------------------------------------------------------------
# duality


def test_dualize_examples():
    line = dualize((1, 2))
    assert (line.slope, line.intercept) == (1, -2)
    assert dualize_line(dualize((3, 5))) == (3, 5)


def test_duality_preserves_above_below():
    # p above dual(q) iff q above dual(p), exhaustively on 10 points
    pts = uniform_points2d(10, seed=4).points
    for p, q in itertools.permutations(pts, 2):
        lp, lq = dualize(p), dualize(q)
        p_above = Fraction(p[1]) > lq.slope * p[0] + lq.intercept
        q_above = Fraction(q[1]) > lp.slope * q[0] + lp.intercept
        assert p_above == q_above


def _dual_query_count(h, points):
    q = dualize_halfplane(h)
    if q.kind in ("slope_le", "slope_ge"):
        slopes = [Fraction(p[0]) for p in points]
        if q.kind == "slope_le":
            return sum(1 for s in slopes if s <= q.threshold)
        return sum(1 for s in slopes if s >= q.threshold)
    x, y = q.point
    vals = [dualize(p).slope * x + dualize(p).intercept for p in points]
    if q.kind == "below":
        return sum(1 for v in vals if v <= y)
    return sum(1 for v in vals if v >= y)


def test_dualize_halfplane_counts_match_primal():
    P = uniform_points2d(12, seed=5)
    for h in list(canonical_halfplanes(P))[::7]:
        primal = sum(1 for p in P if h.contains(p))
        assert _dual_query_count(h, P.points) == primal


def test_dualize_halfplane_vertical():
    P = PointSet([(0, 0), (2, 1), (5, -1)])
    h = Halfplane(1, 0, 3, LE)  # x <= 3
    q = dualize_halfplane(h)
    assert q.kind == "slope_le" and q.threshold == 3
    assert _dual_query_count(h, P.points) == 2
    with pytest.raises(ValueError):
        dualize_halfplane(Halfplane(0, 0, 1, LE))


# ---------------------------------------------------------------------------
# canonical families


def test_canonical_halfplanes_single_point():
    P = PointSet([(3, 4)])
    fam = canonical_halfplanes(P)
    assert len(fam) == 4
    assert induced_subsets(P.points, fam) == {frozenset(), frozenset({0})}


def test_canonical_halfplanes_two_points():
    P = PointSet([(0, 0), (4, 1)])
    fam = canonical_halfplanes(P)
    assert induced_subsets(P.points, fam) == {
        frozenset(), frozenset({0}), frozenset({1}), frozenset({0, 1})
    }


@pytest.mark.parametrize("n,seed", [(5, 1), (7, 2), (8, 3)])
def test_canonical_halfplanes_complete(n, seed):
    # every halfplane-induced subset appears, and nothing unrealizable does
    P = uniform_points2d(n, seed=seed, coord_bound=64)
    fam = canonical_halfplanes(P)
    assert induced_subsets(P.points, fam) == realizable_subsets(P.points)


def test_canonical_variant_counts_match():
    P = uniform_points2d(9, seed=6)
    fam = canonical_halfplanes(P)
    full = list(range(len(P)))
    for pair_idx in range(fam.n_pairs):
        i, j = fam.pair(pair_idx)
        p, q = P[i], P[j]
        left = sum(1 for r in P if orient(p, q, r) > 0)
        right = sum(1 for r in P if orient(p, q, r) < 0)
        want = fam.variant_counts(left, right, 1, 1)
        got = [
            sum(1 for r in P if fam[8 * pair_idx + v].contains(r))
            for v in range(8)
        ]
        assert got == want


def test_canonical_halfspaces_small():
    P = PointSet([(0, 0, 0), (4, 1, 2), (1, 5, 3)])
    fam = canonical_halfspaces(P)
    assert induced_subsets(P.points, fam) == {
        frozenset(s) for r in range(4) for s in itertools.combinations(range(3), r)
    }


def test_canonical_halfspaces_complete():
    P = uniform_points3d(6, seed=4, coord_bound=32)
    fam = canonical_halfspaces(P)
    assert induced_subsets(P.points, fam) == realizable_subsets(P.points)


def test_realizability_oracle_sanity():
    # square: opposite corners are not halfplane-separable from the rest
    square = [(0, 0), (1, 0), (0, 1), (1, 1)]
    assert not subset_realizable(square, {0, 3})
    assert subset_realizable(square, {0, 1})
    assert subset_realizable(square, set())
    assert subset_realizable(square, {0, 1, 2, 3})


def test_contains_matches_reference():
    P = uniform_points2d(10, seed=7)
    for h in list(canonical_halfplanes(P))[::11]:
        for p in P:
            assert h.contains(p) == contains_ref(h, p)
    Q = uniform_points3d(6, seed=7)
    for h in list(canonical_halfspaces(Q))[::17]:
        for p in Q:
            assert h.contains(p) == contains_ref(h, p)


def test_halfspace_contains():
    h = Halfspace(0, 0, 1, 2, GE)  # z >= 2
    assert h.contains((0, 0, 2)) and h.contains((5, 5, 3))
    assert not h.contains((0, 0, 1))
