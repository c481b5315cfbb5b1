"""Tests for matching colorings, certified halving, and the sample builders."""

import math
from fractions import Fraction as F

import numpy as np
import pytest

from geosample.constants import DEFAULTS
from geosample.datasets import uniform_points2d
from geosample.geometry import Halfplane, PointSet
from geosample.halving import (
    CHAIN_RETRY_CAP,
    Coloring,
    HalvingChain,
    build_nu_alpha_sample,
    build_relative_approx,
    build_sensitive_improved,
    color_by_matching,
    coloring_certificate,
    certified_coloring,
    discrepancy_bound,
    halve,
    halving_threshold,
    improved_sensitive_report,
    read_chain,
    sensitive_threshold,
    write_chain,
)
from geosample.oracles import discrepancy
from geosample.sampling import (
    NU_ALPHA,
    RELATIVE_APPROX,
    SampleParams,
    halfplane_space,
    measure,
    random_sample_size,
    verify,
)
from geosample.spanning import Matching, relative_crossing_tree, tree_to_matching


def pair_variant_counts(P, vec):
    """(dot, count) over the eight boundary splits of every pair line.

    For each line through two points the splits are: strictly above, weakly
    above, strictly above plus one defining point, and the three mirror
    splits below.  On a general-position set this is exactly the canonical
    halfplane family.  `dot` is vec summed over the split, `count` its size.
    """
    arr = np.asarray(P.points, dtype=np.int64)
    x, y = arr[:, 0], arr[:, 1]
    n = len(P)
    v = np.asarray(vec, dtype=np.int64)
    total = int(v.sum())
    ii, jj = np.triu_indices(n, k=1)
    A = y[ii] - y[jj]
    B = x[jj] - x[ii]
    C = A * x[ii] + B * y[ii]
    V = A[:, None] * x[None, :] + B[:, None] * y[None, :] - C[:, None]
    strict = V > 0
    on = V == 0
    S = strict @ v
    W = strict.sum(axis=1)
    Son = on @ v
    Won = on.sum(axis=1)
    vi, vj = v[ii], v[jj]
    out = []
    for dot, cnt in (
        (S, W),
        (S + Son, W + Won),
        (S + vi, W + 1),
        (S + vj, W + 1),
        (total - S - Son, n - W - Won),
        (total - S, n - W),
        (total - S - Son + vi, n - W - Won + 1),
        (total - S - Son + vj, n - W - Won + 1),
    ):
        out.append((dot, cnt))
    return out


# coloring ------------------------------------------------------------------


def test_color_by_matching_two_points():
    P = PointSet([(0, 0), (3, 1)])
    M = Matching(pairs=((0, 1),))
    col = color_by_matching(P, M, seed=1)
    assert sorted(col.signs) == [-1, 1]
    assert col.balance == 0


def test_color_by_matching_balance_and_determinism():
    P = uniform_points2d(32, seed=4)
    M = tree_to_matching(relative_crossing_tree(P), P)
    col = color_by_matching(P, M, seed=9)
    assert col.balance == 0
    for u, v in M.pairs:
        assert col.signs[u] == -col.signs[v]
    assert color_by_matching(P, M, seed=9).signs == col.signs
    assert color_by_matching(P, M, seed=10).signs != col.signs


def test_color_rejects_imperfect_matching():
    P = uniform_points2d(6, seed=1)
    with pytest.raises(ValueError):
        color_by_matching(P, Matching(pairs=((0, 1), (2, 3))), seed=0)
    with pytest.raises(ValueError):
        color_by_matching(P, Matching(pairs=((0, 1), (2, 3), (4, 6))), seed=0)


def test_coloring_class_validates_signs():
    with pytest.raises(ValueError):
        Coloring(signs=(1, 0, -1), seed=0)


def test_certified_coloring_bound_holds_exhaustively():
    n = 256
    P = uniform_points2d(n, seed=12)
    col = certified_coloring(P, seed=3)
    signs = np.asarray(col.signs)
    assert int(signs.sum()) == 0
    for chi, w in pair_variant_counts(P, signs):
        bound = DEFAULTS.c_disc * np.maximum(w, 0) ** 0.25 * math.log(n + 2) \
            + DEFAULTS.c_disc
        assert (np.abs(chi) <= bound).all()


def test_coloring_complement_symmetry():
    P = uniform_points2d(32, seed=4)
    col = certified_coloring(P, seed=5)
    h = Halfplane(3, 5, 11, "ge")
    hc = Halfplane(3, 5, 10, "le")  # complement over integer points
    assert discrepancy(col.signs, P, h) == -discrepancy(col.signs, P, hc)
    full = Halfplane(0, 1, -(10**9), "ge")
    assert discrepancy(col.signs, P, full) == 0


def test_coloring_certificate_flags_lopsided_coloring():
    P = uniform_points2d(64, seed=2)
    xs = sorted(p[0] for p in P.points)
    median = xs[32]
    signs = tuple(-1 if p[0] < median else +1 for p in P.points)
    bad = Coloring(signs=signs, seed=0)
    rep = coloring_certificate(P, bad)
    assert not rep.holds
    assert rep.max_abs >= 32  # a vertical split sees one full color class
    good = certified_coloring(P, seed=1)
    assert coloring_certificate(P, good).holds


def test_discrepancy_bound_formula():
    got = discrepancy_bound(16, 64)
    want = DEFAULTS.c_disc * 2.0 * math.log(66) + DEFAULTS.c_disc
    assert got == pytest.approx(want)
    assert discrepancy_bound(0, 64) == pytest.approx(DEFAULTS.c_disc * (1 + 0))
    assert discrepancy_bound(81, 64) > discrepancy_bound(16, 64)


# halve ---------------------------------------------------------------------


def test_halve_sizes_and_determinism():
    P4 = uniform_points2d(4, seed=3)
    assert len(halve(P4, seed=1)) == 2
    P8 = uniform_points2d(8, seed=3)
    H8 = halve(P8, seed=1)
    assert len(H8) == 4
    assert halve(P8, seed=1).points == H8.points
    assert set(H8.points) < set(P8.points)


def test_halve_odd_alternates_rounding():
    P9 = uniform_points2d(9, seed=6)
    up = halve(P9, seed=2, round_index=0)
    down = halve(P9, seed=2, round_index=1)
    assert len(up) == 5  # straggler joins on even rounds
    assert len(down) == 4
    assert P9.points[8] in up.points
    assert P9.points[8] not in down.points


def test_halve_drift_bounded_by_certificate():
    n = 64
    P = uniform_points2d(n, seed=7)
    H = halve(P, seed=11)
    kept = {p: 1 for p in H.points}
    member = np.array([kept.get(p, 0) for p in P.points], dtype=np.int64)
    signs = 1 - 2 * member  # kept points carry -1
    for chi, w in pair_variant_counts(P, signs):
        bound = DEFAULTS.c_disc * np.maximum(w, 0) ** 0.25 * math.log(n + 2) \
            + DEFAULTS.c_disc
        assert (np.abs(chi) <= bound).all()
        # drift identity: |measure drift| = |chi| / n
        k = (w - chi) // 2
        drift = np.abs(k / (n / 2) - w / n)
        assert np.allclose(drift, np.abs(chi) / n)


def test_halving_telescopes_exactly():
    P = uniform_points2d(32, seed=9)
    H = halve(P, seed=4)
    removed = [p for p in P.points if p not in set(H.points)]
    R = PointSet(removed, coord_bound=P.coord_bound)
    space = halfplane_space(P)
    for t in range(0, len(space.ranges), 97):
        r = space.ranges[t]
        assert measure(P.points, r) == (
            measure(H.points, r) + measure(R.points, r)
        ) / 2


# thresholds ----------------------------------------------------------------


def test_threshold_formulas():
    nu, alpha = 0.25, 0.25
    want = DEFAULTS.c_halving / (nu * alpha ** (4 / 3)) \
        * math.log(math.e / (alpha * nu)) ** (4 / 3)
    assert halving_threshold(F(1, 4), F(1, 4)) == pytest.approx(want)
    want_s = DEFAULTS.c_sensitive * 4 * math.log(2 * math.e) ** (4 / 3)
    assert sensitive_threshold(F(1, 2)) == pytest.approx(want_s)


# builders ------------------------------------------------------------------


def test_build_nu_alpha_threshold_above_n_returns_ground():
    P = uniform_points2d(128, seed=5)
    tau = halving_threshold(F(1, 8), F(1, 8))
    assert tau > 128
    chain = build_nu_alpha_sample(P, F(1, 8), F(1, 8), seed=3)
    assert len(chain.levels) == 1
    assert list(chain.final_indices) == list(range(128))
    assert chain.seeds == ()


def test_build_nu_alpha_n64():
    P = uniform_points2d(64, seed=10)
    nu, alpha = F(1, 4), F(1, 4)
    chain = build_nu_alpha_sample(P, nu, alpha, seed=8)
    sizes = [len(lev) for lev in chain.levels]
    assert sizes == [64, 32]
    tau = halving_threshold(nu, alpha)
    cap = 1 << int(math.floor(math.log2(2 * tau)))
    assert sizes[-1] <= cap
    # independent verification of the (nu, alpha) guarantee on every split
    member = np.zeros(64, dtype=np.int64)
    member[chain.final_indices] = 1
    m = member.sum()
    for k, w in pair_variant_counts(P, member):
        for kk, ww in zip(k.tolist(), w.tolist()):
            zbar = F(int(kk), int(m))
            xbar = F(int(ww), 64)
            assert abs(xbar - zbar) < alpha * (xbar + zbar + nu)


def test_build_relative_approx_n512():
    P = uniform_points2d(512, seed=2)
    p, eps = F(1, 8), F(1, 2)
    chain = build_relative_approx(P, p, eps, seed=7)
    assert [len(lev) for lev in chain.levels] == [512, 256]
    space = halfplane_space(P)
    rep = verify(RELATIVE_APPROX, chain.final_indices, space,
                 SampleParams(p=p, eps=eps))
    assert rep.holds
    # a relative (p, eps)-approximation stays one for any larger eps
    rep2 = verify(RELATIVE_APPROX, chain.final_indices, space,
                  SampleParams(p=p, eps=F(3, 4)))
    assert rep2.holds
    assert chain.meta["label"] == "eps=1/2;p=1/8;q=1/10"


def test_halved_size_beats_random_sample_formula():
    # at (eps=1/8, p=1/8, n=2^14) the halving stopping rule wins outright
    p, eps = F(1, 8), F(1, 8)
    tau = halving_threshold(p, eps / 4)
    built = 1 << int(math.floor(math.log2(2 * tau)))
    rand = random_sample_size(
        RELATIVE_APPROX, SampleParams(p=p, eps=eps, fail_prob=F(1, 10)), 3)
    assert built < rand <= 2 ** 14


def test_build_sensitive_improved_n256():
    P = uniform_points2d(256, seed=14)
    eps = F(1, 2)
    chain = build_sensitive_improved(P, eps, seed=6)
    assert [len(lev) for lev in chain.levels] == [256, 128, 64, 32]
    member = np.zeros(256, dtype=np.int64)
    member[chain.final_indices] = 1
    m = int(member.sum())
    e2 = eps * eps
    for k, w in pair_variant_counts(P, member):
        for kk, ww in zip(k.tolist(), w.tolist()):
            xbar = F(int(ww), 256)
            t = abs(F(int(kk), m) - xbar) - e2 / 2
            assert t <= 0 or t ** 4 <= (e2 ** 3 / 16) * xbar
            if xbar > e2:  # the sharpened bound implies the standard one
                assert t <= 0 or t ** 2 <= (e2 / 4) * xbar


def test_improved_sensitive_report_matches_reference():
    P = uniform_points2d(32, seed=8)
    space = halfplane_space(P)
    eps = F(1, 2)
    e2 = eps * eps
    rng = np.random.default_rng(5)
    for m in (4, 8, 16, 32):
        idx = np.sort(rng.choice(32, size=m, replace=False))
        member = np.zeros(32, dtype=np.int64)
        member[idx] = 1
        ok = True
        for k, w in pair_variant_counts(P, member):
            for kk, ww in zip(k.tolist(), w.tolist()):
                t = abs(F(int(kk), m) - F(int(ww), 32)) - e2 / 2
                if t > 0 and t ** 4 > (e2 ** 3 / 16) * F(int(ww), 32):
                    ok = False
        rep = improved_sensitive_report(idx, space, eps)
        assert rep.holds == ok
    with pytest.raises(ValueError):
        improved_sensitive_report(np.array([], dtype=np.int64), space, eps)


def test_improved_report_trivial_ranges():
    P = uniform_points2d(16, seed=3)
    space = halfplane_space(P)
    rep = improved_sensitive_report(np.arange(16), space, F(1, 4))
    assert rep.holds  # identity sample: every range has X = Z
    assert rep.worst_violation <= 0


# chain IO ------------------------------------------------------------------


def test_chain_roundtrip(tmp_path):
    P = uniform_points2d(64, seed=10)
    chain = build_nu_alpha_sample(P, F(1, 4), F(1, 2), seed=8)
    assert len(chain.levels) >= 3  # real halving rounds
    path = tmp_path / "chain.txt"
    write_chain(path, chain, source="unit test")
    back = read_chain(path)
    assert back.kind == chain.kind
    assert back.n_ground == chain.n_ground
    assert back.levels == chain.levels
    assert back.seeds == chain.seeds
    assert back.meta["label"] == chain.meta["label"]
    assert back.constants.c_disc == chain.constants.c_disc


def test_chain_rejects_corruption(tmp_path):
    P = uniform_points2d(64, seed=10)
    chain = build_nu_alpha_sample(P, F(1, 4), F(1, 2), seed=8)
    path = tmp_path / "chain.txt"
    write_chain(path, chain, source="unit test")
    lines = path.read_text().splitlines()
    # dropping one index from the last level breaks the halving invariant
    lines[-1] = " ".join(lines[-1].split()[:-1])
    bad = tmp_path / "bad.txt"
    bad.write_text("\n".join(lines) + "\n")
    with pytest.raises(ValueError):
        read_chain(bad)


def test_chain_class_validates():
    with pytest.raises(ValueError):
        HalvingChain(kind="x", n_ground=4, levels=((0, 1, 2, 3), (0, 5)),
                     seeds=(1,), certificates=(None,))
    with pytest.raises(ValueError):
        HalvingChain(kind="x", n_ground=4, levels=((0, 1, 2, 3), (0, 1)),
                     seeds=(), certificates=())


def test_trim_warning_for_non_power_of_two():
    P = uniform_points2d(48, seed=4)
    with pytest.warns(UserWarning, match="trimming"):
        chain = build_nu_alpha_sample(P, F(1, 4), F(1, 2), seed=2)
    assert len(chain.levels[0]) == 32
    assert chain.meta["trimmed"] == 1
    assert CHAIN_RETRY_CAP >= chain.meta["attempt"] + 1
