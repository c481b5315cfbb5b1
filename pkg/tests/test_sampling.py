import math
from fractions import Fraction

import numpy as np
import pytest

from geosample.datasets import grid_points, uniform_points2d
from geosample.geometry import Halfplane, PointSet, perturb
from geosample.rng import derive_seed, substream
from geosample.sampling import (
    EPS_APPROX,
    EPS_NET,
    NOTIONS,
    NU_ALPHA,
    RELATIVE_APPROX,
    SENSITIVE_APPROX,
    SampleParams,
    convert_check,
    d_nu,
    draw_random,
    halfplane_space,
    measure,
    random_sample_size,
    verify,
)

from _reference import (
    holds_eps_approx,
    holds_eps_net,
    holds_nu_alpha,
    holds_relative,
    holds_sensitive,
)

F = Fraction


# ---------------------------------------------------------------------------
# measure and the metric


def test_measure_examples():
    square = PointSet([(0, 0), (1, 0), (0, 1), (1, 1)])
    low = Halfplane(0, 1, 0, "le")  # y <= 0
    assert measure(square, low) == F(1, 2)
    assert measure(square, Halfplane(0, 1, -5, "le")) == 0
    assert measure(square, Halfplane(0, 1, 5, "le")) == 1
    with pytest.raises(ValueError):
        measure([], low)


def test_d_nu_examples():
    assert d_nu(F(1, 10), F(1, 2), F(1, 2)) == 0
    assert d_nu(F(2, 5), F(1, 5), F(2, 5)) == F(1, 5)
    assert d_nu(1, 0, 1) == F(1, 2)
    with pytest.raises(ValueError):
        d_nu(0, 1, 1)


def test_d_nu_triangle_inequality():
    rng = substream(7, "dnu-triangle")
    for _ in range(1000):
        r, s, t = (F(int(v), 64) for v in rng.integers(0, 128, size=3))
        nu = F(int(rng.integers(1, 64)), 64)
        assert d_nu(nu, r, t) <= d_nu(nu, r, s) + d_nu(nu, s, t)


def test_d_nu_interval_corollary():
    # |s-m| <= D implies d_nu < alpha implies |s-m| <= D' = D(1+a)/(1-a)
    rng = substream(8, "dnu-interval")
    checked = 0
    for _ in range(1000):
        m, s = (F(int(v), 64) for v in rng.integers(0, 128, size=2))
        nu = F(int(rng.integers(1, 64)), 64)
        alpha = F(int(rng.integers(1, 32)), 32)
        if alpha >= 1:
            continue
        delta = 2 * alpha / (1 + alpha) * m + alpha * nu / (1 + alpha)
        delta_p = (1 + alpha) / (1 - alpha) * delta
        if abs(s - m) <= delta:
            assert d_nu(nu, m, s) < alpha
            checked += 1
        if d_nu(nu, m, s) < alpha:
            assert abs(s - m) <= delta_p
    assert checked > 50


# ---------------------------------------------------------------------------
# verify against the reference predicates


def _space64():
    return halfplane_space(uniform_points2d(64, seed=21))


@pytest.mark.parametrize("notion", NOTIONS)
def test_identity_sample_always_holds(notion):
    space = _space64()
    params = SampleParams(eps=F(1, 8), p=F(1, 8), nu=F(1, 8), alpha=F(1, 8))
    assert verify(notion, np.arange(64), space, params).holds


def test_empty_sample_fails_eps_net():
    space = _space64()
    report = verify(EPS_NET, np.array([], dtype=int), space,
                    SampleParams(eps=F(1, 4)))
    assert not report.holds and report.worst_violation >= 0


def test_verify_matches_reference_loop():
    # the spec's grid fixture, unstuck so canonical enumeration accepts it
    P = perturb(grid_points(8), seed=5)
    space = halfplane_space(P)
    rng = substream(9, "verify-ref")
    sample = np.sort(rng.choice(64, size=16, replace=False))
    spts = [P.points[i] for i in sample]
    ranges = list(space.ranges)
    checks = [
        (RELATIVE_APPROX, SampleParams(p=F(1, 4), eps=F(1, 2)),
         lambda: holds_relative(P.points, spts, ranges, F(1, 4), F(1, 2))),
        (EPS_APPROX, SampleParams(eps=F(1, 4)),
         lambda: holds_eps_approx(P.points, spts, ranges, F(1, 4))),
        (EPS_NET, SampleParams(eps=F(1, 4)),
         lambda: holds_eps_net(P.points, spts, ranges, F(1, 4))),
        (SENSITIVE_APPROX, SampleParams(eps=F(1, 2)),
         lambda: holds_sensitive(P.points, spts, ranges, F(1, 2))),
        (NU_ALPHA, SampleParams(nu=F(1, 4), alpha=F(1, 2)),
         lambda: holds_nu_alpha(P.points, spts, ranges, F(1, 4), F(1, 2))),
    ]
    for notion, params, ref in checks:
        assert verify(notion, sample, space, params).holds == ref(), notion


def test_verify_rejects_bad_input():
    space = _space64()
    with pytest.raises(ValueError):
        verify(EPS_APPROX, [1, 2, 999], space, SampleParams(eps=F(1, 2)))
    with pytest.raises(ValueError):
        verify(EPS_APPROX, [], space, SampleParams(eps=F(1, 2)))
    with pytest.raises(ValueError):
        verify("bogus", [0], space, SampleParams(eps=F(1, 2)))


def test_monotone_in_eps():
    space = _space64()
    rng = substream(10, "mono")
    sample = rng.choice(64, size=12, replace=False)
    last = False
    for k in range(1, 8):
        holds = verify(EPS_APPROX, sample, space,
                       SampleParams(eps=F(k, 8))).holds
        assert holds >= last
        last = holds
    # 12 of 64 points: the additive error tops out at 52/64 < 7/8
    assert last
    # alpha monotonicity for the metric notion
    last = False
    for k in range(1, 8):
        holds = verify(NU_ALPHA, sample, space,
                       SampleParams(nu=F(1, 8), alpha=F(k, 8))).holds
        assert holds >= last
        last = holds


# ---------------------------------------------------------------------------
# sizes and random draws


def test_size_formula_frozen_values():
    params = SampleParams(nu=F(1, 4), alpha=F(1, 2), fail_prob=F(1, 10))
    assert random_sample_size(NU_ALPHA, params, vc_dim=3) == 104
    # recompute independently
    want = math.ceil((1 / (0.5**2 * 0.25)) * (3 * math.log(4) + math.log(10)))
    assert want == 104


def test_size_formula_requires_params():
    with pytest.raises(ValueError):
        random_sample_size(RELATIVE_APPROX, SampleParams(eps=F(1, 2)), 3)
    with pytest.raises(ValueError):
        random_sample_size(NU_ALPHA, SampleParams(eps=F(1, 2)), 3)


def test_draw_random_caps_at_ground():
    space = _space64()
    params = SampleParams(nu=F(1, 4), alpha=F(1, 16))  # enormous bound
    idx = draw_random(NU_ALPHA, space, params, seed=3)
    assert len(idx) == 64
    assert verify(NU_ALPHA, idx, space, params).holds


def test_draw_random_deterministic():
    space = _space64()
    params = SampleParams(eps=F(1, 2))
    a = draw_random(EPS_NET, space, params, seed=11)
    b = draw_random(EPS_NET, space, params, seed=11)
    c = draw_random(EPS_NET, space, params, seed=12)
    assert np.array_equal(a, b)
    assert len(a) == random_sample_size(EPS_NET, params, 3)
    assert not np.array_equal(a, c)


# ---------------------------------------------------------------------------
# conversions between notions


def _space128():
    return halfplane_space(uniform_points2d(128, seed=22))


def test_convert_identity_sample():
    space = _space64()
    params = SampleParams(nu=F(1, 8), alpha=F(1, 5))
    hyp, con = convert_check("nu_alpha_to_relative", np.arange(64), space, params)
    assert hyp.holds and con.holds


def test_convert_nu_alpha_to_relative():
    # every (nu, alpha)-sample with alpha < 1/4 is a relative (nu, 4 alpha)-approx
    space = _space128()
    params = SampleParams(nu=F(1, 8), alpha=F(1, 5))
    tested = 0
    for i in range(50):
        idx = draw_random(NU_ALPHA, space, params,
                          derive_seed(100, "conv-na", i))
        hyp, con = convert_check("nu_alpha_to_relative", idx, space, params)
        if hyp.holds:
            assert con.holds, f"draw {i}: {con.worst_violation}"
            tested += 1
    assert tested >= 25


def test_convert_relative_to_nu_alpha():
    space = _space128()
    params = SampleParams(p=F(1, 8), eps=F(1, 4))
    tested = 0
    for i in range(50):
        idx = draw_random(RELATIVE_APPROX, space, params,
                          derive_seed(101, "conv-rel", i))
        hyp, con = convert_check("relative_to_nu_alpha", idx, space, params)
        if hyp.holds:
            assert con.holds
            tested += 1
    assert tested >= 25


def test_convert_sensitive_to_relative():
    # sensitive at eps' = eps*sqrt(p) implies relative (p, eps)
    space = _space128()
    params = SampleParams(p=F(1, 4), eps=F(1, 2))
    tested = 0
    for i in range(50):
        idx = draw_random(SENSITIVE_APPROX, space,
                          SampleParams(eps=F(1, 4)),
                          derive_seed(102, "conv-sen", i))
        hyp, con = convert_check("sensitive_to_relative", idx, space, params)
        if hyp.holds:
            assert con.holds
            tested += 1
    assert tested >= 10


def test_eps_scaled_approx_is_relative():
    space = _space128()
    params = SampleParams(p=F(1, 4), eps=F(1, 2))
    tested = 0
    for i in range(20):
        idx = draw_random(EPS_APPROX, space, SampleParams(eps=F(1, 8)),
                          derive_seed(103, "conv-eps", i))
        hyp, con = convert_check("eps_scaled_to_relative", idx, space, params)
        if hyp.holds:
            assert con.holds
            tested += 1
    assert tested >= 10


def test_transitive_nested_samples():
    # (nu, alpha) over X then over Y compounds to (nu, 2 alpha) over X
    X = uniform_points2d(128, seed=23)
    space_x = halfplane_space(X)
    nu, alpha = F(1, 8), F(1, 4)
    tested = 0
    for i in range(12):
        rng = substream(derive_seed(104, "trans", i), "draw")
        y_idx = np.sort(rng.choice(128, size=96, replace=False))
        z_rel = np.sort(rng.choice(96, size=72, replace=False))
        params = SampleParams(nu=nu, alpha=alpha)
        hyp_y = verify(NU_ALPHA, y_idx, space_x, params)
        Y = X.subset(y_idx)
        hyp_z = verify(NU_ALPHA, z_rel, halfplane_space(Y), params)
        if hyp_y.holds and hyp_z.holds:
            z_idx = y_idx[z_rel]
            con = verify(NU_ALPHA, z_idx, space_x,
                         SampleParams(nu=nu, alpha=2 * alpha))
            assert con.holds
            tested += 1
    assert tested >= 5


def test_report_csv_row():
    space = _space64()
    report = verify(EPS_APPROX, np.arange(0, 64, 2), space,
                    SampleParams(eps=F(1, 4)))
    row = report.csv_row()
    assert row.startswith("eps_approx,eps=1/4;q=1/10,64,32,")
    assert str(int(report.holds)) in row.split(",")
