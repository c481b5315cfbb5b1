"""Verifiers and random constructions for the five sampling notions.

Notions over a range space (X, R) with X a finite point set and R the
canonical halfplane/halfspace ranges; all measures are exact rationals:

  eps_net          every range of measure >= eps is hit
  eps_approx       |m_X(r) - m_Z(r)| <= eps
  relative_approx  multiplicative eps above measure p, additive eps*p below
  sensitive_approx |m_X - m_Z| <= (eps/2)(sqrt(m_X) + eps)
  nu_alpha         d_nu(m_Z, m_X) < alpha

Verification is exhaustive over the canonical ranges and exact: bounds with
radicals are decided by squaring, never by floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from . import _kernels
from .geometry import (
    CanonicalHalfplanes,
    Halfplane,
    Halfspace,
    PointSet,
    canonical_halfplanes,
    canonical_halfspaces,
)
from .rng import substream

EPS_NET = "eps_net"
EPS_APPROX = "eps_approx"
RELATIVE_APPROX = "relative_approx"
SENSITIVE_APPROX = "sensitive_approx"
NU_ALPHA = "nu_alpha"

NOTIONS = (EPS_NET, EPS_APPROX, RELATIVE_APPROX, SENSITIVE_APPROX, NU_ALPHA)

__all__ = [
    "EPS_NET",
    "EPS_APPROX",
    "RELATIVE_APPROX",
    "SENSITIVE_APPROX",
    "NU_ALPHA",
    "NOTIONS",
    "SampleParams",
    "SampleReport",
    "RangeSpaceView",
    "halfplane_space",
    "halfspace_space",
    "measure",
    "d_nu",
    "verify",
    "random_sample_size",
    "draw_random",
    "convert_check",
    "report_csv_header",
]


def frac(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, tuple):
        return Fraction(*x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        return Fraction(x).limit_denominator(10**9)
    raise TypeError(f"not an exact rational: {x!r}")


@dataclass(frozen=True)
class SampleParams:
    """Parameters shared by the notions; only the relevant fields are read.

    fail_prob is the q in the size bounds; const_c scales them (calibrated
    once, then frozen in `constants`).
    """

    eps: Optional[Fraction] = None
    p: Optional[Fraction] = None
    nu: Optional[Fraction] = None
    alpha: Optional[Fraction] = None
    fail_prob: Fraction = Fraction(1, 10)
    const_c: float = 1.0

    def __post_init__(self):
        for name in ("eps", "p", "nu", "alpha", "fail_prob"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, frac(v))
        for name, lo, hi in (("eps", 0, 1), ("p", 0, 1), ("nu", 0, None), ("alpha", 0, 1)):
            v = getattr(self, name)
            if v is None:
                continue
            if v <= lo or (hi is not None and v >= hi):
                raise ValueError(f"{name} out of range: {v}")
        if not 0 < self.fail_prob < 1:
            raise ValueError("fail_prob must be in (0, 1)")

    def label(self) -> str:
        # single token (no spaces) so labels survive token-split file headers
        bits = []
        for name in ("eps", "p", "nu", "alpha"):
            v = getattr(self, name)
            if v is not None:
                bits.append(f"{name}={v}")
        bits.append(f"q={self.fail_prob}")
        return ";".join(bits)


@dataclass(frozen=True)
class RangeSpaceView:
    """A point set with its canonical range family and VC dimension."""

    ground: PointSet
    ranges: Sequence
    vc_dim: int
    kind: str

    def __len__(self):
        return len(self.ranges)


def halfplane_space(ps: PointSet) -> RangeSpaceView:
    return RangeSpaceView(ps, canonical_halfplanes(ps), 3, "halfplanes")


def halfspace_space(ps: PointSet) -> RangeSpaceView:
    return RangeSpaceView(ps, canonical_halfspaces(ps), 4, "halfspaces")


def measure(points, r) -> Fraction:
    """Fraction of `points` inside range r; exact."""
    pts = list(points)
    if not pts:
        raise ValueError("measure over an empty set")
    return Fraction(sum(1 for p in pts if r.contains(p)), len(pts))


def d_nu(nu, r, s) -> Fraction:
    """Distance |r - s| / (r + s + nu); a metric on [0, inf) for nu > 0."""
    r = frac(r)
    s = frac(s)
    nu = frac(nu)
    if r < 0 or s < 0 or nu <= 0:
        raise ValueError("d_nu needs r, s >= 0 and nu > 0")
    return abs(r - s) / (r + s + nu)


@dataclass
class SampleReport:
    """Outcome of one exhaustive verification.

    worst_violation is the exact margin of the worst range: positive margins
    are violations.  Margins of different notions are not in common units
    (the sensitive notions report a squared-form margin); only the sign and
    per-notion ordering are meaningful.
    """

    notion: str
    params: SampleParams
    n_ground: int
    n_sample: int
    holds: bool
    worst_violation: Optional[Fraction]
    worst_range: object
    n_ranges: int
    n_violations: int = 0

    def csv_row(self) -> str:
        r = self.worst_range
        if r is None:
            coeffs = ""
        elif isinstance(r, Halfplane):
            coeffs = f"{r.a};{r.b};{r.c};{r.sense}"
        elif isinstance(r, Halfspace):
            coeffs = f"{r.a};{r.b};{r.c};{r.e};{r.sense}"
        else:
            coeffs = str(r)
        wv = "" if self.worst_violation is None else str(self.worst_violation)
        return (
            f"{self.notion},{self.params.label()},{self.n_ground},"
            f"{self.n_sample},{int(self.holds)},{wv},{coeffs}"
        )


def report_csv_header() -> str:
    return "notion,params,n_ground,n_sample,holds,worst_violation,worst_range"


def _need(params: SampleParams, *names):
    vals = []
    for name in names:
        v = getattr(params, name)
        if v is None:
            raise ValueError(f"notion requires parameter {name}")
        vals.append(v)
    return vals


def _margin_eps_net(w, z, n, m, params):
    # hit ranges cannot violate; sentinel -1 sits below any real margin
    (eps,) = _need(params, "eps")
    if z != 0:
        return Fraction(-1), False
    g = Fraction(w, n) - eps
    return g, g >= 0


def _margin_eps_approx(w, z, n, m, params):
    (eps,) = _need(params, "eps")
    g = abs(Fraction(z, m) - Fraction(w, n)) - eps
    return g, g > 0


def _margin_relative(w, z, n, m, params):
    eps, p = _need(params, "eps", "p")
    xm = Fraction(w, n)
    zm = Fraction(z, m)
    margins = []
    if xm >= p:
        margins.append(max(zm - (1 + eps) * xm, (1 - eps) * xm - zm))
    if xm <= p:
        margins.append(abs(zm - xm) - eps * p)
    g = max(margins)
    return g, g > 0


def _margin_sensitive(w, z, n, m, params):
    # |delta| <= (eps/2) sqrt(xm) + eps^2/2, decided by one squaring
    (eps,) = _need(params, "eps")
    xm = Fraction(w, n)
    t = abs(Fraction(z, m) - xm) - eps * eps / 2
    if t <= 0:
        return t, False
    g = t * t - (eps * eps / 4) * xm
    return g, g > 0


def _margin_nu_alpha(w, z, n, m, params):
    nu, alpha = _need(params, "nu", "alpha")
    g = d_nu(nu, Fraction(w, n), Fraction(z, m)) - alpha
    return g, g >= 0


_MARGINS = {
    EPS_NET: _margin_eps_net,
    EPS_APPROX: _margin_eps_approx,
    RELATIVE_APPROX: _margin_relative,
    SENSITIVE_APPROX: _margin_sensitive,
    NU_ALPHA: _margin_nu_alpha,
}

_HS_PATTERNS = ((0, 0, 0), (1, 1, 1), (1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, 0, 1), (0, 1, 1))


def _subset_mask(n: int, indices) -> np.ndarray:
    mask = np.zeros(n, dtype=np.int64)
    idx = np.asarray(list(indices), dtype=np.int64)
    if len(idx) == 0:
        return mask
    if idx.min() < 0 or idx.max() >= n:
        raise ValueError("subset index out of range")
    if len(np.unique(idx)) != len(idx):
        raise ValueError("duplicate subset index")
    mask[idx] = 1
    return mask


def _range_count_pairs(space: RangeSpaceView, zmask: np.ndarray):
    """Yield (first_flat_index, w, z) for each distinct count pair.

    Flat indices follow the range family order, so `space.ranges[i]` is the
    first range attaining the pair.  Exactness: counts are integers from the
    kernels; nothing is rounded.
    """
    arr = space.ground.array()
    n = len(arr)
    ones = np.ones(n, dtype=np.int64)
    weights = np.stack([ones, zmask])
    first: dict[tuple, int] = {}
    if space.kind == "halfplanes" and n == 1:
        # single-point family: four explicit ranges, no pair kernel
        for idx, r in enumerate(space.ranges):
            inside = r.contains(space.ground[0])
            key = (int(inside), int(inside and zmask[0]))
            if key not in first:
                first[key] = idx
        for (w, z), idx in sorted(first.items(), key=lambda kv: kv[1]):
            yield idx, w, z
        return
    if space.kind == "halfplanes":
        fam: CanonicalHalfplanes = space.ranges
        for start, stop, pos, neg in _kernels.pair_chunks(arr, weights):
            wl, zl = pos[0], pos[1]
            wr, zr = neg[0], neg[1]
            ii = fam._ii[start:stop]
            jj = fam._jj[start:stop]
            mi = zmask[ii]
            mj = zmask[jj]
            wvar = [wl, wl + 2, wl + 1, wl + 1, wr, wr + 2, wr + 1, wr + 1]
            zvar = [zl, zl + mi + mj, zl + mi, zl + mj, zr, zr + mi + mj, zr + mi, zr + mj]
            for v in range(8):
                _merge_pairs(first, wvar[v], zvar[v], np.arange(start, stop) * 8 + v)
    elif space.kind == "halfspaces":
        for start, stop, trip, pos, neg in _kernels.triple_chunks(arr, weights):
            wl, zl = pos[0], pos[1]
            wr, zr = neg[0], neg[1]
            mm = [zmask[trip[:, t]] for t in range(3)]
            for v in range(16):
                side, pat = divmod(v, 8)
                keep = _HS_PATTERNS[pat]
                wbase = wl if side == 0 else wr
                zbase = zl if side == 0 else zr
                wv = wbase + sum(keep)
                zv = zbase + sum(mm[t] for t in range(3) if keep[t])
                _merge_pairs(first, wv, zv, np.arange(start, stop) * 16 + v)
    else:
        raise ValueError(f"unknown range space kind {space.kind}")
    for (w, z), idx in sorted(first.items(), key=lambda kv: kv[1]):
        yield idx, w, z


def _range_count_profiles(space: RangeSpaceView, masks):
    """Yield (first_flat_index, w, zs) for each distinct count profile.

    Like _range_count_pairs but with any number of mask rows: zs is the
    tuple of per-row sums inside the range.  One scan then serves several
    subsets at once (sequence queries, multi-sample oracles).
    """
    arr = space.ground.array()
    n = len(arr)
    masks = np.ascontiguousarray(np.asarray(masks, dtype=np.int64).reshape(-1, n))
    k = masks.shape[0]
    weights = np.vstack([np.ones((1, n), dtype=np.int64), masks])
    first: dict[tuple, int] = {}
    if space.kind == "halfplanes" and n == 1:
        for idx, r in enumerate(space.ranges):
            inside = int(r.contains(space.ground[0]))
            key = (inside,) + tuple(int(inside) * int(masks[t, 0]) for t in range(k))
            if key not in first:
                first[key] = idx
        for key, idx in sorted(first.items(), key=lambda kv: kv[1]):
            yield idx, key[0], key[1:]
        return
    if space.kind == "halfplanes":
        fam: CanonicalHalfplanes = space.ranges
        for start, stop, pos, neg in _kernels.pair_chunks(arr, weights):
            ii = fam._ii[start:stop]
            jj = fam._jj[start:stop]
            mi = masks[:, ii]
            mj = masks[:, jj]
            wl, wr = pos[0], neg[0]
            zl, zr = pos[1:], neg[1:]
            base = np.arange(start, stop) * 8
            variants = (
                (wl, zl), (wl + 2, zl + mi + mj), (wl + 1, zl + mi), (wl + 1, zl + mj),
                (wr, zr), (wr + 2, zr + mi + mj), (wr + 1, zr + mi), (wr + 1, zr + mj),
            )
            for v, (wv, zv) in enumerate(variants):
                _merge_profiles(first, wv, zv, base + v)
    elif space.kind == "halfspaces":
        for start, stop, trip, pos, neg in _kernels.triple_chunks(arr, weights):
            mm = [masks[:, trip[:, t]] for t in range(3)]
            wl, wr = pos[0], neg[0]
            zl, zr = pos[1:], neg[1:]
            base = np.arange(start, stop) * 16
            for v in range(16):
                side, pat = divmod(v, 8)
                keep = _HS_PATTERNS[pat]
                wv = (wl if side == 0 else wr) + sum(keep)
                zv = zl if side == 0 else zr
                for t in range(3):
                    if keep[t]:
                        zv = zv + mm[t]
                _merge_profiles(first, wv, zv, base + v)
    else:
        raise ValueError(f"unknown range space kind {space.kind}")
    for key, idx in sorted(first.items(), key=lambda kv: kv[1]):
        yield idx, key[0], key[1:]


def _merge_profiles(first: dict, w, z, flat_idx):
    w = np.asarray(w)
    z = np.asarray(z)
    if w.dtype == object or z.dtype == object:
        for t in range(len(w)):
            key = (int(w[t]),) + tuple(int(z[r, t]) for r in range(z.shape[0]))
            i = int(flat_idx[t])
            if key not in first or first[key] > i:
                first[key] = i
        return
    rows = np.ascontiguousarray(np.vstack([w[None, :], z]).T)
    uniq, pos = np.unique(rows, axis=0, return_index=True)
    for row, t in zip(uniq.tolist(), pos.tolist()):
        key = tuple(int(x) for x in row)
        i = int(flat_idx[t])
        if key not in first or first[key] > i:
            first[key] = i


def _merge_pairs(first: dict, w, z, flat_idx):
    w = np.asarray(w)
    z = np.asarray(z)
    if w.dtype == object:
        for t in range(len(w)):
            key = (int(w[t]), int(z[t]))
            i = int(flat_idx[t])
            if key not in first or first[key] > i:
                first[key] = i
        return
    # offset keeps the packing valid for signed z (halving reuses this path
    # with +-1 weights); w, |z| < 2^31 is guaranteed by the kernel bounds
    key = w * (2**32) + (z + 2**31)
    uniq, pos = np.unique(key, return_index=True)
    for u, t in zip(uniq.tolist(), pos.tolist()):
        kw, koff = divmod(u, 2**32)
        keyt = (int(kw), int(koff) - 2**31)
        i = int(flat_idx[t])
        if keyt not in first or first[keyt] > i:
            first[keyt] = i


def verify(notion: str, sample_indices, space: RangeSpaceView, params: SampleParams) -> SampleReport:
    """Exhaustively check `notion` for the subset given by `sample_indices`.

    Exact: every range of the canonical family is checked with rational
    arithmetic.  Returns the worst margin and the first range attaining it.
    """
    if notion not in _MARGINS:
        raise ValueError(f"unknown notion {notion}")
    n = len(space.ground)
    zmask = _subset_mask(n, sample_indices)
    m = int(zmask.sum())
    if m == 0 and notion != EPS_NET:
        raise ValueError(f"{notion} needs a nonempty sample")
    margin_fn = _MARGINS[notion]
    worst: Optional[Fraction] = None
    worst_idx: Optional[int] = None
    violations = 0
    for idx, w, z in _range_count_pairs(space, zmask):
        g, viol = margin_fn(int(w), int(z), n, max(m, 1), params)
        if viol:
            violations += 1
        # pairs arrive by increasing first index, so > keeps the earliest
        if worst is None or g > worst:
            worst = g
            worst_idx = idx
    report = SampleReport(
        notion=notion,
        params=params,
        n_ground=n,
        n_sample=m,
        holds=(violations == 0),
        worst_violation=worst,
        worst_range=None if worst_idx is None else space.ranges[worst_idx],
        n_ranges=len(space.ranges),
        n_violations=violations,
    )
    return report


_SIZE_FORMS = {
    # (coefficient factor, log argument field) per Theorem-style bound
    EPS_NET: lambda e, p, nu, a, d, q: (1 / e) * (d * math.log(1 / e) + math.log(1 / q)),
    EPS_APPROX: lambda e, p, nu, a, d, q: (1 / e**2) * (d + math.log(1 / q)),
    RELATIVE_APPROX: lambda e, p, nu, a, d, q: (1 / (e**2 * p)) * (d * math.log(1 / p) + math.log(1 / q)),
    SENSITIVE_APPROX: lambda e, p, nu, a, d, q: (1 / e**2) * (d * math.log(1 / e) + math.log(1 / q)),
    NU_ALPHA: lambda e, p, nu, a, d, q: (1 / (a**2 * nu)) * (d * math.log(1 / nu) + math.log(1 / q)),
}


def random_sample_size(notion: str, params: SampleParams, vc_dim: int) -> int:
    """Sample size sufficient for `notion` to hold with prob >= 1 - fail_prob.

    The classical random-sampling bounds with const_c as the leading
    constant; uncapped (draw_random clips to the ground size).
    """
    if notion not in _SIZE_FORMS:
        raise ValueError(f"unknown notion {notion}")
    e = float(params.eps) if params.eps is not None else None
    p = float(params.p) if params.p is not None else None
    nu = float(params.nu) if params.nu is not None else None
    a = float(params.alpha) if params.alpha is not None else None
    q = float(params.fail_prob)
    if notion in (EPS_NET, EPS_APPROX, SENSITIVE_APPROX) and e is None:
        raise ValueError("notion requires eps")
    if notion == RELATIVE_APPROX and (e is None or p is None):
        raise ValueError("notion requires eps and p")
    if notion == NU_ALPHA and (nu is None or a is None):
        raise ValueError("notion requires nu and alpha")
    raw = _SIZE_FORMS[notion](e, p, nu, a, vc_dim, q)
    return max(1, math.ceil(params.const_c * raw))


def draw_random(notion: str, space: RangeSpaceView, params: SampleParams, seed: int) -> np.ndarray:
    """Uniform sample without replacement at the bound size; whole ground if
    the bound is not smaller than the ground."""
    n = len(space.ground)
    size = random_sample_size(notion, params, space.vc_dim)
    if size >= n:
        return np.arange(n, dtype=np.int64)
    rng = substream(seed, "draw_random", notion)
    idx = rng.permutation(n)[:size]
    return np.sort(idx).astype(np.int64)


def _sqrt_frac(x: Fraction) -> Fraction:
    num = math.isqrt(x.numerator)
    den = math.isqrt(x.denominator)
    if num * num != x.numerator or den * den != x.denominator:
        raise ValueError(f"{x} has no rational square root")
    return Fraction(num, den)


def convert_check(kind: str, sample_indices, space: RangeSpaceView, params: SampleParams):
    """Check one implication between notions; returns (hypothesis, conclusion)
    verification reports.

    Kinds: nu_alpha_to_relative (alpha < 1/4 gives relative (nu, 4*alpha)),
    relative_to_nu_alpha, sensitive_to_relative (needs sqrt(p) rational),
    eps_scaled_to_relative (an eps*p-approximation is a relative (p, eps)-
    approximation).
    """
    if kind == "nu_alpha_to_relative":
        nu, alpha = _need(params, "nu", "alpha")
        if alpha >= Fraction(1, 4):
            raise ValueError("implication needs alpha < 1/4")
        hyp = verify(NU_ALPHA, sample_indices, space, params)
        con = verify(
            RELATIVE_APPROX, sample_indices, space,
            SampleParams(eps=4 * alpha, p=nu, fail_prob=params.fail_prob),
        )
        return hyp, con
    if kind == "relative_to_nu_alpha":
        eps, p = _need(params, "eps", "p")
        hyp = verify(RELATIVE_APPROX, sample_indices, space, params)
        con = verify(
            NU_ALPHA, sample_indices, space,
            SampleParams(nu=p, alpha=eps, fail_prob=params.fail_prob),
        )
        return hyp, con
    if kind == "sensitive_to_relative":
        eps, p = _need(params, "eps", "p")
        eps_prime = eps * _sqrt_frac(p)
        hyp = verify(
            SENSITIVE_APPROX, sample_indices, space,
            SampleParams(eps=eps_prime, fail_prob=params.fail_prob),
        )
        con = verify(RELATIVE_APPROX, sample_indices, space, params)
        return hyp, con
    if kind == "eps_scaled_to_relative":
        eps, p = _need(params, "eps", "p")
        hyp = verify(
            EPS_APPROX, sample_indices, space,
            SampleParams(eps=eps * p, fail_prob=params.fail_prob),
        )
        con = verify(RELATIVE_APPROX, sample_indices, space, params)
        return hyp, con
    raise ValueError(f"unknown conversion kind {kind}")
