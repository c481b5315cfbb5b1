"""Iterated halving for halfplane families.

A perfect matching with low crossing number turns every canonical halfplane
into a short signed sum: color each matched pair +1/-1 at random and the
discrepancy of a halfplane concentrates around the square root of the number
of pairs it separates.  Keeping one color class halves the set while moving
each range measure by at most |chi|/n, so repeated halving compresses a point
set well below the random-sampling bounds.

Probabilistic statements are replaced throughout by verify-and-retry: every
coloring is certified by an exhaustive scan of the canonical ranges, every
built sample is checked exactly against its target notion, and failures draw
a fresh seed up to a hard cap.  A returned object therefore *is* its own

certificate; nothing is accepted on faith.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional

import numpy as np

from .constants import DEFAULTS, FrozenConstants
from .geometry import PointSet
from .rng import derive_seed, substream
from .sampling import (
    NU_ALPHA,
    RELATIVE_APPROX,
    SENSITIVE_APPROX,
    RangeSpaceView,
    SampleParams,
    SampleReport,
    _range_count_pairs,
    _subset_mask,
    frac,
    halfplane_space,
    random_sample_size,
    verify,
)
from .spanning import Matching, relative_crossing_tree, tree_to_matching

CHAIN_RETRY_CAP = 16


@dataclass(frozen=True)
class Coloring:
    """A balanced +-1 coloring; signs[i] is the color of point i."""

    signs: tuple
    seed: int

    def __post_init__(self):
        if any(s not in (-1, 1) for s in self.signs):
            raise ValueError("signs must be +-1")

    @property
    def balance(self) -> int:
        return sum(self.signs)

    def minus_indices(self) -> np.ndarray:
        return np.nonzero(np.asarray(self.signs) < 0)[0]

    def plus_indices(self) -> np.ndarray:
        return np.nonzero(np.asarray(self.signs) > 0)[0]


@dataclass(frozen=True)
class CertificateReport:
    """Outcome of one exhaustive discrepancy scan over canonical halfplanes."""

    holds: bool
    max_abs: int
    worst_ratio: float
    n_ranges: int
    attempt: int = 0
    worst_range: object = None


@dataclass(frozen=True)
class HalvingChain:
    """Nested levels P_0 supset P_1 ... with the certificates that built them.

    levels[0] is the starting index set (possibly a trimmed or pre-sampled
    subset of the ground set); each later level is the kept half of the one
    before.  seeds[i] and certificates[i] belong to the round producing
    levels[i+1].
    """

    kind: str
    n_ground: int
    levels: tuple
    seeds: tuple
    certificates: tuple
    constants: FrozenConstants = DEFAULTS
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        for a, b in zip(self.levels, self.levels[1:]):
            if 2 * len(b) != len(a):
                raise ValueError("each level must halve the one before")
            if not set(b) <= set(a):
                raise ValueError("levels must be nested")
        if len(self.seeds) != max(0, len(self.levels) - 1):
            raise ValueError("one seed per halving round")

    @property
    def final_indices(self) -> np.ndarray:
        return np.asarray(self.levels[-1], dtype=np.int64)

    def final_points(self, P: PointSet) -> PointSet:
        return P.subset(self.final_indices)


def discrepancy_bound(w, n, constants: FrozenConstants = DEFAULTS) -> float:
    """Certificate threshold for a range holding w of n points.

    The additive constant keeps tiny ranges (w = 0 allows |chi| = 0 only
    without it) from failing on a single straggler; natural log throughout.
    """
    return constants.c_disc * (max(int(w), 0) ** 0.25) * math.log(n + 2) + constants.c_disc


def color_by_matching(P: PointSet, M: Matching, seed: int) -> Coloring:
    """Random +-1 orientation of each matched pair; balanced by construction."""
    signs = _matching_signs(len(P), M, seed)
    return Coloring(signs=tuple(int(s) for s in signs), seed=seed)


def _matching_signs(n: int, M: Matching, seed: int) -> np.ndarray:
    pairs = np.asarray(M.pairs, dtype=np.int64)
    if 2 * len(pairs) != n:
        raise ValueError("matching must be perfect on the point set")
    if len(pairs) and pairs.max() >= n:
        raise ValueError("matching index out of range")
    g = substream(seed, "halving", "signs")
    s = 2 * g.integers(0, 2, size=len(pairs), dtype=np.int64) - 1
    signs = np.zeros(n, dtype=np.int64)
    signs[pairs[:, 0]] = s
    signs[pairs[:, 1]] = -s
    return signs


def _certificate(space: RangeSpaceView, signs: np.ndarray,
                 constants: FrozenConstants, attempt: int = 0) -> CertificateReport:
    # float evaluation of the bound is fine: |chi| is an integer and the
    # threshold never lands within one ulp of one for sane constants
    n = len(space.ground)
    worst = -1.0
    worst_idx = None
    max_abs = 0
    ok = True
    for idx, w, z in _range_count_pairs(space, signs):
        az = abs(int(z))
        bound = discrepancy_bound(w, n, constants)
        ratio = az / bound
        if ratio > worst:
            worst = ratio
            worst_idx = idx
        if az > max_abs:
            max_abs = az
        if az > bound:
            ok = False
    return CertificateReport(
        holds=ok,
        max_abs=max_abs,
        worst_ratio=worst,
        n_ranges=len(space.ranges),
        attempt=attempt,
        worst_range=None if worst_idx is None else space.ranges[worst_idx],
    )


def coloring_certificate(P: PointSet, coloring: Coloring,
                         constants: FrozenConstants = DEFAULTS) -> CertificateReport:
    """Exhaustively check |chi(h)| <= c_disc * w^{1/4} ln(n+2) + c_disc."""
    signs = np.asarray(coloring.signs, dtype=np.int64)
    if len(signs) != len(P):
        raise ValueError("coloring does not match the point set")
    return _certificate(halfplane_space(P), signs, constants)


def _certified(P: PointSet, seed: int, constants: FrozenConstants,
               matching: Optional[Matching] = None,
               max_attempts: int = CHAIN_RETRY_CAP):
    """(signs, certificate, sign_seed) of the first coloring passing the scan."""
    if matching is None:
        matching = tree_to_matching(relative_crossing_tree(P), P)
    space = halfplane_space(P)
    for attempt in range(max_attempts):
        col_seed = derive_seed(seed, "color", attempt)
        signs = _matching_signs(len(P), matching, col_seed)
        cert = _certificate(space, signs, constants, attempt)
        if cert.holds:
            return signs, cert, col_seed
    raise RuntimeError(
        f"no coloring passed the discrepancy certificate in {max_attempts} "
        f"attempts (n={len(P)}); c_disc={constants.c_disc} looks miscalibrated")


def certified_coloring(P: PointSet, seed: int,
                       constants: FrozenConstants = DEFAULTS,
                       matching: Optional[Matching] = None,
                       max_attempts: int = CHAIN_RETRY_CAP) -> Coloring:
    """Low-crossing matching coloring, retried until the certificate holds.

    The matching is built once (it is deterministic in P); only the pair
    orientations are redrawn on retry, with seeds derived from (seed, i).
    """
    signs, _, col_seed = _certified(P, seed, constants, matching, max_attempts)
    return Coloring(signs=tuple(int(s) for s in signs), seed=col_seed)


def halve(P: PointSet, seed: int, round_index: int = 0,
          constants: FrozenConstants = DEFAULTS) -> PointSet:
    """The -1 class of a certified coloring; exactly half of an even P.

    Odd sizes: the highest-index point sits out the coloring and joins the
    kept class on even rounds only, alternating the rounding direction
    across a chain instead of always favoring the straggler.
    """
    return P.subset(_halve_indices(P, seed, round_index, constants))


def _halve_indices(P: PointSet, seed: int, round_index: int,
                   constants: FrozenConstants) -> np.ndarray:
    n = len(P)
    if n < 2:
        raise ValueError("cannot halve fewer than 2 points")
    aside = None
    Q = P
    if n % 2 == 1:
        aside = n - 1
        Q = P.subset(np.arange(n - 1))
    signs, _, _ = _certified(Q, seed, constants)
    kept = np.nonzero(signs < 0)[0]
    if aside is not None and round_index % 2 == 0:
        kept = np.append(kept, aside)
    return np.sort(kept.astype(np.int64))


def halving_threshold(nu, alpha, constants: FrozenConstants = DEFAULTS) -> float:
    """Stop halving once the next size would not exceed this.

    Built samples therefore have size at most the first power of two at or
    below twice the threshold.
    """
    nu = float(frac(nu))
    alpha = float(frac(alpha))
    return constants.c_halving * (1.0 / (nu * alpha ** (4.0 / 3.0))) \
        * math.log(math.e / (alpha * nu)) ** (4.0 / 3.0)


def sensitive_threshold(eps, constants: FrozenConstants = DEFAULTS) -> float:
    eps = float(frac(eps))
    return constants.c_sensitive * (1.0 / eps ** 2) \
        * math.log(math.e / eps) ** (4.0 / 3.0)


def improved_sensitive_report(sample_indices, space: RangeSpaceView, eps) -> SampleReport:
    """Exhaustive check of |X - Z| <= (eps^{3/2} X^{1/4} + eps^2) / 2.

    Exact despite the radicals: with t = |X - Z| - eps^2/2 the bound holds
    iff t <= 0 or t^4 <= (eps^6/16) X, both rational comparisons.  Margins
    are t on the first branch and t^4 - (eps^6/16) X on the second, so the
    guarantee holds iff no margin is positive.
    """
    eps = frac(eps)
    params = SampleParams(eps=eps)
    n = len(space.ground)
    zmask = _subset_mask(n, sample_indices)
    m = int(zmask.sum())
    if m == 0:
        raise ValueError("needs a nonempty sample")
    half_e2 = eps * eps / 2
    lead = eps ** 6 / 16
    worst: Optional[Fraction] = None
    worst_idx = None
    violations = 0
    for idx, w, z in _range_count_pairs(space, zmask):
        x = Fraction(int(w), n)
        t = abs(x - Fraction(int(z), m)) - half_e2
        g = t if t <= 0 else t ** 4 - lead * x
        if g > 0:
            violations += 1
        if worst is None or g > worst:
            worst = g
            worst_idx = idx
    return SampleReport(
        notion="sensitive_improved",
        params=params,
        n_ground=n,
        n_sample=m,
        holds=(violations == 0),
        worst_violation=worst,
        worst_range=None if worst_idx is None else space.ranges[worst_idx],
        n_ranges=len(space.ranges),
        n_violations=violations,
    )


def _initial_indices(P: PointSet, tau: float, presample_notion: Optional[str],
                     presample_params: Optional[SampleParams], chain_seed: int):
    """Starting level: pre-sample above the size cutoff, else trim to a power
    of two (seeded, uniform) when halving rounds will actually run."""
    n = len(P)
    if presample_notion is not None and n > 4096:
        size = random_sample_size(presample_notion, presample_params, 3)
        s2 = 1 << max(0, size - 1).bit_length()
        if s2 < n:
            perm = substream(chain_seed, "presample").permutation(n)[:s2]
            return np.sort(perm.astype(np.int64)), True, False
    s0 = 1 << (n.bit_length() - 1)
    if s0 == n or s0 // 2 <= tau:
        # no trim needed, or no rounds would run anyway: keep everything
        return np.arange(n, dtype=np.int64), False, False
    warnings.warn(f"trimming {n} points to {s0} (largest power of two) for halving")
    perm = substream(chain_seed, "trim").permutation(n)[:s0]
    return np.sort(perm.astype(np.int64)), False, True


def _run_chain(P: PointSet, kind: str, tau: float, verify_fn,
               presample_notion, presample_params, seed: int,
               constants: FrozenConstants, label: str) -> HalvingChain:
    n = len(P)
    last = None
    for attempt in range(CHAIN_RETRY_CAP):
        chain_seed = derive_seed(seed, "build", attempt)
        idx, presampled, trimmed = _initial_indices(
            P, tau, presample_notion, presample_params, chain_seed)
        levels = [idx]
        seeds = []
        certs = []
        i = 0
        while len(idx) // 2 > tau:
            rs = derive_seed(chain_seed, "round", i)
            sub = P.subset(idx)
            signs, cert, _ = _certified(sub, rs, constants)
            idx = idx[np.nonzero(signs < 0)[0]]
            levels.append(idx)
            seeds.append(rs)
            certs.append(cert)
            i += 1
        report = verify_fn(idx)
        if report.holds:
            meta = {
                "attempt": attempt,
                "threshold": tau,
                "presampled": int(presampled),
                "trimmed": int(trimmed),
                "label": label,
            }
            return HalvingChain(
                kind=kind,
                n_ground=n,
                levels=tuple(tuple(int(t) for t in lev) for lev in levels),
                seeds=tuple(seeds),
                certificates=tuple(certs),
                constants=constants,
                meta=meta,
            )
        last = report
    raise RuntimeError(
        f"{kind}: built sample failed verification in {CHAIN_RETRY_CAP} chain "
        f"attempts (last worst violation {last.worst_violation})")


def build_nu_alpha_sample(P: PointSet, nu, alpha, seed: int,
                          constants: FrozenConstants = DEFAULTS) -> HalvingChain:
    """Halve until the next size would drop to the (nu, alpha) threshold.

    The final level verifies exhaustively as a (nu, alpha)-sample of the
    full ground set; the whole chain is retried on failure.  Returns the
    chain (final_indices gives the sample) so callers keep the provenance.
    """
    params = SampleParams(nu=nu, alpha=alpha)
    tau = halving_threshold(params.nu, params.alpha, constants)
    space = halfplane_space(P)

    def check(idx):
        return verify(NU_ALPHA, idx, space, params)

    return _run_chain(P, "nu_alpha", tau, check, NU_ALPHA, params, seed,
                      constants, params.label())


def build_relative_approx(P: PointSet, p, eps, seed: int,
                          constants: FrozenConstants = DEFAULTS) -> HalvingChain:
    """Relative (p, eps)-approximation by halving at nu = p, alpha = eps/4.

    Above 4096 points the chain starts from a random sample at the relative
    bound size (rounded up to a power of two) instead of the full set; the
    final exhaustive verification is always against the full ground set.
    """
    params = SampleParams(p=p, eps=eps)
    tau = halving_threshold(params.p, params.eps / 4, constants)
    space = halfplane_space(P)

    def check(idx):
        return verify(RELATIVE_APPROX, idx, space, params)

    return _run_chain(P, "relative_approx", tau, check, RELATIVE_APPROX,
                      params, seed, constants, params.label())


def build_sensitive_improved(P: PointSet, eps, seed: int,
                             constants: FrozenConstants = DEFAULTS) -> HalvingChain:
    """Sensitive approximation with the sharpened x^{1/4} error term.

    Stops at c_sensitive * (1/eps^2) ln^{4/3}(e/eps) and certifies
    |X - Z| <= (eps^{3/2} X^{1/4} + eps^2)/2 on every canonical halfplane.
    """
    params = SampleParams(eps=eps)
    tau = sensitive_threshold(params.eps, constants)
    space = halfplane_space(P)

    def check(idx):
        return improved_sensitive_report(idx, space, params.eps)

    return _run_chain(P, "sensitive_improved", tau, check, SENSITIVE_APPROX,
                      params, seed, constants, params.label())


def write_chain(path, chain: HalvingChain, source: str = ""):
    """Versioned text dump: header, per-round seeds and certificates, then
    one `S i0 i1 ...` line per level."""
    c = chain.constants
    lines = [f"# geosample chain v1 kind={chain.kind}"]
    if source:
        lines.append(f"# source: {source}")
    lines.append(f"# n: {chain.n_ground}")
    lines.append(
        f"# constants: version={c.version} c_disc={c.c_disc!r} "
        f"c_halving={c.c_halving!r} c_sensitive={c.c_sensitive!r}")
    lines.append("# seeds: " + " ".join(str(s) for s in chain.seeds))
    for cert in chain.certificates:
        lines.append(
            f"# certificate: attempt={cert.attempt} max_abs={cert.max_abs} "
            f"worst_ratio={cert.worst_ratio!r} n_ranges={cert.n_ranges}")
    if chain.meta:
        # values must stay single tokens; spaces inside become ';'
        lines.append("# meta: " + " ".join(
            f"{k}={str(chain.meta[k]).replace(' ', ';')}" for k in sorted(chain.meta)))
    for lev in chain.levels:
        lines.append("S " + " ".join(str(i) for i in lev))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_chain(path) -> HalvingChain:
    kind = None
    n = None
    constants = DEFAULTS
    seeds = ()
    certs = []
    meta = {}
    levels = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("# geosample chain"):
                head = line.split()
                if head[3] != "v1":
                    raise ValueError(f"unknown chain format {head[3]}")
                kind = head[4].split("=", 1)[1]
            elif line.startswith("# n:"):
                n = int(line.split(":", 1)[1])
            elif line.startswith("# constants:"):
                kv = dict(t.split("=", 1) for t in line.split(":", 1)[1].split())
                constants = DEFAULTS.with_overrides(
                    version=int(kv["version"]),
                    c_disc=float(kv["c_disc"]),
                    c_halving=float(kv["c_halving"]),
                    c_sensitive=float(kv["c_sensitive"]))
            elif line.startswith("# seeds:"):
                seeds = tuple(int(t) for t in line.split(":", 1)[1].split())
            elif line.startswith("# certificate:"):
                kv = dict(t.split("=", 1) for t in line.split(":", 1)[1].split())
                certs.append(CertificateReport(
                    holds=True,
                    max_abs=int(kv["max_abs"]),
                    worst_ratio=float(kv["worst_ratio"]),
                    n_ranges=int(kv["n_ranges"]),
                    attempt=int(kv["attempt"])))
            elif line.startswith("# meta:"):
                meta = dict(t.split("=", 1) for t in line.split(":", 1)[1].split())
            elif line.startswith("#"):
                continue
            elif line.startswith("S"):
                levels.append(tuple(int(t) for t in line.split()[1:]))
            else:
                raise ValueError(f"unparsable chain line: {line!r}")
    if kind is None or n is None or not levels:
        raise ValueError("incomplete chain file")
    return HalvingChain(kind=kind, n_ground=n, levels=tuple(levels),
                        seeds=seeds, certificates=tuple(certs),
                        constants=constants, meta=meta)
