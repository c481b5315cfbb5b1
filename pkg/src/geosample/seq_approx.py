"""Relative approximate counting from a geometric sequence of samples.

One sample cannot serve every scale: a set dense enough for additive error
at the p*n floor is wasteful on heavy ranges, and one sized for heavy ranges
is blind below the floor.  The scheme here keeps a certified sample Z_t per
threshold p_t = min(2^t p, 1/2) and answers a count query from the sparsest
set whose estimate clears its own noise floor, scanning downward and falling
back to the densest sets for genuinely small ranges.

Sets come from a pluggable provider; the default draws random samples at the
relative-approximation bound size and certifies them exhaustively against
the canonical halfspaces (retrying with fresh seeds), which is stronger than
the shallow-error clause the query analysis consumes.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from .constants import DEFAULTS, FrozenConstants
from .geometry import PointSet
from .rng import derive_seed
from .sampling import (
    RELATIVE_APPROX,
    RangeSpaceView,
    SampleParams,
    draw_random,
    frac,
    halfspace_space,
    verify,
)

RELATIVE_GUARANTEE = "relative"
SMALL_RANGE_GUARANTEE = "small_range"

PROVIDER_RETRY_CAP = 16


@dataclass(frozen=True)
class ApproxSequence:
    """Certified samples Z_0 .. Z_{t_max} with thresholds p_t = min(2^t p, 1/2)."""

    ground: PointSet
    n: int
    p: Fraction
    eps: Fraction
    c_small: Fraction
    thresholds: tuple
    indices: tuple

    def __post_init__(self):
        if len(self.thresholds) != len(self.indices):
            raise ValueError("one index set per threshold")
        if self.thresholds and self.thresholds[0] != self.p:
            raise ValueError("p_0 must equal p")
        if self.thresholds and self.thresholds[-1] != Fraction(1, 2):
            raise ValueError("last threshold must be 1/2")

    @property
    def t_max(self) -> int:
        return len(self.thresholds) - 1

    @property
    def sets(self) -> tuple:
        return tuple(self.ground.subset(np.asarray(ix, dtype=np.int64))
                     for ix in self.indices)

    def set_sizes(self) -> tuple:
        return tuple(len(ix) for ix in self.indices)


@dataclass(frozen=True)
class CountAnswer:
    """estimate = Z-bar * n from the set at set_index_used.

    kind `relative`: estimate within (1 +- eps) of the true count.
    kind `small_range`: true count <= p*n and |true - estimate| <= eps*p*n.
    """

    estimate: Fraction
    kind: str
    set_index_used: int


def random_provider(space: RangeSpaceView, params: SampleParams, seed: int) -> np.ndarray:
    """Default set provider: uniform sample at the relative-approx bound size."""
    return draw_random(RELATIVE_APPROX, space, params, seed)


def build_sequence(P: PointSet, p, eps,
                   provider: Optional[Callable] = None, seed: int = 0,
                   constants: FrozenConstants = DEFAULTS) -> ApproxSequence:
    """Build and certify Z_t for every threshold p_t.

    Each Z_t is verified exhaustively as a relative (p_t, c*eps)-approximation
    of P over the canonical halfspaces, with fresh provider seeds on failure.
    A set equal to its ground is exact, so its scan is skipped.
    """
    p = frac(p)
    eps = frac(eps)
    c = frac(constants.c_sequence)
    if not 0 < p <= Fraction(1, 2):
        raise ValueError("p must be in (0, 1/2]")
    if not 0 < eps < 1:
        raise ValueError("eps must be in (0, 1)")
    # the query analysis needs eps < 1/(8c); with c = 1/16 that is every eps < 2
    if eps >= 1 / (8 * c):
        raise ValueError("eps too large for the chosen c")
    if provider is None:
        provider = random_provider
    space = halfspace_space(P)
    n = len(P)

    thresholds = []
    t = 0
    while True:
        raw = (2 ** t) * p
        thresholds.append(min(raw, Fraction(1, 2)))
        if raw >= Fraction(1, 2):
            break
        t += 1

    sets = []
    for t, pt in enumerate(thresholds):
        params = SampleParams(p=pt, eps=c * eps)
        chosen = None
        for attempt in range(PROVIDER_RETRY_CAP):
            idx = np.asarray(provider(space, params, derive_seed(seed, "seq", t, attempt)),
                             dtype=np.int64)
            if len(idx) == n:
                chosen = idx
                break
            report = verify(RELATIVE_APPROX, idx, space, params)
            if report.holds:
                chosen = idx
                break
        if chosen is None:
            raise RuntimeError(
                f"provider failed certification for p_{t}={pt} in "
                f"{PROVIDER_RETRY_CAP} attempts")
        sets.append(tuple(int(i) for i in chosen))
    return ApproxSequence(ground=P, n=n, p=p, eps=eps, c_small=c,
                          thresholds=tuple(thresholds), indices=tuple(sets))


def _set_counts(S: ApproxSequence, h) -> list:
    """Exact |Z_t ∩ h| per set, by brute force over the stored indices."""
    pts = S.ground
    out = []
    for ix in S.indices:
        out.append(sum(1 for i in ix if h.contains(pts[i])))
    return out


def _answer_from_counts(S: ApproxSequence, zs, skip=frozenset()):
    """The downward scan on precomputed per-set counts.

    Returns (answer, visited indices).  The first s whose estimate C_s
    strictly beats the noise floor c*eps*p_s*n (by the 4/5 margin) wins the
    relative guarantee; otherwise the answer is the densest small-range
    estimate, C_1 when it exists and C_0 for single-set sequences.
    """
    n = S.n
    floor_scale = S.c_small * S.eps * n
    visited = []
    for s in range(S.t_max, -1, -1):
        if s in skip:
            continue
        visited.append(s)
        c_s = Fraction(zs[s] * n, len(S.indices[s]))
        if floor_scale * S.thresholds[s] < Fraction(4, 5) * c_s:
            return CountAnswer(c_s, RELATIVE_GUARANTEE, s), tuple(visited)
    fb = min(1, S.t_max)
    c_fb = Fraction(zs[fb] * n, len(S.indices[fb]))
    return CountAnswer(c_fb, SMALL_RANGE_GUARANTEE, fb), tuple(visited)


def query_count(S: ApproxSequence, h) -> CountAnswer:
    """Approximate |P ∩ h| with a per-answer guarantee kind."""
    answer, _ = _answer_from_counts(S, _set_counts(S, h))
    return answer


def work_touched(S: ApproxSequence, h) -> int:
    """Total size of the sets the query scan visited for h."""
    _, visited = _answer_from_counts(S, _set_counts(S, h))
    return sum(len(S.indices[s]) for s in visited)


def write_sequence(path, S: ApproxSequence, source: str = ""):
    lines = ["# geosample approx sequence v1"]
    if source:
        lines.append(f"# source: {source}")
    lines.append(f"# n: {S.n}")
    lines.append(f"# p: {S.p}")
    lines.append(f"# eps: {S.eps}")
    lines.append(f"# c: {S.c_small}")
    lines.append(f"# t_max: {S.t_max}")
    for t, (pt, ix) in enumerate(zip(S.thresholds, S.indices)):
        lines.append(f"T {t} {pt}")
        lines.append("S " + " ".join(str(i) for i in ix))
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def read_sequence(path, ground: PointSet) -> ApproxSequence:
    n = p = eps = c = None
    thresholds = []
    indices = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line:
                continue
            if line.startswith("# geosample approx sequence"):
                if line.split()[-1] != "v1":
                    raise ValueError("unknown sequence format")
            elif line.startswith("# n:"):
                n = int(line.split(":", 1)[1])
            elif line.startswith("# p:"):
                p = Fraction(line.split(":", 1)[1].strip())
            elif line.startswith("# eps:"):
                eps = Fraction(line.split(":", 1)[1].strip())
            elif line.startswith("# c:"):
                c = Fraction(line.split(":", 1)[1].strip())
            elif line.startswith("#"):
                continue
            elif line.startswith("T "):
                thresholds.append(Fraction(line.split()[2]))
            elif line.startswith("S"):
                indices.append(tuple(int(t) for t in line.split()[1:]))
            else:
                raise ValueError(f"unparsable sequence line: {line!r}")
    if None in (n, p, eps, c) or not thresholds:
        raise ValueError("incomplete sequence file")
    if n != len(ground):
        raise ValueError("ground set does not match the stored size")
    return ApproxSequence(ground=ground, n=n, p=p, eps=eps, c_small=c,
                          thresholds=tuple(thresholds), indices=tuple(indices))
