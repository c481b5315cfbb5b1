"""Frozen calibration constants.

The size and crossing bounds implemented by this package are asymptotic with
unspecified absolute constants.  The acceptance suite pins concrete values:
each constant below was measured once on the seeded calibration runs in the
test suite and then frozen.  Bumping any value requires bumping `version` so
serialized artifacts record which calibration they were built under.

All logarithms in the bounds these constants scale are natural logs.
"""

from __future__ import annotations

from dataclasses import dataclass, replace


@dataclass(frozen=True)
class FrozenConstants:
    version: int = 1
    # multiplier in the random-sample size formulas (existence constant)
    const_c: float = 1.0
    # shrink factor applied to eps for the per-scale subsets of an
    # approximation sequence; fixed, not calibrated
    c_sequence: float = 1.0 / 16.0
    # spanning tree: max crossings over canonical lines <= c_tree * sqrt(n)
    c_tree: float = 4.0
    # pocket cover: canonical line crosses <= c_pocket * ln(n/k) triangles
    c_pocket: float = 8.0
    # shallow tree: crossings <= c_shallow * sqrt(k) * ln(n/k)
    c_shallow: float = 8.0
    # relative tree: crossings <= c_relative * sqrt(max(w,1)) * ln(2n/max(w,1))
    c_relative: float = 3.0
    # coloring certificate: |chi(h)| <= c_disc * |h|^{1/4} * ln(n+2) + c_disc
    c_disc: float = 2.0
    # halving stop: keep halving while next size >= c_halving * threshold
    c_halving: float = 0.18
    # sensitive-build stop threshold multiplier
    c_sensitive: float = 3.0
    # level band complexity <= c_levels * n * x^{1/3} * y^{2/3}
    c_levels: float = 2.0
    # expected complexity of a drawn level <= c_complexity * n / eps^{1/3}
    c_complexity: float = 6.0
    # fast counting structure stored complexity <= c_fast * n / eps^{7/6}
    c_fast: float = 8.0

    def with_overrides(self, **kw) -> "FrozenConstants":
        return replace(self, **kw)


DEFAULTS = FrozenConstants()
