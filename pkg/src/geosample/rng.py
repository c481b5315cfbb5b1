"""Deterministic named random streams.

Every randomized routine in the package takes an integer seed and derives
its generator through `substream`, so that independent components never
share a stream and a run is reproducible from the single top-level seed.
"""

from __future__ import annotations

import hashlib

import numpy as np

__all__ = ["substream", "derive_seed"]


def _digest_words(seed: int, labels: tuple) -> list[int]:
    h = hashlib.sha256()
    h.update(str(int(seed)).encode())
    for lab in labels:
        h.update(b"/")
        h.update(str(lab).encode())
    d = h.digest()
    return [int.from_bytes(d[i : i + 4], "little") for i in range(0, 16, 4)]


def substream(seed: int, *labels) -> np.random.Generator:
    """Generator for the stream named by `labels`, derived from `seed`.

    Identical (seed, labels) always yields the same stream; distinct labels
    yield independent streams.  Labels may be strings or ints.
    """
    return np.random.default_rng(np.random.SeedSequence(_digest_words(seed, labels)))


def derive_seed(seed: int, *labels) -> int:
    """Integer sub-seed for the stream named by `labels` (for retry loops)."""
    words = _digest_words(seed, labels)
    return words[0] | (words[1] << 32)
