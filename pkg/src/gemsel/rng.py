"""Seeded, portable randomness.

All randomness in the package flows through PCG64 generators built from
``numpy.random.SeedSequence``.  Derived streams use the rule

    SeedSequence([root, part_1, part_2, ...])

where string path parts are mapped to integers via CRC-32 of their UTF-8
bytes.  The rule is stable across platforms and lets independent streams
(replications, folds, inner solvers) be derived from one root seed without
statefully sharing a generator.
"""

from __future__ import annotations

import zlib

import numpy as np


def _as_entropy(part) -> int:
    if isinstance(part, str):
        return zlib.crc32(part.encode("utf-8"))
    return int(part)


def derive_rng(root: int, *path) -> np.random.Generator:
    """PCG64 generator for stream ``(root, *path)``."""
    entropy = [_as_entropy(root)] + [_as_entropy(p) for p in path]
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))


def fisher_yates(n: int, rng: np.random.Generator) -> np.ndarray:
    """Explicit Fisher-Yates shuffle of ``arange(n)``.

    Spelled out (rather than ``rng.permutation``) so the partition algorithm
    is fully documented: swap position i with a uniform draw from [0, i].
    """
    idx = np.arange(n, dtype=np.int64)
    for i in range(n - 1, 0, -1):
        j = int(rng.integers(0, i + 1))
        idx[i], idx[j] = idx[j], idx[i]
    return idx
