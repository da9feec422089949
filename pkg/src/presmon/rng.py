"""Deterministic random-stream management.

Every stochastic component draws from a named substream derived from the
single root seed, so runs are bit-reproducible and adding a consumer never
perturbs the draws of existing ones.
"""

from __future__ import annotations

import zlib

import numpy as np


def substream_seed(root_seed: int, *names: object) -> np.random.SeedSequence:
    """Derive a child seed sequence from ``root_seed`` and a name path.

    Name components are hashed with CRC-32, which is stable across
    platforms and Python versions.
    """
    keys = [zlib.crc32(str(n).encode("utf-8")) for n in names]
    return np.random.SeedSequence([int(root_seed)] + keys)


def substream(root_seed: int, *names: object) -> np.random.Generator:
    """Return a generator for the named substream of ``root_seed``."""
    return np.random.default_rng(substream_seed(root_seed, *names))
