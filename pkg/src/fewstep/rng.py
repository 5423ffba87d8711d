"""Deterministic named random streams derived from a single global seed.

Every consumer of randomness asks for a stream by (purpose tag, index), so
re-running with the same global seed reproduces each stream bit for bit and
adding a new consumer never perturbs existing ones.
"""

from __future__ import annotations

import hashlib

import numpy as np


def _tag_hash(tag: str) -> int:
    return int.from_bytes(hashlib.sha256(tag.encode()).digest()[:8], "little")


def stream(global_seed: int, tag: str, index: int = 0) -> np.random.Generator:
    """Independent PCG64 generator keyed by (global seed, purpose tag, index)."""
    ss = np.random.SeedSequence([int(global_seed), _tag_hash(tag), int(index)])
    return np.random.Generator(np.random.PCG64(ss))
