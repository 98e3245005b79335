"""Deterministic seed derivation and random generators.

All randomness in the library flows through PCG64 generators whose seeds
are derived by hashing a master seed together with a path of string tags.
This makes every sub-experiment replayable bit-for-bit across platforms.
"""

import hashlib

import numpy as np


def derive_seed(master: int, *tags) -> int:
    """Derive a 64-bit child seed from a master seed and a tag path."""
    h = hashlib.sha256()
    h.update(str(int(master)).encode())
    for tag in tags:
        h.update(b"/")
        h.update(str(tag).encode())
    return int.from_bytes(h.digest()[:8], "little")


def make_rng(seed: int, *tags) -> np.random.Generator:
    """PCG64 generator for the given seed, optionally scoped by tags."""
    if tags:
        seed = derive_seed(seed, *tags)
    return np.random.Generator(np.random.PCG64(seed))
