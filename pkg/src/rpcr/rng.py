"""Seeded random streams.

Every random object in the package is drawn from a Philox (counter-based)
generator keyed by a 64-bit seed. Child streams are derived as
``seed XOR h(keys)`` with ``h`` a stable 64-bit hash, so replicate ``i`` gets
the same stream no matter in which order (or on which thread) it runs.
"""
import hashlib

import numpy as np

MASK64 = (1 << 64) - 1


def _key_hash(keys):
    payload = repr(tuple(keys)).encode()
    return int.from_bytes(hashlib.blake2b(payload, digest_size=8).digest(), "little")


def derive_seed(seed, *keys):
    """Child seed for the sub-stream identified by ``keys``."""
    if not keys:
        return int(seed) & MASK64
    return (int(seed) ^ _key_hash(keys)) & MASK64


def make_rng(seed, *keys):
    return np.random.Generator(np.random.Philox(derive_seed(seed, *keys)))
