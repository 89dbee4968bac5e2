"""Keyed random streams.

Every stochastic quantity in the package is drawn from a stream identified by
``(master seed, key...)`` so that results do not depend on evaluation order.
"""

from __future__ import annotations

import hashlib

import numpy as np

_MASK64 = (1 << 64) - 1


def _key_word(part) -> int:
    if isinstance(part, (bool, np.bool_)):
        return int(part)
    if isinstance(part, (int, np.integer)):
        v = int(part)
        # zigzag so negative lattice coordinates map to distinct nonnegative words
        return (v << 1) if v >= 0 else ((-v << 1) - 1)
    if isinstance(part, (float, np.floating)):
        part = "f:" + float(part).hex()
    if isinstance(part, str):
        digest = hashlib.blake2b(part.encode(), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    if isinstance(part, (tuple, list)):
        digest = hashlib.blake2b(repr(tuple(_key_word(p) for p in part)).encode(), digest_size=8)
        return int.from_bytes(digest.digest(), "little")
    raise TypeError(f"unsupported key component {part!r}")


def seed_sequence(seed: int, *key) -> np.random.SeedSequence:
    return np.random.SeedSequence(entropy=int(seed) & _MASK64, spawn_key=tuple(_key_word(k) for k in key))


def stream(seed: int, *key) -> np.random.Generator:
    """Independent generator for the given master seed and key path."""
    return np.random.Generator(np.random.PCG64(seed_sequence(seed, *key)))


def keyed_uniform(seed: int, *key) -> float:
    """A single uniform in [0, 1) determined by ``(seed, key)`` alone."""
    word = int(seed_sequence(seed, *key).generate_state(1, dtype=np.uint64)[0])
    return (word >> 11) * (1.0 / (1 << 53))


def derive_seed(seed: int, *key) -> int:
    """A 63-bit integer seed derived from ``(seed, key)``."""
    return int(seed_sequence(seed, *key).generate_state(1, dtype=np.uint64)[0]) >> 1
