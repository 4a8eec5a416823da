"""Seeded 64-bit key hashing.

Keys are opaque byte strings. They are folded into 8-byte big-endian
chunks and mixed with the murmur3 64-bit finaliser, so a 4-byte IPv4
address hashes to ``fmix64(seed_state ^ int(address))``. That makes the
numpy path for IPv4 keys a single vectorised finaliser call.
"""

from __future__ import annotations

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_C1 = 0xFF51AFD7ED558CCD
_C2 = 0xC4CEB9FE1A85EC53


def fmix64(h: int) -> int:
    h ^= h >> 33
    h = (h * _C1) & MASK64
    h ^= h >> 33
    h = (h * _C2) & MASK64
    h ^= h >> 33
    return h


def fmix64_array(h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=np.uint64)
    s = np.uint64(33)
    h = h ^ (h >> s)
    h = h * np.uint64(_C1)
    h = h ^ (h >> s)
    h = h * np.uint64(_C2)
    h = h ^ (h >> s)
    return h


def derive_seeds(seed: int, count: int) -> list[int]:
    """``count`` well-separated 64-bit seeds from one base seed: a golden-ratio
    counter passed through the finaliser, splitmix style."""
    out = []
    state = seed & MASK64
    for _ in range(count):
        state = (state + _GOLDEN) & MASK64
        out.append(fmix64(state))
    return out


def _seed_state(seed: int, length: int) -> int:
    return fmix64((seed ^ ((length * _GOLDEN) & MASK64)) & MASK64)


def hash64(key: bytes, seed: int) -> int:
    h = _seed_state(seed, len(key))
    for i in range(0, max(len(key), 1), 8):
        h = fmix64(h ^ int.from_bytes(key[i:i + 8], "big"))
    return h


def hash64_u32(keys: np.ndarray, seed: int) -> np.ndarray:
    """Vectorised :func:`hash64` for 4-byte keys given as integers."""
    keys = np.asarray(keys).astype(np.uint64)
    return fmix64_array(keys ^ np.uint64(_seed_state(seed, 4)))


def ipv4_key(addr: int) -> bytes:
    return int(addr).to_bytes(4, "big")
