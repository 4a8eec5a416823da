"""LogLog flow-cardinality estimation with integer-only update and query."""

from __future__ import annotations

import struct

import numpy as np

from .fixpoint import (
    DEFAULT_PARAMS,
    ApproxParams,
    Q,
    fill_ones_rightward,
    hamming_weight,
    p4exp,
)
from .hashing import hash64, hash64_u32

OS = 32
ALPHA_Q10 = 406  # floor(0.39701 * 2**10)
_HEADER = struct.Struct("<IBQ")


class ConfigError(ValueError):
    """Raised when structures with incompatible parameters are combined."""


class LogLogRegister:
    """An ``m = 2**k`` cell LogLog register.

    Each cell holds the largest rank seen for its bucket, where the rank is
    one plus the index of the rightmost set bit of the hash bits left after
    the bucket index (``OS + 1`` when none are set).
    """

    def __init__(self, k: int = 11, hash_seed: int = 0, params: ApproxParams = DEFAULT_PARAMS):
        if not 4 <= k <= 16:
            raise ConfigError(f"k must be in [4, 16], got {k}")
        self.k = k
        self.m = 1 << k
        self.hash_seed = hash_seed & 0xFFFFFFFFFFFFFFFF
        self.params = params
        self.cells = np.zeros(self.m, dtype=np.uint8)

    def __repr__(self):
        return f"LogLogRegister(k={self.k}, hash_seed={self.hash_seed:#x}, sum={self.cell_sum()})"

    def __eq__(self, other):
        if not isinstance(other, LogLogRegister):
            return NotImplemented
        return (self.k, self.hash_seed) == (other.k, other.hash_seed) and np.array_equal(
            self.cells, other.cells
        )

    def copy(self) -> "LogLogRegister":
        out = LogLogRegister(self.k, self.hash_seed, self.params)
        out.cells[:] = self.cells
        return out

    def cell_sum(self) -> int:
        return int(self.cells.sum(dtype=np.int64))

    def _rank(self, s):
        x = s >> self.k
        return OS + 1 - hamming_weight(fill_ones_rightward(x))

    def update(self, flow_key: bytes) -> None:
        s = hash64(flow_key, self.hash_seed) & 0xFFFFFFFF
        bucket = s & (self.m - 1)
        value = self._rank(s)
        if value > self.cells[bucket]:
            self.cells[bucket] = value

    def update_u32(self, keys: np.ndarray) -> None:
        """Batch update for IPv4 keys given as integers; same result as
        calling :meth:`update` on each 4-byte key in turn."""
        if len(keys) == 0:
            return
        s = hash64_u32(keys, self.hash_seed) & np.uint64(0xFFFFFFFF)
        buckets = (s & np.uint64(self.m - 1)).astype(np.intp)
        values = self._rank(s).astype(np.uint8)
        np.maximum.at(self.cells, buckets, values)

    def query(self) -> int:
        """Estimated number of distinct keys.

        The cell sum is promoted to Q10 before the division by ``m`` so the
        fractional part of the mean rank reaches the exponential.
        """
        mean_q10 = (self.cell_sum() << Q) >> self.k
        exp = p4exp(mean_q10, self.params)
        return (exp * ALPHA_Q10 * self.m) >> Q

    def reset(self) -> None:
        self.cells[:] = 0

    def check_compatible(self, other: "LogLogRegister") -> None:
        if self.k != other.k:
            raise ConfigError(f"cannot merge registers with k={self.k} and k={other.k}")
        if self.hash_seed != other.hash_seed:
            raise ConfigError("cannot merge registers built with different hash seeds")

    def merge(self, other: "LogLogRegister") -> "LogLogRegister":
        self.check_compatible(other)
        out = self.copy()
        np.maximum(out.cells, other.cells, out=out.cells)
        return out

    def to_bytes(self) -> bytes:
        """``<u32 length><u8 k><u64 seed><m cell bytes>``, little-endian; the
        length counts the bytes after the prefix."""
        body_len = _HEADER.size - 4 + self.m
        return _HEADER.pack(body_len, self.k, self.hash_seed) + self.cells.tobytes()

    @classmethod
    def from_bytes(cls, blob: bytes) -> "LogLogRegister":
        if len(blob) < _HEADER.size:
            raise ValueError("register blob is truncated")
        body_len, k, seed = _HEADER.unpack_from(blob)
        if body_len != len(blob) - 4:
            raise ValueError(f"register blob length mismatch: header says {body_len}, got {len(blob) - 4}")
        reg = cls(k, seed)
        cells = np.frombuffer(blob, dtype=np.uint8, offset=_HEADER.size)
        if len(cells) != reg.m:
            raise ValueError(f"expected {reg.m} cells, got {len(cells)}")
        if cells.max(initial=0) > OS + 1:
            raise ValueError("register cell value out of range")
        reg.cells[:] = cells
        return reg


def merge(a: LogLogRegister, b: LogLogRegister) -> LogLogRegister:
    return a.merge(b)


def merge_all(registers) -> LogLogRegister:
    registers = list(registers)
    if not registers:
        raise ValueError("nothing to merge")
    out = registers[0].copy()
    for reg in registers[1:]:
        out.check_compatible(reg)
        np.maximum(out.cells, reg.cells, out=out.cells)
    return out
