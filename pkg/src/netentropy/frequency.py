"""Count-min and Count sketches for per-flow packet counts."""

from __future__ import annotations

import numpy as np

from .hashing import derive_seeds, hash64, hash64_u32

COUNT_MIN = "count_min"
COUNT = "count"
VARIANTS = (COUNT_MIN, COUNT)


class FreqSketch:
    """An ``n_h x n_s`` grid of counters.

    ``count_min`` answers with the minimum over rows (never underestimates);
    ``count`` keeps signed counters and answers with the lower median of the
    signed row readings, clamped at zero.
    """

    def __init__(self, variant: str = COUNT, n_h: int = 5, n_s: int = 2000, seed: int = 0):
        if variant not in VARIANTS:
            raise ValueError(f"unknown sketch variant {variant!r}")
        if n_h < 1 or n_s < 1:
            raise ValueError("sketch dimensions must be positive")
        self.variant = variant
        self.n_h = n_h
        self.n_s = n_s
        self.seed = seed
        seeds = derive_seeds(seed, 2 * n_h)
        self.row_seeds = seeds[:n_h]
        self.sign_seeds = seeds[n_h:] if variant == COUNT else []
        self.counters = np.zeros((n_h, n_s), dtype=np.int64)

    def __repr__(self):
        return f"FreqSketch({self.variant!r}, n_h={self.n_h}, n_s={self.n_s}, seed={self.seed})"

    def reset(self) -> None:
        self.counters[:] = 0

    def _cells(self, flow_key: bytes) -> list[int]:
        return [hash64(flow_key, s) % self.n_s for s in self.row_seeds]

    def _signs(self, flow_key: bytes) -> list[int]:
        return [1 - 2 * (hash64(flow_key, s) >> 63) for s in self.sign_seeds]

    def update(self, flow_key: bytes) -> None:
        cells = self._cells(flow_key)
        if self.variant == COUNT_MIN:
            for r, c in enumerate(cells):
                self.counters[r, c] += 1
        else:
            for r, (c, sg) in enumerate(zip(cells, self._signs(flow_key))):
                self.counters[r, c] += sg

    def query(self, flow_key: bytes) -> int:
        cells = self._cells(flow_key)
        if self.variant == COUNT_MIN:
            return int(min(self.counters[r, c] for r, c in enumerate(cells)))
        readings = sorted(
            sg * int(self.counters[r, c])
            for r, (c, sg) in enumerate(zip(cells, self._signs(flow_key)))
        )
        return max(0, readings[(len(readings) - 1) // 2])

    # -- batch path for IPv4 keys --------------------------------------------

    def cells_u32(self, keys: np.ndarray) -> np.ndarray:
        """Row-wise cell index of every key, shape ``(n_h, len(keys))``."""
        out = np.empty((self.n_h, len(keys)), dtype=np.int64)
        for r, s in enumerate(self.row_seeds):
            out[r] = (hash64_u32(keys, s) % np.uint64(self.n_s)).astype(np.int64)
        return out

    def signs_u32(self, keys: np.ndarray) -> np.ndarray:
        out = np.empty((self.n_h, len(keys)), dtype=np.int64)
        for r, s in enumerate(self.sign_seeds):
            out[r] = 1 - 2 * (hash64_u32(keys, s) >> np.uint64(63)).astype(np.int64)
        return out

    def query_u32(self, keys: np.ndarray, clamp: bool = True) -> np.ndarray:
        """Batch :meth:`query` without updating. ``clamp=False`` returns the
        raw signed median of the count variant."""
        keys = np.asarray(keys)
        readings = np.take_along_axis(self.counters, self.cells_u32(keys), axis=1)
        if self.variant == COUNT_MIN:
            return readings.min(axis=0)
        readings *= self.signs_u32(keys)
        readings.sort(axis=0)
        med = readings[(self.n_h - 1) // 2]
        return np.maximum(med, 0) if clamp else med

    def update_and_query_u32(self, keys: np.ndarray) -> np.ndarray:
        """Feed ``keys`` in order and return, per key, the query answer taken
        right after its own update.

        Equivalent to alternating :meth:`update` and :meth:`query` on each
        4-byte key, but computed with per-cell running sums.
        """
        keys = np.asarray(keys)
        n = len(keys)
        if n == 0:
            return np.zeros(0, dtype=np.int64)
        cells = self.cells_u32(keys)
        if self.variant == COUNT_MIN:
            deltas = np.ones((self.n_h, n), dtype=np.int64)
        else:
            signs = self.signs_u32(keys)
            deltas = signs
        readings = np.empty((self.n_h, n), dtype=np.int64)
        for r in range(self.n_h):
            readings[r] = _running_cell_values(cells[r], deltas[r], self.counters[r])
            np.add.at(self.counters[r], cells[r], deltas[r])
        if self.variant == COUNT_MIN:
            return readings.min(axis=0)
        readings *= signs
        readings.sort(axis=0)
        return np.maximum(readings[(self.n_h - 1) // 2], 0)


def _running_cell_values(cells: np.ndarray, deltas: np.ndarray, initial: np.ndarray) -> np.ndarray:
    """Value of ``counter[cells[t]]`` just after the t-th increment."""
    # 16-bit indices let numpy use a radix sort
    sort_key = cells.astype(np.uint16) if len(initial) <= 1 << 16 else cells
    order = np.argsort(sort_key, kind="stable")
    c = cells[order]
    cs = np.cumsum(deltas[order])
    new_group = np.r_[True, c[1:] != c[:-1]]
    # running total just before each group starts, broadcast over the group
    before = np.r_[0, cs[:-1]][new_group]
    base = before[np.cumsum(new_group) - 1]
    out = np.empty_like(cs)
    out[order] = cs - base + initial[c]
    return out
