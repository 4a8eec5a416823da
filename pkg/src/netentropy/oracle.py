"""Floating-point references for tests and evaluation.

Nothing in here feeds the integer estimators; these functions exist to
check them and to model the comparison baseline.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .hashing import hash64, hash64_u32


class UndefinedMetricError(ValueError):
    pass


class SaturationError(ValueError):
    pass


def _as_keys(records, key=None) -> np.ndarray | list:
    if key is not None:
        return [key(r) for r in records]
    return records


def flow_counts(keys) -> np.ndarray:
    keys = np.asarray(keys)
    if keys.dtype == object:
        _, counts = np.unique(np.asarray([bytes(k) for k in keys], dtype=object), return_counts=True)
        return counts
    _, counts = np.unique(keys, return_counts=True)
    return counts


def exact_entropy(records, key=None) -> tuple[float, float]:
    """Shannon entropy (bits) and normalized entropy of the key distribution.

    ``records`` is either an array of keys or, with ``key``, any iterable
    from which ``key`` extracts the flow key. ``H_norm`` is 0 for one flow.
    """
    keys = _as_keys(records, key)
    if len(keys) == 0:
        raise ValueError("entropy of an empty interval is undefined")
    counts = flow_counts(keys)
    return entropy_from_counts(counts)


def entropy_from_counts(counts) -> tuple[float, float]:
    counts = np.asarray(counts, dtype=np.float64)
    counts = counts[counts > 0]
    total = counts.sum()
    if total == 0:
        raise ValueError("entropy of an empty interval is undefined")
    p = counts / total
    h = float(-(p * np.log2(p)).sum())
    h = max(h, 0.0)
    n = len(counts)
    return h, (h / math.log2(n) if n > 1 else 0.0)


def exact_cardinality(records, key=None) -> int:
    keys = _as_keys(records, key)
    if len(keys) == 0:
        return 0
    return len(flow_counts(keys))


def running_counts(keys) -> np.ndarray:
    """Exact count of each packet's flow just after that packet arrives."""
    keys = np.asarray(keys)
    if len(keys) == 0:
        return np.zeros(0, dtype=np.int64)
    order = np.argsort(keys, kind="stable")
    k = keys[order]
    new = np.r_[True, k[1:] != k[:-1]]
    idx = np.arange(len(k))
    start = np.maximum.accumulate(np.where(new, idx, 0))
    out = np.empty(len(k), dtype=np.int64)
    out[order] = idx - start + 1
    return out


def approx_sum_reference(keys) -> float:
    """Real-valued ``sum over packets with f > 1 of (log2 f + 1.44)``."""
    f = running_counts(keys)
    f = f[f > 1].astype(np.float64)
    return float((np.log2(f) + 1.44).sum())


def linear_counting(keys, bitmap_bits: int, seed: int = 0) -> float:
    """Linear-counting estimate ``-m ln(empty / m)`` with an ``m``-bit bitmap."""
    if bitmap_bits < 1:
        raise ValueError("bitmap_bits must be >= 1")
    keys_arr = np.asarray(keys)
    bitmap = np.zeros(bitmap_bits, dtype=bool)
    if len(keys_arr):
        if keys_arr.dtype.kind in "ui":
            h = hash64_u32(keys_arr, seed) % np.uint64(bitmap_bits)
            bitmap[h.astype(np.intp)] = True
        else:
            for k in keys:
                bitmap[hash64(bytes(k), seed) % bitmap_bits] = True
    empty = bitmap_bits - int(bitmap.sum())
    if empty == 0:
        raise SaturationError(f"all {bitmap_bits} bitmap cells are set")
    return -bitmap_bits * math.log(empty / bitmap_bits)


def relative_error(estimate: float, exact: float) -> float:
    """``|exact - estimate| / exact`` in percent."""
    if exact == 0:
        raise UndefinedMetricError("relative error against an exact value of 0 is undefined")
    return abs(exact - estimate) / abs(exact) * 100.0


def mean_relative_error(pairs) -> float:
    errs = [relative_error(est, ex) for est, ex in pairs]
    if not errs:
        raise UndefinedMetricError("no intervals")
    return sum(errs) / len(errs)


@dataclass(frozen=True)
class DetectionMetrics:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    @property
    def d_tp(self) -> float | None:
        pos = self.tp + self.fn
        return None if pos == 0 else 100.0 * self.tp / pos

    @property
    def d_fp(self) -> float | None:
        neg = self.tn + self.fp
        return None if neg == 0 else 100.0 * self.fp / neg

    @property
    def d_acc(self) -> float | None:
        return None if self.total == 0 else 100.0 * (self.tp + self.tn) / self.total

    def as_tuple(self):
        return self.d_tp, self.d_fp, self.d_acc

    def to_dict(self) -> dict:
        return {
            "TP": self.tp, "FP": self.fp, "TN": self.tn, "FN": self.fn,
            "D_tp": self.d_tp, "D_fp": self.d_fp, "D_acc": self.d_acc,
        }


def detection_metrics(alarms, truth) -> DetectionMetrics:
    """Confusion counts of per-interval alarms against per-interval labels.

    Rates for a class with no members are reported as ``None``.
    """
    alarms = list(alarms)
    truth = list(truth)
    if len(alarms) != len(truth):
        raise ValueError(f"{len(alarms)} verdicts vs {len(truth)} labels")
    tp = sum(1 for a, t in zip(alarms, truth) if a and t)
    fp = sum(1 for a, t in zip(alarms, truth) if a and not t)
    tn = sum(1 for a, t in zip(alarms, truth) if not a and not t)
    fn = sum(1 for a, t in zip(alarms, truth) if not a and t)
    return DetectionMetrics(tp, fp, tn, fn)


def baseline_dual_entropy_detector(
    src_entropy,
    dst_entropy,
    k: float,
    window: int = 50,
    min_history: int = 5,
    freeze: bool = False,
) -> list[bool]:
    """Two-sided baseline on raw (not normalized) entropies.

    Interval ``t`` alarms when its source entropy rises above
    ``mean + k*std`` or its destination entropy drops below
    ``mean - k*std``, statistics taken over the trailing ``window``
    intervals. No alarm is raised before ``min_history`` intervals of
    history exist.

    With ``freeze=False`` the band statistics do not depend on ``k``, so
    the alarm sets for two sensitivities nest. ``freeze=True`` keeps
    alarmed intervals out of the history, like the adaptive threshold of
    the main detector.
    """
    src = np.asarray(src_entropy, dtype=np.float64)
    dst = np.asarray(dst_entropy, dtype=np.float64)
    if src.shape != dst.shape:
        raise ValueError("source and destination series differ in length")
    hist: list[int] = []
    alarms = []
    for t in range(len(src)):
        alarm = False
        if len(hist) >= min_history:
            w = hist[-window:]
            s_mu, s_sd = src[w].mean(), src[w].std()
            d_mu, d_sd = dst[w].mean(), dst[w].std()
            alarm = bool(src[t] > s_mu + k * s_sd or dst[t] < d_mu - k * d_sd)
        alarms.append(alarm)
        if not (freeze and alarm):
            hist.append(t)
    return alarms
