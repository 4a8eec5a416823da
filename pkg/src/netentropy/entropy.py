"""Per-interval normalized-entropy estimation in Q10 integer arithmetic.

Per packet, the accumulator keeps the packet count ``|S|`` and a running
estimate of ``sum_i f_i log2 f_i`` (amplified by 2**10). When a packet
raises its flow's estimated count ``f`` above 1, the sum grows by
``log2 f + 1/ln 2``, the large-``f`` limit of the exact increment
``f log2 f - (f - 1) log2 (f - 1)``. At the end of the interval

    H      = log2|S| - Sum/|S|             (log2|S| alone when |S| > Sum)
    H_norm = 2 ** (log2 H - log2 log2 n)

with both divisions carried out as log differences fed to ``p4exp``.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass

import numpy as np

from .cardinality import LogLogRegister
from .fixpoint import DEFAULT_PARAMS, ONE_Q10, Q, ApproxParams, p4exp, p4log, p4log_array
from .frequency import COUNT, FreqSketch
from .hashing import derive_seeds

INV_LN2_Q10 = 1474  # floor(1.44 * 2**10)
LOG_AMPLIFY_Q10 = Q << Q  # log2(2**10) in Q10


class EmptyIntervalError(ValueError):
    """Raised when an estimate is requested for an interval with no packets."""


@dataclass(frozen=True)
class NormEntropyResult:
    h_q10: int
    h_norm_q10: int
    n_hat: int
    packets: int
    interval: int | None = None

    @property
    def h(self) -> float:
        return self.h_q10 / ONE_Q10

    @property
    def h_norm(self) -> float:
        return self.h_norm_q10 / ONE_Q10

    def to_dict(self) -> dict:
        d = asdict(self)
        d["h"] = self.h
        d["h_norm"] = self.h_norm
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def entropy_q10(packets: int, sum_q10: int, params: ApproxParams = DEFAULT_PARAMS) -> int:
    """Entropy (Q10) from the packet count and the Q10 ``sum f log2 f`` estimate."""
    if packets < 1:
        raise EmptyIntervalError("entropy of an empty interval is undefined")
    total = sum_q10 >> Q
    log_s = p4log(packets, params)
    if packets > total:
        return log_s
    diff = p4log(total, params) - log_s
    # Sum/|S| = 2**diff, produced directly in Q10 by adding log2(2**10).
    correction = p4exp(diff + LOG_AMPLIFY_Q10, params)
    return max(0, log_s - correction)


def normalized_entropy_q10(h_q10: int, n_hat: int, params: ApproxParams = DEFAULT_PARAMS) -> int:
    """``H / log2(n_hat)`` in Q10; 0 whenever a logarithm would be undefined."""
    if h_q10 <= 0 or n_hat <= 1:
        return 0
    loglog_n = p4log(p4log(n_hat, params), params) - LOG_AMPLIFY_Q10
    diff_n = p4log(h_q10, params) - loglog_n
    if diff_n <= 0:
        return 0
    return p4exp(diff_n, params)


class EntropyAccumulator:
    """Streaming state for one measurement interval of one switch."""

    def __init__(
        self,
        sketch: FreqSketch | None = None,
        loglog: LogLogRegister | None = None,
        interval_s: float = 1.0,
        params: ApproxParams = DEFAULT_PARAMS,
    ):
        self.sketch = sketch if sketch is not None else FreqSketch(COUNT, 5, 2000, seed=1)
        self.loglog = loglog if loglog is not None else LogLogRegister(11, hash_seed=2)
        self.interval_s = interval_s
        self.params = params
        self.packets = 0
        self.sum_q10 = 0

    @classmethod
    def build(cls, variant=COUNT, n_h=5, n_s=2000, k=11, seed=0, interval_s=1.0, params=DEFAULT_PARAMS):
        sketch_seed, loglog_seed = derive_seeds(seed, 2)
        return cls(
            FreqSketch(variant, n_h, n_s, sketch_seed),
            LogLogRegister(k, loglog_seed, params),
            interval_s,
            params,
        )

    def update(self, flow_key: bytes) -> None:
        self.packets += 1
        self.sketch.update(flow_key)
        f = self.sketch.query(flow_key)
        self.loglog.update(flow_key)
        if f > 1:
            self.sum_q10 += p4log(f, self.params) + INV_LN2_Q10

    def update_u32(self, keys) -> None:
        """Feed a batch of IPv4 keys (as integers) in arrival order."""
        keys = np.asarray(keys, dtype=np.uint32)
        if len(keys) == 0:
            return
        self.packets += len(keys)
        f = self.sketch.update_and_query_u32(keys)
        self.loglog.update_u32(keys)
        big = f[f > 1]
        if len(big):
            self.sum_q10 += int(p4log_array(big, self.params).sum()) + INV_LN2_Q10 * len(big)

    def update_counts(self, f) -> None:
        """Feed pre-computed per-packet flow counts (e.g. from an exact counter)
        instead of sketch answers. Used to isolate the Sum recurrence."""
        f = np.asarray(f, dtype=np.int64)
        self.packets += len(f)
        big = f[f > 1]
        if len(big):
            self.sum_q10 += int(p4log_array(big, self.params).sum()) + INV_LN2_Q10 * len(big)

    def estimate_entropy(self) -> int:
        return entropy_q10(self.packets, self.sum_q10, self.params)

    def estimate_normalized(self, interval: int | None = None) -> NormEntropyResult:
        h = self.estimate_entropy()
        n_hat = self.loglog.query()
        h_norm = normalized_entropy_q10(h, n_hat, self.params)
        return NormEntropyResult(h, h_norm, n_hat, self.packets, interval)

    def reset(self) -> None:
        self.packets = 0
        self.sum_q10 = 0
        self.sketch.reset()
        self.loglog.reset()
