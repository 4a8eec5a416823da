"""Trace replay: intervals through the estimators and the detector."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cardinality import LogLogRegister
from .detector import DEFAULT_ALPHA_Q10, DEFAULT_EPSILON_Q10, DetectorState, IntervalVerdict
from .entropy import EntropyAccumulator, NormEntropyResult
from .fixpoint import DEFAULT_PARAMS, ApproxParams
from .frequency import COUNT
from .hashing import derive_seeds
from .oracle import detection_metrics, exact_cardinality, exact_entropy
from .traces import TraceColumns


@dataclass
class EstimatorConfig:
    variant: str = COUNT
    n_h: int = 5
    n_s: int = 2000
    k_bits: int = 11
    seed: int = 0
    interval_s: float = 1.0
    params: ApproxParams = field(default=DEFAULT_PARAMS)

    def accumulator(self) -> EntropyAccumulator:
        return EntropyAccumulator.build(
            self.variant, self.n_h, self.n_s, self.k_bits, self.seed, self.interval_s, self.params
        )

    def register(self) -> LogLogRegister:
        return LogLogRegister(self.k_bits, derive_seeds(self.seed, 2)[1], self.params)


def entropy_series(trace: TraceColumns, cfg: EstimatorConfig, key: str = "dst", n_intervals=None):
    """One :class:`NormEntropyResult` per interval (``None`` for empty ones).

    The accumulator is reset at every interval boundary.
    """
    keys = trace.dst if key == "dst" else trace.src
    acc = cfg.accumulator()
    out: list[NormEntropyResult | None] = []
    for idx, sl in enumerate(trace.interval_slices(cfg.interval_s, n_intervals)):
        batch = keys[sl]
        if len(batch) == 0:
            out.append(None)
            continue
        acc.reset()
        acc.update_u32(batch)
        out.append(acc.estimate_normalized(idx))
    return out


def oracle_series(trace: TraceColumns, interval_s: float = 1.0, key: str = "dst", n_intervals=None):
    """Exact ``(H, H_norm, n)`` per interval (``None`` for empty ones)."""
    keys = trace.dst if key == "dst" else trace.src
    out = []
    for sl in trace.interval_slices(interval_s, n_intervals):
        batch = keys[sl]
        if len(batch) == 0:
            out.append(None)
            continue
        h, hn = exact_entropy(batch)
        out.append((h, hn, exact_cardinality(batch)))
    return out


def cardinality_series(trace: TraceColumns, cfg: EstimatorConfig, key: str = "dst", n_intervals=None):
    """``(n_hat, n_exact)`` per interval."""
    keys = trace.dst if key == "dst" else trace.src
    reg = cfg.register()
    out = []
    for sl in trace.interval_slices(cfg.interval_s, n_intervals):
        reg.reset()
        batch = keys[sl]
        reg.update_u32(batch)
        out.append((reg.query(), exact_cardinality(batch)))
    return out


@dataclass
class DetectionRun:
    verdicts: list[IntervalVerdict]
    labels: list[bool]
    results: list[NormEntropyResult | None]
    warmup: int = 0

    @property
    def alarms(self) -> list[bool]:
        return [v.alarm for v in self.verdicts]

    def metrics(self):
        w = self.warmup
        return detection_metrics(self.alarms[w:], self.labels[w:])


def detect_series(
    h_norm_series,
    alpha_q10: int = DEFAULT_ALPHA_Q10,
    epsilon_q10: int = DEFAULT_EPSILON_Q10,
    warmup: int = 0,
) -> list[IntervalVerdict]:
    """Run the detector over a per-interval ``h_norm_q10`` series.

    During the first ``warmup`` intervals the detector learns its threshold
    but its alarms are suppressed; ``None`` marks an empty interval.
    """
    state = DetectorState(alpha_q10, epsilon_q10)
    out = []
    for i, h in enumerate(h_norm_series):
        if h is None:
            out.append(state.skip())
            continue
        if i < warmup:
            k = state.interval_index
            state.update_threshold(h, False)
            state.interval_index += 1
            out.append(IntervalVerdict(k, h, None, False))
            continue
        out.append(state.detect(h))
    return out


def run_detection(
    trace: TraceColumns,
    cfg: EstimatorConfig,
    alpha_q10: int = DEFAULT_ALPHA_Q10,
    epsilon_q10: int = DEFAULT_EPSILON_Q10,
    warmup: int = 0,
    results=None,
) -> DetectionRun:
    if results is None:
        results = entropy_series(trace, cfg)
    labels = trace.interval_labels(cfg.interval_s, len(results))
    h = [None if r is None else r.h_norm_q10 for r in results]
    verdicts = detect_series(h, alpha_q10, epsilon_q10, warmup)
    return DetectionRun(verdicts, labels, results, warmup)


def h_norm_q10_list(results) -> list[int | None]:
    return [None if r is None else r.h_norm_q10 for r in results]


def entropy_float_list(results) -> np.ndarray:
    return np.asarray([np.nan if r is None else r.h for r in results])
