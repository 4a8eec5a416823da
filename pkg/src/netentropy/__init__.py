"""Sketch-based normalized-entropy estimation and DDoS detection in integer arithmetic."""

from .cardinality import ConfigError, LogLogRegister, merge, merge_all
from .detector import DetectorState, IntervalVerdict, run_detector
from .entropy import EmptyIntervalError, EntropyAccumulator, NormEntropyResult
from .fixpoint import ApproxParams, p4exp, p4log
from .frequency import COUNT, COUNT_MIN, FreqSketch
from .networkwide import SwitchSummary, networkwide_entropy
from .traces import AttackSpec, FlowRecord, LegitSpec, TraceSpec, generate_trace, read_trace, write_trace

__version__ = "0.1.0"

__all__ = [
    "ApproxParams", "AttackSpec", "COUNT", "COUNT_MIN", "ConfigError", "DetectorState",
    "EmptyIntervalError", "EntropyAccumulator", "FlowRecord", "FreqSketch", "IntervalVerdict",
    "LegitSpec", "LogLogRegister", "NormEntropyResult", "SwitchSummary", "TraceSpec",
    "generate_trace", "merge", "merge_all", "networkwide_entropy", "p4exp", "p4log",
    "read_trace", "run_detector", "write_trace",
]
