"""Normalized-entropy DDoS detector with an adaptive EWMA threshold.

An interval raises an alarm when its normalized entropy falls strictly
below the threshold carried over from the previous interval. Intervals
without an alarm feed the EWMA and set the next threshold to
``EWMA - epsilon``; alarmed intervals leave both untouched, so attack
traffic never drags the threshold down.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from .fixpoint import ONE_Q10, Q

DEFAULT_ALPHA_Q10 = 133  # floor(0.13 * 2**10)
DEFAULT_EPSILON_Q10 = 10  # floor(0.01 * 2**10)


def to_q10(value: float) -> int:
    """Truncating conversion of a real parameter to Q10."""
    return int(value * ONE_Q10)


@dataclass(frozen=True)
class IntervalVerdict:
    interval_index: int
    h_norm_q10: int | None
    lambda_q10_used: int | None
    alarm: bool

    def to_dict(self) -> dict:
        return {
            "k": self.interval_index,
            "h_norm": self.h_norm_q10,
            "lambda": self.lambda_q10_used,
            "alarm": self.alarm,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


class DetectorState:
    """Per-switch detector state; advance it once per interval, in order.

    ``interval_index`` is 1-based: the first call to :meth:`detect` handles
    interval 1, which has no threshold yet and never alarms.
    """

    def __init__(self, alpha_q10: int = DEFAULT_ALPHA_Q10, epsilon_q10: int = DEFAULT_EPSILON_Q10):
        if not 0 < alpha_q10 < ONE_Q10:
            raise ValueError(f"alpha_q10 must lie in (0, {ONE_Q10}), got {alpha_q10}")
        if not 0 <= epsilon_q10 <= ONE_Q10:
            raise ValueError(f"epsilon_q10 must lie in [0, {ONE_Q10}], got {epsilon_q10}")
        self.alpha_q10 = alpha_q10
        self.epsilon_q10 = epsilon_q10
        self.interval_index = 1
        self.ewma_q10 = 0
        self.lambda_q10 = 0
        self.initialized = False

    @classmethod
    def from_floats(cls, alpha: float = 0.13, epsilon: float = 0.01) -> "DetectorState":
        return cls(to_q10(alpha), to_q10(epsilon))

    def __repr__(self):
        return (
            f"DetectorState(k={self.interval_index}, ewma={self.ewma_q10}, "
            f"lambda={self.lambda_q10}, initialized={self.initialized})"
        )

    def detect(self, h_norm_q10: int) -> IntervalVerdict:
        if self.initialized:
            used = self.lambda_q10
            alarm = h_norm_q10 < used
        else:
            used = None
            alarm = False
        verdict = IntervalVerdict(self.interval_index, h_norm_q10, used, alarm)
        self.update_threshold(h_norm_q10, alarm)
        self.interval_index += 1
        return verdict

    def skip(self) -> IntervalVerdict:
        """Advance past an interval that carried no traffic."""
        verdict = IntervalVerdict(self.interval_index, None, self.lambda_q10 if self.initialized else None, False)
        self.interval_index += 1
        return verdict

    def update_threshold(self, h_norm_q10: int, alarm: bool) -> None:
        if alarm:
            return
        if not self.initialized:
            self.ewma_q10 = h_norm_q10
            self.initialized = True
        else:
            a = self.alpha_q10
            self.ewma_q10 = (a * h_norm_q10 + (ONE_Q10 - a) * self.ewma_q10) >> Q
        self.lambda_q10 = max(0, self.ewma_q10 - self.epsilon_q10)


def run_detector(h_norm_series, alpha_q10: int = DEFAULT_ALPHA_Q10, epsilon_q10: int = DEFAULT_EPSILON_Q10):
    """Verdicts for a whole series; ``None`` entries stand for empty intervals."""
    state = DetectorState(alpha_q10, epsilon_q10)
    return [state.skip() if h is None else state.detect(h) for h in h_norm_series]
