"""Network-wide entropy from per-switch summaries.

Each switch reports its packet count, its Q10 ``sum f log2 f`` estimate and
its LogLog register. Counts and sums add; registers merge by union. A flow
whose packets are seen by several switches is counted at each of them, which
biases the merged entropy (the register union is unaffected). That bias is
left in place: removing it needs routing knowledge the summaries lack.
"""

from __future__ import annotations

import base64
import json
from dataclasses import dataclass
from pathlib import Path

from .cardinality import ConfigError, LogLogRegister, merge_all
from .entropy import EntropyAccumulator, NormEntropyResult, entropy_q10, normalized_entropy_q10
from .fixpoint import DEFAULT_PARAMS, ApproxParams

_FIELDS = ("switch_id", "packets", "sum_q10", "loglog")


@dataclass(frozen=True)
class SwitchSummary:
    switch_id: str
    packets: int
    sum_q10: int
    loglog: LogLogRegister

    @classmethod
    def from_accumulator(cls, switch_id: str, acc: EntropyAccumulator) -> "SwitchSummary":
        return cls(str(switch_id), acc.packets, acc.sum_q10, acc.loglog.copy())

    def to_dict(self) -> dict:
        return {
            "switch_id": self.switch_id,
            "packets": self.packets,
            "sum_q10": self.sum_q10,
            "loglog": base64.b64encode(self.loglog.to_bytes()).decode("ascii"),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "SwitchSummary":
        missing = [f for f in _FIELDS if f not in d]
        if missing:
            raise ValueError(f"summary is missing field {missing[0]!r}")
        packets, sum_q10 = d["packets"], d["sum_q10"]
        if not isinstance(packets, int) or packets < 0:
            raise ValueError("summary field 'packets' must be a non-negative integer")
        if not isinstance(sum_q10, int) or sum_q10 < 0:
            raise ValueError("summary field 'sum_q10' must be a non-negative integer")
        reg = LogLogRegister.from_bytes(base64.b64decode(d["loglog"], validate=True))
        return cls(str(d["switch_id"]), packets, sum_q10, reg)

    @classmethod
    def from_json(cls, text: str) -> "SwitchSummary":
        return cls.from_dict(json.loads(text))

    def save(self, path) -> None:
        Path(path).write_text(self.to_json() + "\n")

    @classmethod
    def load(cls, path) -> "SwitchSummary":
        return cls.from_json(Path(path).read_text())


def networkwide_entropy(summaries, params: ApproxParams = DEFAULT_PARAMS) -> NormEntropyResult:
    """Merged entropy and normalized entropy over all switches.

    Raises :class:`ConfigError` if the registers were built with different
    ``k`` or hash seeds.
    """
    summaries = list(summaries)
    if not summaries:
        raise ValueError("at least one summary is required")
    packets = sum(s.packets for s in summaries)
    total = sum(s.sum_q10 for s in summaries)
    merged = merge_all([s.loglog for s in summaries])
    h = entropy_q10(packets, total, params)
    n_hat = merged.query()
    return NormEntropyResult(h, normalized_entropy_q10(h, n_hat, params), n_hat, packets)


__all__ = ["ConfigError", "SwitchSummary", "networkwide_entropy"]
