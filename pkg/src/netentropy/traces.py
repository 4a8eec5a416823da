"""Flow-record traces: CSV I/O, interval splitting and synthetic generation.

A trace file is CSV with the header ``ts_us,src_ip,dst_ip,label``:
integer microseconds since trace start, dotted-quad IPv4 addresses and a
``legit``/``attack`` label. Records must be in nondecreasing time order.

Synthetic traces mix Zipf-distributed legitimate traffic with one of two
attack shapes:

* ``booter``: an extra flood of ``pps`` packets per second from
  ``n_attack_sources`` distinct sources towards ``victim_ip``;
* ``botnet``: a proportion of the legitimate packets gets its destination
  rewritten to ``victim_ip``; sources are left untouched.
"""

from __future__ import annotations

import csv
import ipaddress
import json
import math
from dataclasses import MISSING, dataclass, field, fields
from typing import Iterable, Iterator

import numpy as np

LEGIT = "legit"
ATTACK = "attack"
HEADER = ["ts_us", "src_ip", "dst_ip", "label"]
US = 1_000_000


class TraceSpecError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


class TraceParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class TraceOrderError(TraceParseError):
    pass


@dataclass(frozen=True)
class FlowRecord:
    ts_us: int
    src_ip: int
    dst_ip: int
    label: str = LEGIT

    @property
    def is_attack(self) -> bool:
        return self.label == ATTACK


def ip_to_int(text: str) -> int:
    return int(ipaddress.IPv4Address(text))


def int_to_ip(value: int) -> str:
    value = int(value)
    return f"{value >> 24}.{(value >> 16) & 255}.{(value >> 8) & 255}.{value & 255}"


# -- specs ------------------------------------------------------------------


@dataclass
class LegitSpec:
    n_flows: int
    pps: float
    zipf_exponent: float = 1.1
    n_sources: int | None = None
    # Relative spread of the number of active destinations from one second
    # to the next (0 keeps the population fixed).
    flow_jitter: float = 0.0


@dataclass
class AttackSpec:
    kind: str
    start_s: float = 0.0
    end_s: float | None = None
    pps: float | None = None
    attack_traffic_proportion: float | None = None
    n_attack_sources: int = 1
    victim_ip: str = "10.255.255.1"


@dataclass
class TraceSpec:
    duration_s: int
    legit: LegitSpec
    interval_s: float = 1.0
    attack: AttackSpec | None = None
    seed: int = 0

    def validate(self) -> "TraceSpec":
        if not isinstance(self.duration_s, int) or self.duration_s < 1:
            raise TraceSpecError("duration_s", "must be a positive integer number of seconds")
        if not self.interval_s > 0:
            raise TraceSpecError("interval_s", "must be positive")
        lg = self.legit
        if lg.n_flows < 1:
            raise TraceSpecError("legit.n_flows", "must be >= 1")
        if lg.pps < 0:
            raise TraceSpecError("legit.pps", "must be >= 0")
        if lg.zipf_exponent < 0:
            raise TraceSpecError("legit.zipf_exponent", "must be >= 0")
        if lg.n_sources is not None and lg.n_sources < 1:
            raise TraceSpecError("legit.n_sources", "must be >= 1")
        if lg.flow_jitter < 0:
            raise TraceSpecError("legit.flow_jitter", "must be >= 0")
        at = self.attack
        if at is None:
            return self
        if at.kind not in ("booter", "botnet"):
            raise TraceSpecError("attack.kind", f"expected 'booter' or 'botnet', got {at.kind!r}")
        end = self.duration_s if at.end_s is None else at.end_s
        if not 0 <= at.start_s <= end <= self.duration_s:
            raise TraceSpecError("attack.start_s", "attack window must lie within [0, duration_s]")
        try:
            ip_to_int(at.victim_ip)
        except ValueError:
            raise TraceSpecError("attack.victim_ip", f"not an IPv4 address: {at.victim_ip!r}") from None
        if at.kind == "booter":
            if at.pps is None or at.pps < 0:
                raise TraceSpecError("attack.pps", "booter attacks need a nonnegative pps")
            if at.n_attack_sources < 1:
                raise TraceSpecError("attack.n_attack_sources", "must be >= 1")
        else:
            atp = at.attack_traffic_proportion
            if atp is None or not 0 <= atp <= 1:
                raise TraceSpecError("attack.attack_traffic_proportion", "must lie in [0, 1]")
        return self

    @classmethod
    def from_dict(cls, data: dict) -> "TraceSpec":
        if not isinstance(data, dict):
            raise TraceSpecError("spec", "expected a JSON object")
        legit = _build(LegitSpec, data, "legit")
        attack = _build(AttackSpec, data, "attack") if data.get("attack") is not None else None
        top = {k: v for k, v in data.items() if k not in ("legit", "attack")}
        known = {f.name for f in fields(cls)} - {"legit", "attack"}
        for k in top:
            if k not in known:
                raise TraceSpecError(k, "unknown field")
        if "duration_s" not in top:
            raise TraceSpecError("duration_s", "missing required field")
        try:
            return cls(legit=legit, attack=attack, **top).validate()
        except TypeError as exc:
            raise TraceSpecError("spec", f"field has the wrong type ({exc})") from None

    @classmethod
    def from_json(cls, path) -> "TraceSpec":
        with open(path) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise TraceSpecError("spec", f"invalid JSON ({exc})") from None
        return cls.from_dict(data)

    def attack_window(self) -> tuple[float, float] | None:
        if self.attack is None:
            return None
        end = self.duration_s if self.attack.end_s is None else self.attack.end_s
        return self.attack.start_s, end


def _build(kind, data, name):
    sub = data.get(name)
    if not isinstance(sub, dict):
        raise TraceSpecError(name, "missing required field" if sub is None else "expected an object")
    names = {f.name for f in fields(kind)}
    for k in sub:
        if k not in names:
            raise TraceSpecError(f"{name}.{k}", "unknown field")
    for f in fields(kind):
        if f.default is MISSING and f.name not in sub:
            raise TraceSpecError(f"{name}.{f.name}", "missing required field")
    return kind(**sub)


# -- columns ----------------------------------------------------------------


@dataclass
class TraceColumns:
    """Column-wise trace held in numpy arrays."""

    ts_us: np.ndarray
    src: np.ndarray
    dst: np.ndarray
    attack: np.ndarray
    duration_s: float | None = field(default=None)

    def __post_init__(self):
        self.ts_us = np.asarray(self.ts_us, dtype=np.int64)
        self.src = np.asarray(self.src, dtype=np.uint32)
        self.dst = np.asarray(self.dst, dtype=np.uint32)
        self.attack = np.asarray(self.attack, dtype=bool)

    def __len__(self):
        return len(self.ts_us)

    @classmethod
    def from_records(cls, records: Iterable[FlowRecord]) -> "TraceColumns":
        records = list(records)
        return cls(
            [r.ts_us for r in records],
            [r.src_ip for r in records],
            [r.dst_ip for r in records],
            [r.is_attack for r in records],
        )

    def records(self) -> Iterator[FlowRecord]:
        for ts, s, d, a in zip(self.ts_us.tolist(), self.src.tolist(), self.dst.tolist(), self.attack.tolist()):
            yield FlowRecord(ts, s, d, ATTACK if a else LEGIT)

    def n_intervals(self, interval_s: float) -> int:
        span = self.duration_s
        if span is None:
            if len(self) == 0:
                return 0
            return int(self.ts_us[-1] // _interval_us(interval_s)) + 1
        return math.ceil(span * US / _interval_us(interval_s))

    def interval_slices(self, interval_s: float = 1.0, n_intervals: int | None = None) -> list[slice]:
        width = _interval_us(interval_s)
        if n_intervals is None:
            n_intervals = self.n_intervals(interval_s)
        edges = np.searchsorted(self.ts_us, np.arange(n_intervals + 1, dtype=np.int64) * width, side="left")
        return [slice(int(edges[i]), int(edges[i + 1])) for i in range(n_intervals)]

    def interval_labels(self, interval_s: float = 1.0, n_intervals: int | None = None) -> list[bool]:
        return [bool(self.attack[s].any()) for s in self.interval_slices(interval_s, n_intervals)]

    def concat(self, other: "TraceColumns") -> "TraceColumns":
        """Append ``other`` shifted to start where this trace ends."""
        if self.duration_s is None:
            raise ValueError("concat needs a trace with a known duration")
        offset = int(round(self.duration_s * US))
        dur = None if other.duration_s is None else self.duration_s + other.duration_s
        return TraceColumns(
            np.r_[self.ts_us, other.ts_us + offset],
            np.r_[self.src, other.src],
            np.r_[self.dst, other.dst],
            np.r_[self.attack, other.attack],
            dur,
        )


def _interval_us(interval_s: float) -> int:
    width = int(round(interval_s * US))
    if width < 1:
        raise ValueError("interval must be at least one microsecond")
    return width


def split_intervals(records: Iterable[FlowRecord], interval_s: float = 1.0, n_intervals: int | None = None):
    """Group an ordered record stream into ``(index, batch)`` pairs.

    Batch ``b`` holds records with ``b*interval <= ts < (b+1)*interval``.
    Empty intervals in between are emitted too; with ``n_intervals`` the
    tail is padded with empty batches up to that count.
    """
    width = _interval_us(interval_s)
    current = 0
    batch: list[FlowRecord] = []
    seen_any = False
    for rec in records:
        idx = rec.ts_us // width
        if n_intervals is not None and idx >= n_intervals:
            break
        while idx > current:
            yield current, batch
            batch = []
            current += 1
        batch.append(rec)
        seen_any = True
    if n_intervals is None:
        if seen_any:
            yield current, batch
        return
    while current < n_intervals:
        yield current, batch
        batch = []
        current += 1


# -- CSV I/O ----------------------------------------------------------------


def write_trace(path, trace: TraceColumns | Iterable[FlowRecord]) -> None:
    if isinstance(trace, TraceColumns):
        rows = zip(trace.ts_us.tolist(), trace.src.tolist(), trace.dst.tolist(), trace.attack.tolist())
    else:
        rows = ((r.ts_us, r.src_ip, r.dst_ip, r.is_attack) for r in trace)
    with open(path, "w", newline="") as fh:
        fh.write(",".join(HEADER) + "\n")
        fh.writelines(
            f"{ts},{int_to_ip(s)},{int_to_ip(d)},{ATTACK if a else LEGIT}\n" for ts, s, d, a in rows
        )


def read_trace(path) -> Iterator[FlowRecord]:
    """Yield records from a trace CSV, checking syntax and time order."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            return
        if [h.strip() for h in header] != HEADER:
            raise TraceParseError(1, f"expected header {','.join(HEADER)}")
        last = -1
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise TraceParseError(lineno, f"expected 4 fields, got {len(row)}")
            ts_text, src, dst, label = (x.strip() for x in row)
            try:
                ts = int(ts_text)
            except ValueError:
                raise TraceParseError(lineno, f"timestamp {ts_text!r} is not an integer") from None
            if ts < 0:
                raise TraceParseError(lineno, "negative timestamp")
            try:
                s, d = ip_to_int(src), ip_to_int(dst)
            except ValueError as exc:
                raise TraceParseError(lineno, str(exc)) from None
            if label not in (LEGIT, ATTACK):
                raise TraceParseError(lineno, f"unknown label {label!r}")
            if ts < last:
                raise TraceOrderError(lineno, f"timestamp {ts} goes back in time (previous {last})")
            last = ts
            yield FlowRecord(ts, s, d, label)


def read_columns(path) -> TraceColumns:
    return TraceColumns.from_records(read_trace(path))


# -- generation -------------------------------------------------------------


def _distinct_ips(rng: np.random.Generator, n: int) -> np.ndarray:
    # Populations live in 11.0.0.0-223.255.255.255, clear of 10/8 where the
    # default victim sits, of 0/8 and of multicast.
    out: list[int] = []
    seen: set[int] = set()
    while len(out) < n:
        cand = rng.integers(0x0B000000, 0xE0000000, size=2 * (n - len(out)) + 16, dtype=np.int64)
        for c in cand.tolist():
            if c not in seen:
                seen.add(c)
                out.append(c)
                if len(out) == n:
                    break
    return np.asarray(out, dtype=np.uint32)


def _zipf_cdf(n: int, s: float) -> np.ndarray:
    w = np.arange(1, n + 1, dtype=np.float64) ** -s
    c = np.cumsum(w)
    return c / c[-1]


def _draw(rng, cdf, count):
    idx = np.searchsorted(cdf, rng.random(count), side="right")
    return np.minimum(idx, len(cdf) - 1)


def generate_columns(spec: TraceSpec) -> TraceColumns:
    """Generate a labelled synthetic trace; deterministic given ``spec.seed``."""
    spec.validate()
    lg = spec.legit
    legit_ss, attack_ss, pop_ss = np.random.SeedSequence(spec.seed).spawn(3)
    rng = np.random.default_rng(legit_ss)
    arng = np.random.default_rng(attack_ss)
    prng = np.random.default_rng(pop_ss)

    victim = ip_to_int(spec.attack.victim_ip) if spec.attack else None
    n_max = lg.n_flows if lg.flow_jitter == 0 else int(math.ceil(lg.n_flows * math.exp(3 * lg.flow_jitter)))
    dst_pop = _distinct_ips(prng, n_max)
    n_src = lg.n_sources or lg.n_flows
    src_pop = _distinct_ips(prng, n_src)
    dst_cdf_full = _zipf_cdf(n_max, lg.zipf_exponent)
    src_cdf = _zipf_cdf(n_src, lg.zipf_exponent)
    w_full = np.arange(1, n_max + 1, dtype=np.float64) ** -lg.zipf_exponent

    window = spec.attack_window()
    at = spec.attack
    attack_src_pool = None
    if at is not None and at.kind == "booter":
        attack_src_pool = _distinct_ips(prng, at.n_attack_sources)

    parts = []
    for sec in range(spec.duration_s):
        count = int(rng.poisson(lg.pps))
        if lg.flow_jitter > 0:
            n_active = int(round(lg.n_flows * math.exp(lg.flow_jitter * rng.standard_normal())))
            n_active = min(max(n_active, 1), n_max)
            c = np.cumsum(w_full[:n_active])
            cdf = c / c[-1]
        else:
            cdf = dst_cdf_full
        dst = dst_pop[_draw(rng, cdf, count)]
        src = src_pop[_draw(rng, src_cdf, count)]
        ts = np.sort(rng.integers(0, US, size=count)) + sec * US
        lab = np.zeros(count, dtype=bool)

        in_attack = window is not None and window[0] <= sec < window[1]
        if in_attack and at.kind == "botnet":
            n_rw = int(round(at.attack_traffic_proportion * count))
            if n_rw:
                pick = arng.choice(count, size=n_rw, replace=False)
                dst[pick] = victim
                lab[pick] = True
        parts.append((ts, src, dst, lab))
        if in_attack and at.kind == "booter":
            a_count = int(arng.poisson(at.pps))
            pool = attack_src_pool
            if a_count >= len(pool):
                a_src = np.r_[arng.permutation(pool), pool[arng.integers(0, len(pool), a_count - len(pool))]]
                a_src = arng.permutation(a_src)
            else:
                a_src = arng.choice(pool, size=a_count, replace=False)
            a_ts = np.sort(arng.integers(0, US, size=a_count)) + sec * US
            parts.append((a_ts, a_src.astype(np.uint32), np.full(a_count, victim, dtype=np.uint32),
                          np.ones(a_count, dtype=bool)))

    if parts:
        ts, src, dst, lab = (np.concatenate(c) for c in zip(*parts))
        order = np.argsort(ts, kind="stable")
        ts, src, dst, lab = ts[order], src[order], dst[order], lab[order]
    else:
        ts = src = dst = lab = np.zeros(0)
    return TraceColumns(ts, src, dst, lab, float(spec.duration_s))


def generate_trace(spec: TraceSpec) -> Iterator[FlowRecord]:
    return generate_columns(spec).records()
