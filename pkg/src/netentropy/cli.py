"""``netentropy`` command line: JSON lines on stdout, logs on stderr.

Exit status is 0 on success, 1 on a runtime failure (unreadable or
malformed input files) and 2 on a usage or validation error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from .cardinality import ConfigError
from .detector import to_q10
from .frequency import VARIANTS
from .networkwide import SwitchSummary, networkwide_entropy
from .oracle import UndefinedMetricError, relative_error
from .pipeline import (
    EstimatorConfig,
    cardinality_series,
    entropy_series,
    h_norm_q10_list,
    oracle_series,
    run_detection,
)
from .traces import TraceParseError, TraceSpec, TraceSpecError, generate_columns, read_columns, write_trace

log = logging.getLogger("netentropy")

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _emit(obj) -> None:
    sys.stdout.write(json.dumps(obj) + "\n")


def _rel_err(estimate, exact):
    try:
        return relative_error(estimate, exact)
    except UndefinedMetricError:
        return None


def _mean(values):
    values = [v for v in values if v is not None]
    return sum(values) / len(values) if values else None


def _config(args) -> EstimatorConfig:
    if args.interval_s <= 0:
        raise UsageError("--interval-s must be positive")
    if getattr(args, "nh", 1) < 1 or getattr(args, "ns", 1) < 1:
        raise UsageError("--nh and --ns must be positive")
    return EstimatorConfig(
        variant=getattr(args, "sketch", "count"),
        n_h=getattr(args, "nh", 5),
        n_s=getattr(args, "ns", 2000),
        k_bits=args.k_bits,
        seed=args.seed,
        interval_s=args.interval_s,
    )


def _load_trace(path):
    log.info("reading %s", path)
    trace = read_columns(path)
    log.info("%d records", len(trace))
    return trace


# -- commands ---------------------------------------------------------------


def cmd_gen(args) -> int:
    spec = TraceSpec.from_json(args.spec)
    trace = generate_columns(spec)
    write_trace(args.out, trace)
    log.info("wrote %d records to %s", len(trace), args.out)
    _emit({"out": str(args.out), "records": len(trace), "attack_records": int(trace.attack.sum())})
    return EXIT_OK


def cmd_cardinality(args) -> int:
    cfg = _config(args)
    trace = _load_trace(args.trace)
    errs = []
    for i, (n_hat, n_exact) in enumerate(cardinality_series(trace, cfg, key=args.key)):
        err = _rel_err(n_hat, n_exact)
        errs.append(err)
        _emit({"interval": i, "n_hat": n_hat, "n_exact": n_exact, "rel_err_pct": err})
    _emit({"summary": True, "intervals": len(errs), "mean_rel_err_pct": _mean(errs)})
    return EXIT_OK


def cmd_entropy(args) -> int:
    cfg = _config(args)
    trace = _load_trace(args.trace)
    est = entropy_series(trace, cfg, key=args.key)
    exact = oracle_series(trace, cfg.interval_s, key=args.key, n_intervals=len(est))
    errs, norm_errs = [], []
    for i, (r, o) in enumerate(zip(est, exact)):
        if r is None:
            _emit({"interval": i, "packets": 0})
            continue
        h, hn, n = o
        err, norm_err = _rel_err(r.h, h), _rel_err(r.h_norm, hn)
        errs.append(err)
        norm_errs.append(norm_err)
        _emit({
            "interval": i, "packets": r.packets,
            "h": r.h, "h_norm": r.h_norm, "n_hat": r.n_hat,
            "h_q10": r.h_q10, "h_norm_q10": r.h_norm_q10,
            "h_exact": h, "h_norm_exact": hn, "n_exact": n,
            "rel_err_pct": err, "h_norm_rel_err_pct": norm_err,
        })
    _emit({
        "summary": True, "intervals": len(est),
        "mean_rel_err_pct": _mean(errs), "mean_h_norm_rel_err_pct": _mean(norm_errs),
    })
    return EXIT_OK


def cmd_detect(args) -> int:
    cfg = _config(args)
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    if not 0 <= args.epsilon <= 1:
        raise UsageError("--epsilon must lie in [0, 1]")
    if args.warmup_s < 0:
        raise UsageError("--warmup-s must be non-negative")
    trace = _load_trace(args.trace)
    warmup = int(args.warmup_s / cfg.interval_s)
    run = run_detection(trace, cfg, to_q10(args.alpha), to_q10(args.epsilon), warmup)
    for v, label in zip(run.verdicts, run.labels):
        d = v.to_dict()
        d["attack"] = label
        d["warmup"] = v.interval_index <= warmup
        _emit(d)
    m = run.metrics()
    _emit({"summary": True, **m.to_dict()})
    log.info("h_norm series: %s", h_norm_q10_list(run.results))
    return EXIT_OK


def cmd_summarize(args) -> int:
    cfg = _config(args)
    trace = _load_trace(args.trace)
    slices = trace.interval_slices(cfg.interval_s)
    if args.interval is not None:
        if not 0 <= args.interval < len(slices):
            raise UsageError(f"--interval must lie in [0, {len(slices) - 1}]")
        slices = [slices[args.interval]]
    acc = cfg.accumulator()
    keys = trace.dst if args.key == "dst" else trace.src
    for sl in slices:
        acc.update_u32(keys[sl])
    summary = SwitchSummary.from_accumulator(args.switch_id, acc)
    if args.out:
        summary.save(args.out)
        log.info("wrote summary to %s", args.out)
    _emit(summary.to_dict())
    return EXIT_OK


def cmd_merge(args) -> int:
    summaries = []
    for path in args.summaries:
        try:
            summaries.append(SwitchSummary.load(path))
        except (ValueError, KeyError) as exc:
            raise UsageError(f"{path}: {exc}") from None
    result = networkwide_entropy(summaries)
    d = result.to_dict()
    d.pop("interval")
    d["switches"] = [s.switch_id for s in summaries]
    _emit(d)
    return EXIT_OK


# -- argument parsing -------------------------------------------------------


def _add_common(p, estimator: bool = True) -> None:
    p.add_argument("--trace", required=True, help="trace CSV")
    p.add_argument("--seed", type=int, default=0, help="hash seed (default 0)")
    p.add_argument("--interval-s", type=float, default=1.0, help="interval length in seconds")
    p.add_argument("--k-bits", type=int, default=11, help="LogLog buckets are 2**k (default 11)")
    p.add_argument("--key", choices=("dst", "src"), default="dst", help="flow key (default dst)")
    if estimator:
        p.add_argument("--sketch", choices=VARIANTS, default="count")
        p.add_argument("--nh", type=int, default=5, help="sketch rows")
        p.add_argument("--ns", type=int, default=2000, help="sketch columns")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="netentropy", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a synthetic trace from a JSON spec")
    p.add_argument("--spec", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("cardinality", help="per-interval LogLog estimates")
    _add_common(p, estimator=False)
    p.set_defaults(func=cmd_cardinality)

    p = sub.add_parser("entropy", help="per-interval entropy estimates against exact values")
    _add_common(p)
    p.set_defaults(func=cmd_entropy)

    p = sub.add_parser("detect", help="run the detector over a labelled trace")
    _add_common(p)
    p.add_argument("--alpha", type=float, default=0.13)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--warmup-s", type=float, default=0.0, help="seconds learned without alarming")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("summarize", help="write one switch's summary for merging")
    _add_common(p)
    p.add_argument("--switch-id", default="s0")
    p.add_argument("--interval", type=int, default=None, help="only this interval (default: whole trace)")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("merge", help="network-wide entropy from switch summaries")
    p.add_argument("summaries", nargs="+")
    p.set_defaults(func=cmd_merge)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except (UsageError, TraceSpecError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, TraceParseError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
