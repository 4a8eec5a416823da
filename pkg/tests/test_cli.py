import base64
import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from netentropy.cardinality import LogLogRegister
from netentropy.cli import main
from netentropy.pipeline import EstimatorConfig
from netentropy.traces import TraceColumns, write_trace

GOLDEN = Path(__file__).parent / "golden"
UPDATE = os.environ.get("UPDATE_GOLDEN") == "1"

SPEC = {
    "duration_s": 12,
    "seed": 5,
    "legit": {"n_flows": 400, "pps": 3000},
    "attack": {"kind": "botnet", "start_s": 6, "attack_traffic_proportion": 0.3},
}


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, [json.loads(line) for line in out.splitlines()], err


def check_golden(name, lines):
    path = GOLDEN / name
    text = "".join(json.dumps(x, sort_keys=True) + "\n" for x in lines)
    if UPDATE:
        path.write_text(text)
    assert text == path.read_text()


@pytest.fixture()
def trace(tmp_path, capsys):
    spec = tmp_path / "spec.json"
    spec.write_text(json.dumps(SPEC))
    out = tmp_path / "trace.csv"
    code, lines, _ = run(capsys, "gen", "--spec", spec, "--out", out)
    assert code == 0 and out.exists()
    return out


def write_cols(path, ts, dst):
    n = len(ts)
    write_trace(path, TraceColumns(ts, np.full(n, 7), dst, np.zeros(n, bool)))
    return path


# -- gen --------------------------------------------------------------------


def test_gen_is_deterministic(tmp_path, capsys, trace):
    again = tmp_path / "again.csv"
    code, lines, _ = run(capsys, "gen", "--spec", tmp_path / "spec.json", "--out", again)
    assert code == 0
    assert lines[0]["records"] > 0 and lines[0]["attack_records"] > 0
    assert again.read_bytes() == trace.read_bytes()


def test_gen_missing_field_exits_2_naming_it(tmp_path, capsys):
    bad = dict(SPEC, legit={"pps": 10})
    spec = tmp_path / "bad.json"
    spec.write_text(json.dumps(bad))
    code, lines, err = run(capsys, "gen", "--spec", spec, "--out", tmp_path / "x.csv")
    assert code == 2 and lines == []
    assert "legit.n_flows" in err


def test_gen_unreadable_spec_exits_1(tmp_path, capsys):
    code, _, _ = run(capsys, "gen", "--spec", tmp_path / "nope.json", "--out", tmp_path / "x.csv")
    assert code == 1


# -- cardinality ------------------------------------------------------------


def test_cardinality_golden(capsys, trace):
    code, lines, _ = run(capsys, "cardinality", "--trace", trace)
    assert code == 0
    assert len(lines) == 13 and lines[-1]["summary"]
    check_golden("cardinality.jsonl", lines)


def test_cardinality_single_flow(tmp_path, capsys):
    p = write_cols(tmp_path / "one.csv", [5, 6, 7], [9, 9, 9])
    code, lines, _ = run(capsys, "cardinality", "--trace", p, "--seed", 3)
    reg = EstimatorConfig(seed=3).register()
    reg.update_u32(np.array([9], dtype=np.uint32))
    assert code == 0
    assert lines[0]["n_exact"] == 1 and lines[0]["n_hat"] == reg.query()


def test_cardinality_fifty_intervals_give_fifty_one_lines(tmp_path, capsys):
    ts = np.arange(50) * 1_000_000 + 17
    p = write_cols(tmp_path / "fifty.csv", ts, np.arange(50))
    code, lines, _ = run(capsys, "cardinality", "--trace", p, "--k-bits", 6)
    assert code == 0 and len(lines) == 51
    assert lines[-1] == {"summary": True, "intervals": 50, "mean_rel_err_pct": lines[-1]["mean_rel_err_pct"]}


def test_bad_k_bits_exits_2(capsys, trace):
    code, _, err = run(capsys, "cardinality", "--trace", trace, "--k-bits", 30)
    assert code == 2 and "k must be" in err


# -- entropy ----------------------------------------------------------------


def test_entropy_golden(capsys, trace):
    code, lines, _ = run(capsys, "entropy", "--trace", trace, "--sketch", "count_min", "--nh", 3, "--ns", 500)
    assert code == 0 and len(lines) == 13
    check_golden("entropy.jsonl", lines)


def test_entropy_uniform_trace(tmp_path, capsys):
    dst = np.arange(4096) * 2654435761 % 2**32
    p = write_cols(tmp_path / "u.csv", np.arange(4096) * 200, dst)
    code, lines, _ = run(capsys, "entropy", "--trace", p)
    assert code == 0
    assert abs(lines[0]["h_norm"] - 1.0) <= 0.05
    assert lines[0]["h_exact"] == pytest.approx(12.0)


def test_entropy_single_flow_trace(tmp_path, capsys):
    p = write_cols(tmp_path / "s.csv", np.arange(3000) * 300, np.full(3000, 99))
    code, lines, _ = run(capsys, "entropy", "--trace", p)
    assert code == 0
    assert lines[0]["h_q10"] <= 16 and lines[0]["h_norm"] == 0
    assert lines[0]["rel_err_pct"] is None


def test_entropy_reports_empty_intervals(tmp_path, capsys):
    p = write_cols(tmp_path / "gap.csv", [1, 2_500_000], [1, 2])
    code, lines, _ = run(capsys, "entropy", "--trace", p)
    assert code == 0
    assert lines[1] == {"interval": 1, "packets": 0}


def test_malformed_trace_exits_1(tmp_path, capsys):
    p = tmp_path / "bad.csv"
    p.write_text("ts_us,src_ip,dst_ip,label\nxx,1.1.1.1,2.2.2.2,legit\n")
    code, _, err = run(capsys, "entropy", "--trace", p)
    assert code == 1 and "line 2" in err


@pytest.mark.parametrize("flags", [["--nh", "0"], ["--ns", "-3"], ["--interval-s", "0"]])
def test_bad_sketch_flags_exit_2(capsys, trace, flags):
    assert run(capsys, "entropy", "--trace", trace, *flags)[0] == 2


def test_unknown_sketch_variant_is_a_usage_error(capsys, trace):
    with pytest.raises(SystemExit) as exc:
        main(["entropy", "--trace", str(trace), "--sketch", "bloom"])
    assert exc.value.code == 2


# -- detect -----------------------------------------------------------------


def test_detect_golden(capsys, trace):
    code, lines, _ = run(capsys, "detect", "--trace", trace, "--warmup-s", 3)
    assert code == 0 and len(lines) == 13
    summary = lines[-1]
    assert summary["D_tp"] == 100.0
    assert [v["warmup"] for v in lines[:-1]] == [True] * 3 + [False] * 9
    check_golden("detect.jsonl", lines)


def test_detect_epsilon_sweep_is_monotone(capsys, trace):
    fps, tps = [], []
    for eps in np.arange(0, 0.11, 0.01):
        code, lines, _ = run(capsys, "detect", "--trace", trace, "--epsilon", f"{eps:.2f}")
        assert code == 0
        fps.append(lines[-1]["D_fp"])
        tps.append(lines[-1]["D_tp"])
    assert fps == sorted(fps, reverse=True) and tps == sorted(tps, reverse=True)


@pytest.mark.parametrize("flags", [["--alpha", "1.5"], ["--epsilon", "-0.1"], ["--warmup-s", "-1"]])
def test_detect_bad_parameters_exit_2(capsys, trace, flags):
    code, _, _ = run(capsys, "detect", "--trace", trace, *flags)
    assert code == 2


# -- summarize / merge ------------------------------------------------------


def test_merge_single_summary_is_a_passthrough(tmp_path, capsys, trace):
    out = tmp_path / "s.json"
    code, lines, _ = run(capsys, "summarize", "--trace", trace, "--interval", 2, "--out", out)
    assert code == 0
    code, merged, _ = run(capsys, "merge", out)
    assert code == 0
    code, ent, _ = run(capsys, "entropy", "--trace", trace)
    assert merged[0]["h_q10"] == ent[2]["h_q10"] and merged[0]["h_norm_q10"] == ent[2]["h_norm_q10"]


def test_merge_two_disjoint_halves(tmp_path, capsys):
    rng = np.random.default_rng(3)
    dst = (rng.zipf(1.3, 20_000) % 5000).astype(np.uint32) + 1000
    ts = np.sort(rng.integers(0, 1_000_000, 20_000))
    even = dst % 2 == 0
    whole = write_cols(tmp_path / "w.csv", ts, dst)
    a = write_cols(tmp_path / "a.csv", ts[even], dst[even])
    b = write_cols(tmp_path / "b.csv", ts[~even], dst[~even])
    paths = []
    for name, p in (("a", a), ("b", b), ("w", whole)):
        paths.append(tmp_path / f"{name}.json")
        assert run(capsys, "summarize", "--trace", p, "--switch-id", name, "--out", paths[-1])[0] == 0
    code, halves, _ = run(capsys, "merge", paths[0], paths[1])
    _, single, _ = run(capsys, "merge", paths[2])
    assert code == 0
    assert halves[0]["switches"] == ["a", "b"]
    assert halves[0]["n_hat"] == single[0]["n_hat"]
    assert abs(halves[0]["h"] - single[0]["h"]) <= 0.01 * single[0]["h"]
    check_golden("merge.jsonl", halves)


def test_merge_mismatched_k_exits_2(tmp_path, capsys, trace):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    run(capsys, "summarize", "--trace", trace, "--out", a)
    run(capsys, "summarize", "--trace", trace, "--k-bits", 10, "--out", b)
    code, lines, err = run(capsys, "merge", a, b)
    assert code == 2 and lines == [] and "k=" in err


def test_merge_malformed_summary_exits_2(tmp_path, capsys):
    p = tmp_path / "s.json"
    p.write_text('{"switch_id": "x"}')
    assert run(capsys, "merge", p)[0] == 2


def test_summarize_interval_out_of_range(capsys, trace):
    assert run(capsys, "summarize", "--trace", trace, "--interval", 99)[0] == 2


# -- process level ----------------------------------------------------------


def test_module_entry_point_and_usage_errors(tmp_path):
    env = dict(os.environ, PYTHONPATH=str(Path(__file__).parents[1] / "src"))
    r = subprocess.run([sys.executable, "-m", "netentropy", "entropy"], capture_output=True, text=True, env=env)
    assert r.returncode == 2 and "--trace" in r.stderr and r.stdout == ""
    r = subprocess.run([sys.executable, "-m", "netentropy", "--help"], capture_output=True, text=True, env=env)
    assert r.returncode == 0 and "merge" in r.stdout


def test_register_blob_shape_in_summary(tmp_path, capsys, trace):
    code, lines, _ = run(capsys, "summarize", "--trace", trace, "--k-bits", 4)
    reg = LogLogRegister.from_bytes(base64.b64decode(lines[0]["loglog"]))
    assert reg.k == 4
