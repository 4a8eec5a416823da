import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from netentropy.traces import (
    AttackSpec,
    FlowRecord,
    LegitSpec,
    TraceColumns,
    TraceOrderError,
    TraceParseError,
    TraceSpec,
    TraceSpecError,
    generate_columns,
    generate_trace,
    int_to_ip,
    ip_to_int,
    read_columns,
    read_trace,
    split_intervals,
    write_trace,
)


def legit(duration=5, seed=0, **kw):
    kw.setdefault("n_flows", 300)
    kw.setdefault("pps", 2000)
    return TraceSpec(duration, LegitSpec(**kw), seed=seed)


def botnet(atp, duration=6, start=3, seed=0):
    return TraceSpec(duration, LegitSpec(300, 2000), attack=AttackSpec("botnet", start, attack_traffic_proportion=atp), seed=seed)


# -- generation -------------------------------------------------------------


def test_zero_atp_botnet_equals_pure_legit():
    a = generate_columns(botnet(0.0))
    b = generate_columns(legit(6))
    for col in ("ts_us", "src", "dst", "attack"):
        assert np.array_equal(getattr(a, col), getattr(b, col))


@given(st.floats(0.0, 1.0), st.integers(0, 2**32 - 1))
@settings(max_examples=15, deadline=None)
def test_botnet_rewrite_preserves_count_and_sources(atp, seed):
    clean = generate_columns(botnet(0.0, seed=seed))
    hit = generate_columns(botnet(atp, seed=seed))
    assert len(clean) == len(hit)
    assert np.array_equal(np.sort(clean.src), np.sort(hit.src))
    assert np.array_equal(clean.ts_us, hit.ts_us)
    victim = ip_to_int("10.255.255.1")
    assert (hit.dst[hit.attack] == victim).all()
    for sec in range(6):
        sl = slice(*np.searchsorted(hit.ts_us, [sec * 10**6, (sec + 1) * 10**6]))
        n_att = int(hit.attack[sl].sum())
        want = round(atp * (sl.stop - sl.start)) if sec >= 3 else 0
        assert n_att == want


def test_booter_table_row():
    spec = TraceSpec(1, LegitSpec(100, 0), attack=AttackSpec("booter", 0, pps=90_000, n_attack_sources=7379), seed=1)
    tr = generate_columns(spec)
    att = tr.attack
    assert abs(int(att.sum()) - 90_000) <= 4 * 300  # 4 Poisson sigma
    assert len(np.unique(tr.src[att])) == 7379
    assert len(np.unique(tr.dst[att])) == 1


def test_booter_with_few_packets_uses_distinct_sources():
    spec = TraceSpec(1, LegitSpec(10, 0), attack=AttackSpec("booter", 0, pps=50, n_attack_sources=1000), seed=2)
    tr = generate_columns(spec)
    assert len(np.unique(tr.src)) == len(tr)


def test_fixed_seed_gives_byte_identical_files(tmp_path):
    spec = botnet(0.2)
    write_trace(tmp_path / "a.csv", generate_columns(spec))
    write_trace(tmp_path / "b.csv", generate_columns(spec))
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    write_trace(tmp_path / "c.csv", generate_columns(botnet(0.2, seed=1)))
    assert (tmp_path / "a.csv").read_bytes() != (tmp_path / "c.csv").read_bytes()


def test_rate_accuracy_over_fifty_seeds():
    pps = 3000
    counts = np.array([
        np.bincount(generate_columns(legit(4, seed=s, pps=pps)).ts_us // 10**6, minlength=4) for s in range(50)
    ])
    # per-second mean over seeds within 3 sigma of the target, dispersion Poisson-like
    assert (np.abs(counts.mean(axis=0) - pps) <= 3 * np.sqrt(pps / 50)).all()
    assert 0.6 <= counts.var(ddof=1) / pps <= 1.5


@pytest.mark.parametrize("s", [0.8, 1.1, 1.5])
def test_zipf_rank_slope(s):
    tr = generate_columns(legit(5, seed=2, n_flows=10_000, pps=200_000, zipf_exponent=s))
    _, c = np.unique(tr.dst, return_counts=True)
    c = np.sort(c)[::-1][:1000]
    slope = np.polyfit(np.log(np.arange(1, 1001)), np.log(c), 1)[0]
    assert abs(slope + s) <= 0.1 * s


def test_flow_jitter_moves_the_active_population():
    steady = generate_columns(legit(20, n_flows=2000, pps=20_000))
    jit = generate_columns(legit(20, n_flows=2000, pps=20_000, flow_jitter=0.3))

    def distinct(tr):
        return [len(np.unique(tr.dst[sl])) for sl in tr.interval_slices()]

    assert np.std(distinct(jit)) > 5 * np.std(distinct(steady))


def test_victim_never_collides_with_legit_destinations():
    tr = generate_columns(legit(3, n_flows=5000, pps=20_000))
    assert not (tr.dst == ip_to_int("10.255.255.1")).any()
    assert ((tr.dst >> 24) >= 11).all() and ((tr.dst >> 24) < 224).all()


def test_records_carry_labels():
    recs = list(generate_trace(botnet(0.5, duration=2, start=1)))
    assert all(isinstance(r, FlowRecord) for r in recs)
    assert {r.label for r in recs if r.ts_us < 10**6} == {"legit"}
    assert "attack" in {r.label for r in recs}


# -- specs ------------------------------------------------------------------


def test_spec_from_dict_round_trip():
    spec = TraceSpec.from_dict({
        "duration_s": 10, "seed": 3,
        "legit": {"n_flows": 100, "pps": 500},
        "attack": {"kind": "botnet", "start_s": 5, "attack_traffic_proportion": 0.2},
    })
    assert spec.attack_window() == (5, 10)
    assert spec.legit.zipf_exponent == 1.1


@pytest.mark.parametrize(
    "data, field",
    [
        ({"legit": {"n_flows": 1, "pps": 1}}, "duration_s"),
        ({"duration_s": 1}, "legit"),
        ({"duration_s": 1, "legit": {"pps": 1}}, "legit.n_flows"),
        ({"duration_s": 1, "legit": {"n_flows": 1, "pps": 1, "colour": 2}}, "legit.colour"),
        ({"duration_s": 1, "legit": {"n_flows": 1, "pps": 1}, "speed": 2}, "speed"),
        ({"duration_s": 0, "legit": {"n_flows": 1, "pps": 1}}, "duration_s"),
        ({"duration_s": 1, "legit": {"n_flows": 0, "pps": 1}}, "legit.n_flows"),
        ({"duration_s": 4, "legit": {"n_flows": 1, "pps": 1}, "attack": {"kind": "botnet", "attack_traffic_proportion": 1.5}},
         "attack.attack_traffic_proportion"),
        ({"duration_s": 4, "legit": {"n_flows": 1, "pps": 1}, "attack": {"kind": "botnet", "start_s": 5, "attack_traffic_proportion": 0.5}},
         "attack.start_s"),
        ({"duration_s": 4, "legit": {"n_flows": 1, "pps": 1}, "attack": {"kind": "smurf"}}, "attack.kind"),
        ({"duration_s": 4, "legit": {"n_flows": 1, "pps": 1}, "attack": {"kind": "booter"}}, "attack.pps"),
        ({"duration_s": 4, "legit": {"n_flows": 1, "pps": "fast"}}, "spec"),
    ],
)
def test_invalid_specs_name_the_field(data, field):
    with pytest.raises(TraceSpecError) as exc:
        TraceSpec.from_dict(data)
    assert exc.value.field == field
    assert field in str(exc.value)


def test_spec_from_json_file(tmp_path):
    p = tmp_path / "s.json"
    p.write_text(json.dumps({"duration_s": 2, "legit": {"n_flows": 5, "pps": 10}}))
    assert TraceSpec.from_json(p).duration_s == 2
    p.write_text("{nope")
    with pytest.raises(TraceSpecError):
        TraceSpec.from_json(p)


# -- I/O --------------------------------------------------------------------


def test_round_trip(tmp_path):
    tr = generate_columns(botnet(0.3))
    write_trace(tmp_path / "t.csv", tr)
    assert list(read_trace(tmp_path / "t.csv")) == list(tr.records())
    back = read_columns(tmp_path / "t.csv")
    assert np.array_equal(back.dst, tr.dst) and np.array_equal(back.attack, tr.attack)


def test_empty_file_is_an_empty_stream(tmp_path):
    p = tmp_path / "e.csv"
    p.write_text("")
    assert list(read_trace(p)) == []


@pytest.mark.parametrize(
    "body, line",
    [
        ("ts_us,src_ip,dst_ip,label\n12,1.2.3.4,5.6.7.8,legit\nabc,1.2.3.4,5.6.7.8,legit\n", 3),
        ("ts_us,src_ip,dst_ip,label\n12,1.2.3.400,5.6.7.8,legit\n", 2),
        ("ts_us,src_ip,dst_ip,label\n12,1.2.3.4,5.6.7.8,evil\n", 2),
        ("ts_us,src_ip,dst_ip,label\n12,1.2.3.4\n", 2),
        ("ts,src,dst\n", 1),
        ("ts_us,src_ip,dst_ip,label\n-5,1.2.3.4,5.6.7.8,legit\n", 2),
    ],
)
def test_parse_errors_name_the_line(tmp_path, body, line):
    p = tmp_path / "bad.csv"
    p.write_text(body)
    with pytest.raises(TraceParseError) as exc:
        list(read_trace(p))
    assert exc.value.line == line
    assert f"line {line}" in str(exc.value)


def test_out_of_order_records_rejected(tmp_path):
    p = tmp_path / "o.csv"
    p.write_text("ts_us,src_ip,dst_ip,label\n20,1.2.3.4,5.6.7.8,legit\n10,1.2.3.4,5.6.7.8,legit\n")
    with pytest.raises(TraceOrderError):
        list(read_trace(p))


@given(st.integers(0, 2**32 - 1))
def test_ip_text_round_trip(v):
    assert ip_to_int(int_to_ip(v)) == v


# -- intervals --------------------------------------------------------------


def test_fifty_second_trace_has_fifty_batches():
    tr = generate_columns(legit(50, pps=100))
    assert len(tr.interval_slices(1.0)) == 50
    assert len(list(split_intervals(tr.records(), 1.0))) == 50


def test_all_records_at_time_zero():
    recs = [FlowRecord(0, 1, 2)] * 7
    batches = list(split_intervals(recs, 1.0, n_intervals=4))
    assert [len(b) for _, b in batches] == [7, 0, 0, 0]
    cols = TraceColumns.from_records(recs)
    assert [s.stop - s.start for s in cols.interval_slices(1.0, 4)] == [7, 0, 0, 0]


def test_gaps_yield_empty_batches():
    recs = [FlowRecord(10, 1, 2), FlowRecord(2_500_000, 1, 3)]
    assert [(i, len(b)) for i, b in split_intervals(recs)] == [(0, 1), (1, 0), (2, 1)]


def test_interval_label_is_any_attack_record():
    tr = TraceColumns([0, 1, 10**6, 2 * 10**6], [1] * 4, [2] * 4, [False, True, False, False], 3.0)
    assert tr.interval_labels() == [True, False, False]


def test_sub_second_intervals():
    tr = generate_columns(legit(2, pps=1000))
    slices = tr.interval_slices(0.25)
    assert len(slices) == 8
    assert sum(s.stop - s.start for s in slices) == len(tr)


def test_concat_shifts_time():
    a = generate_columns(legit(2, pps=100))
    b = generate_columns(legit(3, pps=100, seed=1))
    c = a.concat(b)
    assert c.duration_s == 5.0 and len(c) == len(a) + len(b)
    assert (np.diff(c.ts_us) >= 0).all()
    assert len(c.interval_slices()) == 5
