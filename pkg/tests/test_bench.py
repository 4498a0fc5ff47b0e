import itertools

import pytest

from nbdll.bench import (
    BenchConfig,
    emit_csv,
    parse_ratio,
    ratio_op_types,
    read_csv,
    run_benchmark,
    run_trial,
    summarize,
    write_metadata,
)
from nbdll.metrics import StatsAccumulator


def test_parse_ratio():
    assert parse_ratio("5:5:90") == (5, 5, 90)
    for bad in ["5:5", "5:5:80", "a:b:c", "-5:15:90"]:
        with pytest.raises(ValueError):
            parse_ratio(bad)


def test_config_validation():
    BenchConfig().validate()
    for kw in [dict(threads=0), dict(duration=0), dict(trials=0), dict(scenario="x"), dict(ratio="1:1:1"), dict(key_range=0)]:
        with pytest.raises(ValueError):
            BenchConfig(**kw).validate()


def test_op_stream_is_seeded_and_alternates():
    cfg = BenchConfig(seed=4).validate()
    a = list(itertools.islice(ratio_op_types(cfg, 0, 1), 2000))
    b = list(itertools.islice(ratio_op_types(cfg, 0, 1), 2000))
    assert a == b
    assert a != list(itertools.islice(ratio_op_types(cfg, 0, 2), 2000))
    updates = [k for k, _ in a if k in ("insertBefore", "delete")]
    assert all(x != y for x, y in zip(updates, updates[1:]))
    share = len(updates) / len(a)
    assert 0.05 < share < 0.15


def test_ratio_trial_conserves_length():
    cfg = BenchConfig(threads=3, size=50, duration=0.3, seed=1).validate()
    r = run_trial(cfg, 0)
    assert r.initial_len == 50
    assert r.conserved
    assert r.ops_total > 0 and r.ops_per_sec > 0


def test_sorted_trial_stays_sorted():
    cfg = BenchConfig(scenario="sorted", threads=4, key_range=40, duration=0.3, seed=2).validate()
    r = run_trial(cfg, 0)
    assert r.initial_len == 20
    assert r.sorted_ok and r.conserved


def test_instrumented_run_has_read_only_moves():
    acc = StatsAccumulator()
    cfg = BenchConfig(threads=2, size=30, duration=0.3, ratio="20:20:60").validate()
    run_trial(cfg, 0, acc)
    assert acc.readonly_writes == 0 and acc.readonly_cas == 0
    assert acc.step_bound(128).ok


def test_csv_round_trip(tmp_path):
    cfg = BenchConfig(threads=1, size=10, duration=0.1, trials=3, warmup=0).validate()
    results = run_benchmark(cfg)
    text = emit_csv(results, tmp_path / "out.csv")
    rows = read_csv(text)
    assert len(rows) == 3
    assert (tmp_path / "out.csv").read_text() == text
    s = summarize(results)[1]
    for row, r in zip(rows, results):
        assert int(row["ops_total"]) == r.ops_total
        assert float(row["ops_per_sec_mean"]) == pytest.approx(s["mean"], abs=1e-3)
        assert float(row["ops_per_sec_std"]) == pytest.approx(s["std"], abs=1e-3)
    meta = write_metadata(cfg, tmp_path / "out.csv")
    assert meta.endswith(".meta.json")


def test_single_result_csv_has_two_lines():
    cfg = BenchConfig(threads=1, size=5, duration=0.05, trials=1, warmup=0).validate()
    assert len(emit_csv(run_benchmark(cfg)).splitlines()) == 2


def test_single_thread_ratio_sees_no_invalid_cursor():
    cfg = BenchConfig(threads=1, size=100, duration=0.3, seed=9).validate()
    r = run_trial(cfg, 0)
    assert r.invalid_cursor == 0 and r.conserved


def test_32_thread_histories_linearize():
    from nbdll.lincheck import check_linearizable, record_stress_history

    for seed in range(3):
        h = record_stress_history(seed, threads=32, ops_per_thread=15, initial_len=100, max_pause=0)
        assert len(h.events) == 960
        assert check_linearizable(h).ok, seed


def test_racing_sorted_inserts_land_in_order():
    from nbdll.core import ListHandle
    from nbdll.values import INVALID_CURSOR

    lst = ListHandle()
    c = lst.create_cursor()
    for k in (10, 40):
        lst.insert_before(c, k)
    p, q = lst.create_cursor(), lst.create_cursor()
    for cur in (p, q):
        lst.move_right(cur)  # both searches stop at 40
    assert lst.insert_before(p, 30) is True
    assert lst.insert_before(q, 20) is INVALID_CURSOR
    lst.reset_cursor(q)
    while lst.get(q) < 20:
        lst.move_right(q)
    assert lst.get(q) == 30
    assert lst.insert_before(q, 20) is True
    assert lst.values()[:-1] == [10, 20, 30, 40]
