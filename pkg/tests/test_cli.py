import json
import subprocess
import sys

from nbdll.cli import bench_main, lincheck_main, main
from nbdll.lincheck import History, HistoryEvent, INVOKE, RESPOND
from nbdll import seqmodel as sm


def test_bench_writes_csv_and_stats(tmp_path, capsys):
    out, stats = tmp_path / "b.csv", tmp_path / "s.json"
    code = bench_main(
        ["--scenario", "ratio", "--threads", "1,2", "--size", "20", "--duration", "0.1", "--trials", "2",
         "--warmup", "0", "--seed", "5", "--csv", str(out), "--instrument", "--stats", str(stats), "--quiet"]
    )
    assert code == 0
    assert len(out.read_text().splitlines()) == 5
    assert json.loads((tmp_path / "b.csv.meta.json").read_text())["seed"] == 5
    st = json.loads(stats.read_text())
    assert set(st) == {"1", "2"}
    assert st["2"]["readonly_writes"] == 0 and st["2"]["readonly_cas"] == 0
    summary = json.loads(capsys.readouterr().out)
    assert "1" in summary["speedup"]


def test_bench_rejects_bad_ratio(capsys):
    try:
        bench_main(["--ratio", "1:2:3"])
    except SystemExit as e:
        assert e.code == 2
    else:
        raise AssertionError("expected a usage error")


def test_lincheck_run_one_scenario(tmp_path, capsys):
    rep = tmp_path / "r.json"
    assert lincheck_main(["run", "--scenario", "delete_vs_moveRight", "--json", str(rep)]) == 0
    assert "delete_vs_moveRight" in capsys.readouterr().out
    assert json.loads(rep.read_text())[0]["status"] == "ok"


def test_lincheck_run_reports_bound(capsys):
    assert lincheck_main(["run", "--scenario", "delete_vs_moveRight", "--bounds", "max_states=5"]) == 3
    assert "bound-exhausted" in capsys.readouterr().out


def test_lincheck_record_then_check(tmp_path, capsys):
    h = tmp_path / "h.jsonl"
    assert lincheck_main(["record", "--seed", "2", "--out", str(h)]) == 0
    assert lincheck_main(["check", str(h)]) == 0
    assert '"status": "ok"' in capsys.readouterr().out


def test_lincheck_check_flags_violation(tmp_path, capsys):
    s = sm.INITIAL
    for op, pid in [(("createCursor", "a"), 0), (("insertBefore", "a", 1), 0), (("moveLeft", "a"), 0)]:
        s, _ = sm.apply_op(s, op, pid)
    ev = [HistoryEvent(INVOKE, 0, 1, ("get", "a")), HistoryEvent(RESPOND, 0, 1, ("get", "a"), 2, 1)]
    p = tmp_path / "bad.jsonl"
    p.write_text(History(ev, s).to_jsonl())
    assert lincheck_main(["check", str(p)]) == 1
    assert json.loads(capsys.readouterr().out)["status"] == "violation"


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "nbdll", "lincheck", "run", "--list"], capture_output=True, text=True)
    assert r.returncode == 0 and "three_thread_same_item_mix" in r.stdout
    assert main([]) == 2
