"""Throughput benchmarks on the atomic backend.

Two workloads are provided:

``ratio``
    Every thread owns one cursor and repeatedly draws an operation type from
    an insert:delete:move percentage split. Updates alternate between
    insertBefore and delete when the two shares are equal, which keeps the
    list length stable. After each insertBefore the thread does one extra
    moveLeft with probability 1/2 so cursors do not drift towards EOL.

``sorted``
    The list holds a strictly increasing set of keys drawn from
    ``[0, key_range)``. Each logical operation picks a key and an action,
    searches from the front, and restarts the search whenever it sees
    invalidCursor. Inserting a key that is already present is a no-op.

Every trial checks that the quiescent final length equals the initial length
plus successful inserts minus successful deletes.
"""

from __future__ import annotations

import csv
import io
import json
import platform
import random
import statistics
import sys
import threading
import time
from dataclasses import asdict, dataclass, field

from .core import ListHandle
from .metrics import OpStats, StatsAccumulator
from .values import EOL, INVALID_CURSOR

CSV_COLUMNS = (
    "scenario",
    "threads",
    "trial",
    "ops_total",
    "ops_per_sec",
    "inserts",
    "deletes",
    "moves",
    "invalid_cursor",
    "final_len",
    "ops_per_sec_mean",
    "ops_per_sec_std",
)


def parse_ratio(text: str) -> tuple[int, int, int]:
    """Parse ``"5:5:90"`` into insert, delete and move percentages."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"ratio must look like I:D:M, got {text!r}")
    try:
        vals = tuple(int(p) for p in parts)
    except ValueError:
        raise ValueError(f"ratio parts must be integers, got {text!r}") from None
    if any(v < 0 for v in vals) or sum(vals) != 100:
        raise ValueError(f"ratio parts must be non-negative and sum to 100, got {text!r}")
    return vals


@dataclass
class BenchConfig:
    scenario: str = "ratio"
    threads: int = 4
    size: int = 1000
    ratio: tuple = (5, 5, 90)
    duration: float = 4.0
    trials: int = 15
    warmup: int = 2
    seed: int = 0
    key_range: int = 200
    extra_move_left: float = 0.5
    instrument: bool = False

    def validate(self) -> "BenchConfig":
        if self.scenario not in ("ratio", "sorted"):
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if isinstance(self.ratio, str):
            self.ratio = parse_ratio(self.ratio)
        else:
            self.ratio = parse_ratio(":".join(str(v) for v in self.ratio))
        if self.threads < 1:
            raise ValueError("threads must be at least 1")
        if self.size < 0:
            raise ValueError("size must be non-negative")
        if self.duration <= 0:
            raise ValueError("duration must be positive")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.warmup < 0:
            raise ValueError("warmup must be non-negative")
        if self.key_range < 1:
            raise ValueError("key_range must be at least 1")
        if not 0 <= self.extra_move_left <= 1:
            raise ValueError("extra_move_left must be a probability")
        return self


@dataclass
class TrialResult:
    scenario: str
    threads: int
    trial: int
    ops_total: int = 0
    ops_per_sec: float = 0.0
    inserts: int = 0
    deletes: int = 0
    moves: int = 0
    invalid_cursor: int = 0
    final_len: int = 0
    initial_len: int = 0
    elapsed: float = 0.0
    invalid_by_op: dict = field(default_factory=dict)
    sorted_ok: bool | None = None

    @property
    def conserved(self) -> bool:
        return self.final_len == self.initial_len + self.inserts - self.deletes


@dataclass
class _Tally:
    ops: int = 0
    inserts: int = 0
    deletes: int = 0
    moves: int = 0
    invalid: int = 0
    invalid_by_op: dict = field(default_factory=dict)

    def bad(self, op: str) -> None:
        self.invalid += 1
        self.invalid_by_op[op] = self.invalid_by_op.get(op, 0) + 1


def _rng(cfg: BenchConfig, trial: int, tid: int) -> random.Random:
    return random.Random(f"{cfg.seed}/{cfg.scenario}/{cfg.threads}/{trial}/{tid}")


class _Instrumented:
    """Calls list operations and, when enabled, folds the access log into stats."""

    def __init__(self, lst: ListHandle, acc: StatsAccumulator | None):
        self.lst = lst
        self.acc = acc

    def __call__(self, name: str, fn, c, *args):
        if self.acc is None:
            return fn(c, *args)
        before = self.lst.active_cursors
        res = fn(c, *args)
        c_dot = max(before, self.lst.active_cursors, 1)
        self.acc.add(OpStats.from_log(name, c.op_log, c_dot))
        return res


def ratio_op_types(cfg: BenchConfig, trial: int, tid: int):
    """The op-type stream of one ratio-scenario thread (seed-determined)."""
    rng = _rng(cfg, trial, tid)
    ins, dele, mov = cfg.ratio
    alternate = ins == dele
    last_update = "delete"
    while True:
        x = rng.randrange(100)
        if x < ins + dele:
            if alternate:
                kind = "insertBefore" if last_update == "delete" else "delete"
            else:
                kind = "insertBefore" if x < ins else "delete"
            last_update = kind
            yield kind, rng.randrange(1 << 30)
            if kind == "insertBefore" and rng.random() < cfg.extra_move_left:
                yield "moveLeft", None
        else:
            yield ("moveRight" if rng.random() < 0.5 else "moveLeft"), None


def _ratio_worker(lst, call, cfg, trial, tid, start_pos, stop, barrier, out):
    t = _Tally()
    c = lst.create_cursor(f"w{tid}")
    for _ in range(start_pos):
        lst.move_right(c)
    stream = ratio_op_types(cfg, trial, tid)
    barrier.wait()
    while not stop.is_set():
        kind, v = next(stream)
        if kind == "insertBefore":
            r = call(kind, lst.insert_before, c, v)
            t.inserts += r is True
        elif kind == "delete":
            r = call(kind, lst.delete, c)
            t.deletes += r is True
        elif kind == "moveRight":
            r = call(kind, lst.move_right, c)
            t.moves += 1
        else:
            r = call(kind, lst.move_left, c)
            t.moves += 1
        t.ops += 1
        if r is INVALID_CURSOR:
            t.bad(kind)
    lst.destroy_cursor(c)
    out[tid] = t


def _sorted_worker(lst, call, cfg, trial, tid, stop, barrier, out):
    t = _Tally()
    rng = _rng(cfg, trial, tid)
    ins, dele, _ = cfg.ratio
    p_insert = ins / (ins + dele) if ins + dele else 0.5
    c = lst.create_cursor(f"w{tid}")
    barrier.wait()
    while not stop.is_set():
        key = rng.randrange(cfg.key_range)
        inserting = rng.random() < p_insert
        while True:
            call("resetCursor", lst.reset_cursor, c)
            v = call("get", lst.get, c)
            while v is not INVALID_CURSOR and v is not EOL and v < key:
                r = call("moveRight", lst.move_right, c)
                t.moves += 1
                if r is INVALID_CURSOR:
                    v = r
                    break
                v = call("get", lst.get, c)
            if v is INVALID_CURSOR:
                t.bad("search")
                continue
            if inserting:
                if v == key:
                    break
                r = call("insertBefore", lst.insert_before, c, key)
                if r is INVALID_CURSOR:
                    t.bad("insertBefore")
                    continue
                t.inserts += 1
            else:
                if v != key:
                    break
                r = call("delete", lst.delete, c)
                if r is INVALID_CURSOR:
                    t.bad("delete")
                    continue
                t.deletes += r is True
            break
        t.ops += 1
    lst.destroy_cursor(c)
    out[tid] = t


def _populate_ratio(lst: ListHandle, cfg: BenchConfig, trial: int) -> list[int]:
    rng = _rng(cfg, trial, -1)
    c = lst.create_cursor("_fill")
    for _ in range(cfg.size):
        lst.insert_before(c, rng.randrange(1 << 30))
    lst.destroy_cursor(c)
    return [rng.randrange(cfg.size + 1) for _ in range(cfg.threads)]


def _populate_sorted(lst: ListHandle, cfg: BenchConfig, trial: int) -> None:
    rng = _rng(cfg, trial, -1)
    keys = sorted(rng.sample(range(cfg.key_range), cfg.key_range // 2))
    c = lst.create_cursor("_fill")
    for k in keys:
        lst.insert_before(c, k)
    lst.destroy_cursor(c)


def run_trial(cfg: BenchConfig, trial: int, acc: StatsAccumulator | None = None) -> TrialResult:
    """Run one timed trial on a fresh list."""
    lst = ListHandle(instrument=acc is not None)
    call = _Instrumented(lst, acc)
    if cfg.scenario == "ratio":
        starts = _populate_ratio(lst, cfg, trial)
    else:
        _populate_sorted(lst, cfg, trial)
    initial_len = len(lst)
    stop = threading.Event()
    barrier = threading.Barrier(cfg.threads + 1)
    out: dict[int, _Tally] = {}
    if cfg.scenario == "ratio":
        ts = [
            threading.Thread(target=_ratio_worker, args=(lst, call, cfg, trial, i, starts[i], stop, barrier, out))
            for i in range(cfg.threads)
        ]
    else:
        ts = [
            threading.Thread(target=_sorted_worker, args=(lst, call, cfg, trial, i, stop, barrier, out))
            for i in range(cfg.threads)
        ]
    for th in ts:
        th.start()
    barrier.wait()
    t0 = time.perf_counter()
    stop.wait(cfg.duration)
    stop.set()
    for th in ts:
        th.join()
    elapsed = time.perf_counter() - t0

    res = TrialResult(cfg.scenario, cfg.threads, trial, initial_len=initial_len, elapsed=elapsed)
    for tally in out.values():
        res.ops_total += tally.ops
        res.inserts += tally.inserts
        res.deletes += tally.deletes
        res.moves += tally.moves
        res.invalid_cursor += tally.invalid
        for k, v in tally.invalid_by_op.items():
            res.invalid_by_op[k] = res.invalid_by_op.get(k, 0) + v
    res.ops_per_sec = res.ops_total / elapsed if elapsed > 0 else 0.0
    vals = lst.values()[:-1]
    res.final_len = len(vals)
    if cfg.scenario == "sorted":
        res.sorted_ok = all(a < b for a, b in zip(vals, vals[1:]))
    return res


def run_benchmark(cfg: BenchConfig, acc: StatsAccumulator | None = None, progress=None) -> list[TrialResult]:
    """Warm-up trials (discarded) followed by ``cfg.trials`` measured trials."""
    cfg.validate()
    for w in range(cfg.warmup):
        run_trial(cfg, -1 - w)
        if progress:
            progress(f"warmup {w + 1}/{cfg.warmup} done")
    results = []
    for i in range(cfg.trials):
        r = run_trial(cfg, i, acc)
        results.append(r)
        if progress:
            progress(f"trial {i + 1}/{cfg.trials}: {r.ops_per_sec:.0f} ops/s")
    return results


def summarize(results: list[TrialResult]) -> dict:
    """Mean and sample standard deviation of throughput per thread count."""
    by_threads: dict[int, list[float]] = {}
    for r in results:
        by_threads.setdefault(r.threads, []).append(r.ops_per_sec)
    out = {}
    for n, xs in sorted(by_threads.items()):
        out[n] = {
            "mean": statistics.fmean(xs),
            "std": statistics.stdev(xs) if len(xs) > 1 else 0.0,
            "trials": len(xs),
        }
    return out


def speedups(results: list[TrialResult]) -> dict:
    """Mean throughput relative to the one-thread mean, when one was measured."""
    s = summarize(results)
    if 1 not in s or s[1]["mean"] == 0:
        return {}
    return {n: v["mean"] / s[1]["mean"] for n, v in s.items()}


def run_metadata(cfg: BenchConfig) -> dict:
    d = asdict(cfg)
    d["ratio"] = ":".join(str(v) for v in cfg.ratio)
    d["python"] = sys.version.split()[0]
    d["implementation"] = platform.python_implementation()
    d["platform"] = platform.platform()
    d["gil"] = getattr(sys, "_is_gil_enabled", lambda: True)()
    return d


def emit_csv(results: list[TrialResult], path=None) -> str:
    """CSV with a header and one row per (threads, trial); returns the text."""
    s = summarize(results)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    for r in results:
        w.writerow(
            [
                r.scenario,
                r.threads,
                r.trial,
                r.ops_total,
                f"{r.ops_per_sec:.3f}",
                r.inserts,
                r.deletes,
                r.moves,
                r.invalid_cursor,
                r.final_len,
                f"{s[r.threads]['mean']:.3f}",
                f"{s[r.threads]['std']:.3f}",
            ]
        )
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", newline="") as f:
            f.write(text)
    return text


def write_metadata(cfg: BenchConfig, csv_path) -> str:
    """Write run settings next to the CSV as ``<csv>.meta.json``."""
    meta_path = f"{csv_path}.meta.json"
    with open(meta_path, "w") as f:
        json.dump(run_metadata(cfg), f, indent=2)
    return meta_path


def read_csv(text: str) -> list[dict]:
    return list(csv.DictReader(io.StringIO(text)))


__all__ = [
    "BenchConfig",
    "TrialResult",
    "parse_ratio",
    "ratio_op_types",
    "run_trial",
    "run_benchmark",
    "summarize",
    "speedups",
    "emit_csv",
    "read_csv",
    "write_metadata",
    "run_metadata",
    "CSV_COLUMNS",
]
