"""Command line entry points: ``bench`` and ``lincheck``.

Examples::

    bench --scenario ratio --threads 1,4,8 --size 1000 --ratio 5:5:90 \\
          --duration 4 --trials 15 --warmup 2 --seed 7 --csv out.csv
    lincheck run --scenario insert_insert_same_gap --bounds max_states=500000
    lincheck record --seed 3 --out h.jsonl
    lincheck check h.jsonl
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys

from . import bench as bm
from .explore import Bounds
from .lincheck import History, check_linearizable, record_stress_history
from .metrics import StatsAccumulator


def _threads(text: str) -> list[int]:
    try:
        out = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"threads must be integers, got {text!r}") from None
    if not out or any(n < 1 for n in out):
        raise argparse.ArgumentTypeError("threads must be positive")
    return out


def _ratio(text: str):
    try:
        return bm.parse_ratio(text)
    except ValueError as e:
        raise argparse.ArgumentTypeError(str(e)) from None


def _bounds(text: str) -> dict:
    names = {f.name for f in dataclasses.fields(Bounds)}
    out = {}
    for part in filter(None, (p.strip() for p in text.split(","))):
        key, sep, val = part.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or key not in names:
            raise argparse.ArgumentTypeError(f"bad bound {part!r}; known: {', '.join(sorted(names))}")
        out[key] = None if val.strip().lower() == "none" else int(val)
    return out


# -- bench ---------------------------------------------------------------------


def bench_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="bench", description="Throughput benchmark on the atomic backend.")
    p.add_argument("--scenario", choices=("ratio", "sorted"), default="ratio")
    p.add_argument("--threads", type=_threads, default=[4], help="thread count or comma list, e.g. 1,4,8")
    p.add_argument("--size", type=int, default=1000, help="initial list length (ratio scenario)")
    p.add_argument("--ratio", type=_ratio, default=(5, 5, 90), help="insert:delete:move percentages")
    p.add_argument("--key-range", type=int, default=200, help="key range (sorted scenario)")
    p.add_argument("--duration", type=float, default=4.0, help="seconds per trial")
    p.add_argument("--trials", type=int, default=15)
    p.add_argument("--warmup", type=int, default=2)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--csv", metavar="PATH", help="write per-trial rows here (plus PATH.meta.json)")
    p.add_argument("--instrument", action="store_true", help="count shared accesses per operation")
    p.add_argument("--stats", metavar="PATH", help="stats JSON path (default: stdout when --instrument)")
    p.add_argument("--quiet", action="store_true")
    return p


def bench_main(argv=None) -> int:
    args = bench_parser().parse_args(argv)
    results = []
    stats = {}
    for n in args.threads:
        cfg = bm.BenchConfig(
            scenario=args.scenario,
            threads=n,
            size=args.size,
            ratio=args.ratio,
            duration=args.duration,
            trials=args.trials,
            warmup=args.warmup,
            seed=args.seed,
            key_range=args.key_range,
            instrument=args.instrument,
        )
        try:
            cfg.validate()
        except ValueError as e:
            print(f"bench: {e}", file=sys.stderr)
            return 2
        acc = StatsAccumulator() if args.instrument else None
        progress = None if args.quiet else (lambda m, n=n: print(f"[{n} threads] {m}", file=sys.stderr))
        rs = bm.run_benchmark(cfg, acc, progress)
        results += rs
        if acc is not None:
            stats[n] = acc.to_json()
        bad = [r.trial for r in rs if not r.conserved or r.sorted_ok is False]
        if bad:
            print(f"bench: final state check failed in trials {bad}", file=sys.stderr)
            return 1

    if args.csv:
        bm.emit_csv(results, args.csv)
        bm.write_metadata(cfg, args.csv)
    summary = {
        "scenario": args.scenario,
        "throughput": {str(k): v for k, v in bm.summarize(results).items()},
        "speedup": {str(k): round(v, 4) for k, v in bm.speedups(results).items()},
    }
    print(json.dumps(summary, indent=2))
    if args.instrument:
        text = json.dumps({str(k): v for k, v in stats.items()}, indent=2)
        if args.stats:
            with open(args.stats, "w") as f:
                f.write(text + "\n")
        else:
            print(text)
    return 0


# -- lincheck ------------------------------------------------------------------


def lincheck_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lincheck", description="Exhaustive exploration and history checking.")
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="explore every interleaving of a catalog scenario")
    r.add_argument("--scenario", default="all", help="scenario name, 'all' (default catalog) or 'extended'")
    r.add_argument("--bounds", type=_bounds, default={}, help="e.g. max_states=500000,max_preemptions=2")
    r.add_argument("--stateless", action="store_true", help="plain DFS without state caching")
    r.add_argument("--list", action="store_true", help="list scenario names and exit")
    r.add_argument("--json", metavar="PATH", help="write the full report here")

    c = sub.add_parser("check", help="check a recorded history (JSON lines)")
    c.add_argument("history")
    c.add_argument("--budget", type=int, default=200_000)

    rec = sub.add_parser("record", help="record a random concurrent history on the atomic backend")
    rec.add_argument("--seed", type=int, default=0)
    rec.add_argument("--threads", type=int, default=4)
    rec.add_argument("--ops", type=int, default=5, help="operations per thread")
    rec.add_argument("--out", required=True)
    return p


def _lincheck_run(args) -> int:
    from .scenarios import CATALOG, EXTENDED_CATALOG, SCENARIOS, run_scenario

    if args.list:
        for sc in CATALOG:
            print(sc.name)
        for sc in EXTENDED_CATALOG:
            print(sc.name, "(extended)")
        return 0
    if args.scenario == "all":
        chosen = CATALOG
    elif args.scenario == "extended":
        chosen = EXTENDED_CATALOG
    elif args.scenario in SCENARIOS:
        chosen = [SCENARIOS[args.scenario]]
    else:
        print(f"lincheck: unknown scenario {args.scenario!r} (try --list)", file=sys.stderr)
        return 2
    bounds = Bounds(**args.bounds)
    reports = []
    code = 0
    for sc in chosen:
        res = run_scenario(sc, bounds, stateful=not args.stateless)
        rep = res.report
        reports.append(res.to_json())
        verdict = "ok" if res.ok else rep.status if not rep.ok else "outcome-mismatch"
        print(
            f"{sc.name:34s} {verdict:17s} states={rep.states} schedules={rep.schedules} "
            f"terminals={rep.terminals} max_units_ratio={res.stats.max_ratio:.3f}"
        )
        for v in rep.violations[:3]:
            print(f"  violation: {v.message}\n  schedule: {v.schedule}")
        if rep.violations or not res.ok and rep.exhausted is None:
            code = 1
        elif rep.exhausted is not None:
            code = max(code, 3)
    if args.json:
        with open(args.json, "w") as f:
            json.dump(reports, f, indent=2, sort_keys=True)
    return code


def _lincheck_check(args) -> int:
    with open(args.history) as f:
        h = History.from_jsonl(f.read())
    if not h.well_formed():
        print("lincheck: history is not well formed", file=sys.stderr)
        return 2
    res = check_linearizable(h, budget=args.budget)
    out = {"status": res.status, "explored": res.explored}
    if res.witness is not None:
        out["witness"] = res.witness
    if res.prefix_len is not None:
        out["shortest_bad_prefix"] = res.prefix_len
        out["events"] = [e.to_json() for e in h.events[: res.prefix_len]]
    print(json.dumps(out, indent=2))
    return {"ok": 0, "violation": 1, "inconclusive": 3}[res.status]


def _lincheck_record(args) -> int:
    h = record_stress_history(args.seed, threads=args.threads, ops_per_thread=args.ops)
    with open(args.out, "w") as f:
        f.write(h.to_jsonl())
    print(f"wrote {len(h.events)} events to {args.out}")
    return 0


def lincheck_main(argv=None) -> int:
    args = lincheck_parser().parse_args(argv)
    if args.cmd == "run":
        return _lincheck_run(args)
    if args.cmd == "check":
        return _lincheck_check(args)
    return _lincheck_record(args)


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    if not argv or argv[0] not in ("bench", "lincheck"):
        print("usage: python -m nbdll {bench,lincheck} ...", file=sys.stderr)
        return 2
    return bench_main(argv[1:]) if argv[0] == "bench" else lincheck_main(argv[1:])


def _bench_entry() -> None:
    sys.exit(bench_main())


def _lincheck_entry() -> None:
    sys.exit(lincheck_main())
