"""Linearizability checking of recorded histories against the sequential model.

The checker searches freely over operation orders (Wing & Gong style, with
memoization on the set of linearized operations plus the model state). It
does not use the implementation's linearization points.
"""

from __future__ import annotations

import itertools
import json
import random
import sys
import threading
import time
from dataclasses import dataclass, field

from . import seqmodel as sm
from .core import ListHandle
from .metrics import OpStats
from .values import ACK, INVALID_CURSOR, decode_value, encode_value

INVOKE = "invoke"
RESPOND = "respond"


@dataclass(frozen=True)
class HistoryEvent:
    kind: str
    thread: object
    op_id: int
    op: tuple
    response: object = None
    seq: int = 0

    def to_json(self) -> dict:
        d = {"kind": self.kind, "thread": self.thread, "op_id": self.op_id, "op": sm.encode_op(self.op), "seq": self.seq}
        if self.kind == RESPOND:
            d["response"] = encode_value(self.response)
        return d

    @classmethod
    def from_json(cls, d: dict) -> "HistoryEvent":
        return cls(
            d["kind"],
            d["thread"],
            d["op_id"],
            sm.decode_op(d["op"]),
            decode_value(d.get("response")),
            d.get("seq", 0),
        )


@dataclass(frozen=True)
class Operation:
    op_id: int
    thread: object
    op: tuple
    invoked: int
    responded: float  # index of the respond event, inf when pending
    response: object = None

    @property
    def pending(self) -> bool:
        return self.responded == float("inf")


@dataclass
class History:
    """An ordered list of invoke/respond events plus the model state they start from."""

    events: list[HistoryEvent] = field(default_factory=list)
    initial: sm.SeqListState = sm.INITIAL

    def operations(self) -> list[Operation]:
        inv: dict[int, tuple[int, HistoryEvent]] = {}
        out: dict[int, Operation] = {}
        for i, e in enumerate(self.events):
            if e.kind == INVOKE:
                if e.op_id in inv:
                    raise ValueError(f"operation {e.op_id} invoked twice")
                inv[e.op_id] = (i, e)
            else:
                if e.op_id not in inv:
                    raise ValueError(f"respond without invoke for operation {e.op_id}")
                j, ie = inv[e.op_id]
                out[e.op_id] = Operation(e.op_id, ie.thread, ie.op, j, i, e.response)
        for op_id, (j, ie) in inv.items():
            if op_id not in out:
                out[op_id] = Operation(op_id, ie.thread, ie.op, j, float("inf"))
        return sorted(out.values(), key=lambda o: o.invoked)

    @property
    def pending(self) -> list[Operation]:
        return [o for o in self.operations() if o.pending]

    def well_formed(self) -> bool:
        busy: dict = {}
        try:
            for e in self.events:
                if e.kind == INVOKE:
                    if busy.get(e.thread) is not None:
                        return False
                    busy[e.thread] = e.op_id
                else:
                    if busy.get(e.thread) != e.op_id:
                        return False
                    busy[e.thread] = None
            self.operations()
        except ValueError:
            return False
        return True

    def prefix(self, n: int) -> "History":
        return History(self.events[:n], self.initial)

    # -- JSON lines -----------------------------------------------------------

    def to_jsonl(self) -> str:
        lines = [json.dumps({"initial": self.initial.to_json()})]
        lines += [json.dumps(e.to_json()) for e in self.events]
        return "\n".join(lines) + "\n"

    @classmethod
    def from_jsonl(cls, text: str) -> "History":
        initial = sm.INITIAL
        events = []
        for line in text.splitlines():
            if not line.strip():
                continue
            d = json.loads(line)
            if "initial" in d:
                initial = sm.SeqListState.from_json(d["initial"])
            else:
                events.append(HistoryEvent.from_json(d))
        return cls(events, initial)


class Recorder:
    """Thread-safe history recorder with one global event order."""

    def __init__(self, initial: sm.SeqListState = sm.INITIAL):
        self._lock = threading.Lock()
        self._ids = itertools.count()
        self.history = History([], initial)

    def _emit(self, kind, thread, op_id, op, response=None) -> HistoryEvent:
        with self._lock:
            ev = HistoryEvent(kind, thread, op_id, op, response, len(self.history.events))
            self.history.events.append(ev)
        return ev

    def record(self, thread, op: tuple, fn, *args):
        """Run ``fn(*args)`` between an invoke and a respond event."""
        op_id = next(self._ids)
        inv = self._emit(INVOKE, thread, op_id, op)
        res = fn(*args)
        resp = self._emit(RESPOND, thread, op_id, op, res)
        return res, (inv, resp)

    def invoke(self, thread, op: tuple) -> int:
        op_id = next(self._ids)
        self._emit(INVOKE, thread, op_id, op)
        return op_id

    def respond(self, thread, op_id: int, op: tuple, response) -> None:
        self._emit(RESPOND, thread, op_id, op, response)


@dataclass
class LinResult:
    status: str  # "ok" | "violation" | "inconclusive"
    witness: list[int] | None = None
    prefix_len: int | None = None
    explored: int = 0
    final_state: sm.SeqListState | None = None

    @property
    def ok(self) -> bool:
        return self.status == "ok"


class _Budget(Exception):
    pass


def _same(a, b) -> bool:
    return type(a) is type(b) and a == b


def _search(ops: list[Operation], initial, budget: int, final=None):
    n = len(ops)
    completed_mask = 0
    for i, o in enumerate(ops):
        if not o.pending:
            completed_mask |= 1 << i
    failed = set()
    counter = [0]

    def go(done: int, state):
        if done & completed_mask == completed_mask and (final is None or final(state)):
            return [], state
        key = (done, state.key())
        if key in failed:
            return None
        counter[0] += 1
        if counter[0] > budget:
            raise _Budget
        horizon = min(
            (ops[i].responded for i in range(n) if not done >> i & 1 and not ops[i].pending),
            default=float("inf"),
        )
        for i in range(n):
            if done >> i & 1:
                continue
            o = ops[i]
            if o.invoked > horizon:
                break
            try:
                nxt, r = sm.apply_op(state, o.op, o.thread)
            except (KeyError, PermissionError, ValueError):
                continue
            if not o.pending and not _same(r, o.response):
                continue
            sub = go(done | 1 << i, nxt)
            if sub is not None:
                return [o.op_id] + sub[0], sub[1]
        failed.add(key)
        return None

    limit = sys.getrecursionlimit()
    sys.setrecursionlimit(max(limit, 10 * n + 1000))
    try:
        return go(0, initial), counter[0]
    finally:
        sys.setrecursionlimit(limit)


def check_linearizable(h: History, budget: int = 200_000, minimize: bool = True, final=None) -> LinResult:
    """Search for a linearization of ``h``.

    Pending operations may be linearized with any response or left out.
    ``final(state)``, if given, must also hold for the model state the
    linearization ends in. On failure the shortest non-linearizable event
    prefix is reported.
    """
    ops = h.operations()
    try:
        found, explored = _search(ops, h.initial, budget, final)
    except _Budget:
        return LinResult("inconclusive", explored=budget)
    if found is not None:
        return LinResult("ok", witness=found[0], explored=explored, final_state=found[1])
    res = LinResult("violation", explored=explored, prefix_len=len(h.events))
    if minimize:
        lo, hi = 0, len(h.events)
        while lo < hi:
            mid = (lo + hi) // 2
            sub = check_linearizable(h.prefix(mid), budget, minimize=False)
            if sub.status == "violation":
                hi = mid
            else:
                lo = mid + 1
        res.prefix_len = lo
    return res


def replay_witness(h: History, witness: list[int]):
    """Run the witness order through the model; return (state, {op_id: response})."""
    by_id = {o.op_id: o for o in h.operations()}
    state = h.initial
    out = {}
    for op_id in witness:
        o = by_id[op_id]
        state, out[op_id] = sm.apply_op(state, o.op, o.thread)
    return state, out


# ---------------------------------------------------------------------------
# stress histories from the atomic backend
# ---------------------------------------------------------------------------


def random_cursor_op(rng: random.Random, cname, weights=(2, 2, 3, 3, 2, 1), values=range(100)) -> tuple:
    names = ("insertBefore", "delete", "moveRight", "moveLeft", "get", "resetCursor")
    name = rng.choices(names, weights)[0]
    if name == "insertBefore":
        return (name, cname, rng.choice(values))
    return (name, cname)


def random_program(rng: random.Random, n_ops: int, max_cursors: int = 4, values=range(50)) -> list[tuple]:
    """A single-threaded program over all eight operations.

    Cursors are created and destroyed along the way; every operation names a
    cursor that is live at that point.
    """
    live: list[str] = []
    fresh = itertools.count()
    prog = []
    others = ("insertBefore", "delete", "moveRight", "moveLeft", "get", "resetCursor")
    weights = (4, 3, 4, 3, 2, 1)
    while len(prog) < n_ops:
        r = rng.random()
        if not live or (r < 0.04 and len(live) < max_cursors):
            name = f"c{next(fresh)}"
            live.append(name)
            prog.append(("createCursor", name))
        elif r < 0.06 and len(live) > 0:
            name = live.pop(rng.randrange(len(live)))
            prog.append(("destroyCursor", name))
        else:
            op = rng.choices(others, weights)[0]
            name = rng.choice(live)
            prog.append((op, name, rng.choice(values)) if op == "insertBefore" else (op, name))
    return prog


def run_op(lst: ListHandle, cursors: dict, op: tuple):
    name, cname, *args = op
    if name == "createCursor":
        cursors[cname] = lst.create_cursor(cname)
        return ACK
    c = cursors[cname]
    if name == "insertBefore":
        return lst.insert_before(c, args[0])
    if name == "delete":
        return lst.delete(c)
    if name == "moveRight":
        return lst.move_right(c)
    if name == "moveLeft":
        return lst.move_left(c)
    if name == "get":
        return lst.get(c)
    if name == "resetCursor":
        return lst.reset_cursor(c)
    if name == "destroyCursor":
        del cursors[cname]
        return lst.destroy_cursor(c)
    raise ValueError(name)


def build_setup(lst: ListHandle, initial_values, cursor_positions: dict, pid_of=lambda name: None):
    """Populate ``lst`` and place cursors; mirror every step on the model.

    ``cursor_positions`` maps cursor name to item index. Returns
    ``(cursors, model_state)``.
    """
    state = sm.INITIAL
    setup = lst.create_cursor("_setup")
    state, _ = sm.apply_op(state, ("createCursor", "_setup"))
    for v in initial_values:
        lst.insert_before(setup, v)
        state, _ = sm.apply_op(state, ("insertBefore", "_setup", v))
    lst.destroy_cursor(setup)
    state, _ = sm.apply_op(state, ("destroyCursor", "_setup"))
    cursors = {}
    for name, pos in cursor_positions.items():
        c = lst.create_cursor(name)
        state, _ = sm.apply_op(state, ("createCursor", name), pid_of(name))
        for _ in range(pos):
            lst.move_right(c)
            state, _ = sm.apply_op(state, ("moveRight", name), pid_of(name))
        cursors[name] = c
    return cursors, state


def record_stress_history(
    seed: int,
    threads: int = 4,
    ops_per_thread: int = 5,
    initial_len: int = 3,
    switch_interval: float = 1e-6,
    acc=None,
    max_pause: float = 2e-4,
) -> History:
    """Run a small random concurrent workload on real threads and record it.

    Each thread sleeps a random ``[0, max_pause)`` seconds after every invoke
    and before every respond, so operations of different threads overlap
    even under a global interpreter lock.

    With ``acc`` (a :class:`~nbdll.metrics.StatsAccumulator`) the list is
    instrumented and every recorded operation's access counts are added.
    """
    rng = random.Random(seed)
    lst = ListHandle(instrument=acc is not None)
    initial = [rng.randrange(100) for _ in range(initial_len)]
    positions = {f"c{t}": rng.randrange(initial_len + 1) for t in range(threads)}
    cursors, state = build_setup(lst, initial, positions, pid_of=lambda n: int(n[1:]))
    rec = Recorder(state)
    programs = [[random_cursor_op(rng, f"c{t}") for _ in range(ops_per_thread)] for t in range(threads)]
    pauses = [[rng.random() * max_pause for _ in range(2 * ops_per_thread)] for _ in range(threads)]
    barrier = threading.Barrier(threads)

    def worker(t: int):
        c = cursors[f"c{t}"]
        c.handoff()
        barrier.wait()
        for op in programs[t]:
            op_id = rec.invoke(t, op)
            time.sleep(pauses[t].pop())  # widen the window in which operations overlap
            c_dot = lst.active_cursors
            r = run_op(lst, cursors, op)
            time.sleep(pauses[t].pop())
            rec.respond(t, op_id, op, r)
            if acc is not None:
                acc.add(OpStats.from_log(op[0], c.op_log, max(c_dot, lst.active_cursors, 1)))

    old = sys.getswitchinterval()
    sys.setswitchinterval(switch_interval)
    try:
        ts = [threading.Thread(target=worker, args=(t,)) for t in range(threads)]
        for th in ts:
            th.start()
        for th in ts:
            th.join()
    finally:
        sys.setswitchinterval(old)
    return rec.history


__all__ = [
    "History",
    "HistoryEvent",
    "Operation",
    "Recorder",
    "LinResult",
    "check_linearizable",
    "replay_witness",
    "record_stress_history",
    "random_program",
    "run_op",
    "build_setup",
    "INVALID_CURSOR",
]
