"""Exhaustive verification scenarios for the list on the deterministic backend.

A :class:`Scenario` is a small concurrent program: an initial list, cursors
placed by a single-threaded setup phase, and one short operation sequence per
thread. :class:`ListWorld` runs it under the explorer and checks at every
step:

* state invariants (:func:`nbdll.metrics.sweep_invariants`) on each new state;
* no shared write or CAS from a read-only operation;
* no change to ``nxt``/``prv`` of a removed node;
* at most one successful forward and backward CAS per descriptor;
* the potential-function step table (:data:`nbdll.metrics.DELTA_TABLE`);
* move witnesses: a completed move to ``v`` from ``y`` saw ``y.nxt = v``
  (right) or ``v.nxt = y`` (left) with the first node reachable;

and at every terminal state: linearizability of the recorded history against
the sequential model (including final values and abstract values), and the
amortized step bound.
"""

from __future__ import annotations

import enum
import json
import types
from dataclasses import dataclass, field

from . import seqmodel as sm
from .core import COMMITTED, ORDINARY, Cursor, Info, ListHandle, Node, UpdateCursorResult
from .dyadic import DyadicRational
from .explore import Bounds, ExplorationReport, canon, explore
from .lincheck import INVOKE as EV_INVOKE
from .lincheck import RESPOND as EV_RESPOND
from .lincheck import History, HistoryEvent, build_setup, check_linearizable
from .memory import CAS, INVOKE, KIND_NAMES, READ, RESPOND, WRITE, TracedMemory, perform
from .metrics import (
    UPDATE_OPS,
    GhostError,
    OpStats,
    PotentialTracker,
    check_delta,
    reachable_nodes,
    sweep_invariants,
    verify_step_bound,
)
from .values import ACK, EOL, encode_value

READ_ONLY_OPS = frozenset({"moveRight", "moveLeft", "get", "resetCursor", "destroyCursor", "createCursor"})
MOVE_OPS = frozenset({"moveRight", "moveLeft"})


@dataclass(frozen=True)
class Scenario:
    name: str
    initial: tuple
    cursors: tuple  # (name, position, thread)
    programs: tuple  # per thread: tuple of op descriptors
    expected: frozenset | None = None  # hand-derived response tuples, one per thread
    note: str = ""

    @property
    def threads(self) -> int:
        return len(self.programs)


@dataclass
class Checks:
    """Which per-step checks a world performs."""

    sweep: bool = True
    potential: bool = True
    witnesses: bool = True
    lincheck: bool = True
    step_bound_k: float = 128


@dataclass
class SuiteStats:
    """Aggregates collected across every terminal state of a run."""

    terminals: int = 0
    max_ratio: float = 0.0
    units: int = 0
    terms: int = 0
    events: dict = field(default_factory=dict)
    cas_by_readonly: int = 0
    writes_by_readonly: int = 0

    def to_json(self) -> dict:
        return {
            "terminals": self.terminals,
            "max_step_ratio": round(self.max_ratio, 6),
            "units": self.units,
            "terms": self.terms,
            "events": dict(sorted(self.events.items())),
            "cas_by_readonly": self.cas_by_readonly,
            "writes_by_readonly": self.writes_by_readonly,
        }


_PLAIN = frozenset({type(None), bool, int, str, float, DyadicRational})
_OPAQUE = (ListHandle, TracedMemory, types.GeneratorType, types.ModuleType, types.FunctionType)


def _canon_local(v):
    tv = type(v)
    if tv in _PLAIN or isinstance(v, enum.Enum):
        return v
    if tv is Node or tv is Info:
        return ("obj", v.uid)
    if tv is tuple or tv is list:
        return tuple(_canon_local(x) for x in v)
    if tv is UpdateCursorResult:
        return ("ucr", v.node.uid, v.info.uid, v.nxt.uid, v.prv.uid, v.inv_del, v.inv_ins)
    if tv is Cursor:
        return ("cursor", v.name)
    if isinstance(v, _OPAQUE) or tv is ListWorld:
        return tv.__name__
    raise TypeError(f"cannot canonicalize local of type {tv.__name__}")


def frame_key(gen) -> tuple:
    """Code position and live locals of a suspended generator and its ``yield from`` chain.

    Two threads with equal frame keys, over equal memory and cursor state,
    behave identically from here on.
    """
    out = []
    g = gen
    while g is not None:
        f = g.gi_frame
        if f is None:
            break
        loc = tuple((k, _canon_local(v)) for k, v in f.f_locals.items() if k != "self")
        out.append((f.f_code.co_name, f.f_lasti, loc))
        g = g.gi_yieldfrom
    return tuple(out)


def _op_id(t: int, k: int) -> int:
    return t * 100 + k


class _LThread:
    __slots__ = ("gen", "pending", "done", "hist", "op", "op_id", "responses", "fkey")

    def __init__(self, gen):
        self.fkey = None
        self.gen = gen
        self.pending = None
        self.done = False
        self.hist = ()
        self.op = None
        self.op_id = None
        self.responses = []


class SetupState:
    """The list and cursors after a scenario's setup phase, reusable across worlds.

    Building the setup runs the algorithm; :meth:`reset` instead rolls the
    traced memory back to the post-setup checkpoint, which is much cheaper
    when the explorer rebuilds worlds for replay.
    """

    def __init__(self, sc: Scenario):
        mem = self.mem = TracedMemory()
        mem.current_owner = "setup"
        self.lst = ListHandle(mem, instrument=True)
        owner = {name: t for name, _, t in sc.cursors}
        self.cursors, self.model0 = build_setup(
            self.lst, sc.initial, {name: pos for name, pos, _ in sc.cursors}, pid_of=owner.get
        )
        self._cp = mem.checkpoint()
        self._cursor_state = {n: (c.node, c.live, c.owner) for n, c in self.cursors.items()}
        self._active = (self.lst._active, self.lst.max_active)

    def reset(self) -> None:
        self.mem.rollback(self._cp)
        for n, (node, live, owner) in self._cursor_state.items():
            c = self.cursors[n]
            c.node, c.live, c.owner, c.moved_from, c.op_log = node, live, owner, None, None
        self.lst._active, self.lst.max_active = self._active


class ListWorld:
    """One execution of a :class:`Scenario` on a traced list."""

    def __init__(self, sc: Scenario, checks: Checks | None = None, stats: SuiteStats | None = None, base=None):
        self.sc = sc
        self.checks = checks or Checks()
        self.stats = stats if stats is not None else SuiteStats()
        if base is None:
            base = SetupState(sc)
        else:
            base.reset()
        mem = self.mem = base.mem
        self.lst = base.lst
        self.cursors = dict(base.cursors)
        self.model0 = base.model0
        self.events: list[HistoryEvent] = []
        self.responded: set = set()
        self.rt: dict = {}
        self.threads = [_LThread(self._program(t, ops)) for t, ops in enumerate(sc.programs)]
        for t, th in enumerate(self.threads):
            mem.current_owner = t
            self._send(th, None)
        # observer state (restored wholesale on replay)
        self.tracker = PotentialTracker(self.lst)
        self.opstats: dict[int, OpStats] = {}
        self.c_dot: dict[int, int] = {}
        self.witness: dict[int, set] = {}
        self.fwd_ok: dict = {}
        self.bwd_ok: dict = {}

    # -- thread programs ------------------------------------------------------

    def _program(self, t, ops):
        for k, op in enumerate(ops):
            op_id = _op_id(t, k)
            yield (INVOKE, None, op_id, op, None, None)
            name, cname, *args = op
            if name == "createCursor":
                c = yield from self.lst.gen_create_cursor(cname)
                self.cursors[cname] = c
                resp = ACK
            else:
                resp = yield from self.lst.gen_op(name, self.cursors[cname], *args, creator=op_id)
            yield (RESPOND, None, op_id, resp, None, None)

    def _send(self, th, value):
        th.fkey = None
        try:
            th.pending = th.gen.send(value)
        except StopIteration:
            th.pending = None
            th.done = True

    def _live_cursors(self):
        return [c for c in self.cursors.values() if c.live]

    # -- markers ----------------------------------------------------------------

    def _invoke(self, t, th, req, observe):
        op_id, op = req[2], req[3]
        th.op, th.op_id = op, op_id
        self.events.append(HistoryEvent(EV_INVOKE, t, op_id, op, None, len(self.events)))
        self.rt[op_id] = frozenset(self.responded)
        if not observe:
            return
        name = op[0]
        self.opstats[op_id] = OpStats(name)
        self.c_dot[op_id] = self.lst.active_cursors
        if name in UPDATE_OPS:
            self.tracker.on_invoke(op_id, self.cursors[op[1]])
        if name in MOVE_OPS and self.checks.witnesses:
            self.witness[op_id] = set(self._pairs())

    def _respond(self, t, th, req, observe) -> list[str]:
        op_id, resp = req[2], req[3]
        op = th.op
        self.events.append(HistoryEvent(EV_RESPOND, t, op_id, op, resp, len(self.events)))
        self.responded.add(op_id)
        th.responses.append(resp)
        th.op = th.op_id = None
        if not observe:
            return []
        out = []
        name = op[0]
        st = self.opstats[op_id]
        st.c_dot = max(self.c_dot[op_id], 1)
        self.tracker.on_respond(op_id)
        if name in MOVE_OPS and self.checks.witnesses:
            out += self._check_move(op_id, op, resp)
            self.witness.pop(op_id, None)
        return out

    def _pairs(self):
        reach = reachable_nodes(self.lst)
        return [(a.uid, b.uid) for a, b in zip(reach, reach[1:])]

    def _check_move(self, op_id, op, resp) -> list[str]:
        c = self.cursors[op[1]]
        y, v = c.moved_from, c.node
        w = self.witness.get(op_id, set())
        if resp is True:
            pair = (y.uid, v.uid) if op[0] == "moveRight" else (v.uid, y.uid)
            if pair not in w:
                return [f"{op[0]} to {v!r} from {y!r}: no configuration with the expected link"]
        elif resp is False:
            if op[0] == "moveRight":
                if y.val is not EOL or not any(a == y.uid for a, _ in w):
                    return [f"moveRight returned false but {y!r} was never a reachable EOL node"]
            elif (self.lst.head.uid, y.uid) not in w:
                return [f"moveLeft returned false but {y!r} was never first"]
        return []

    def _drain_markers(self, t, th, observe, stop_at_invoke: bool) -> list[str]:
        out = []
        while th.pending is not None and th.pending[0] >= INVOKE:
            req = th.pending
            if req[0] == INVOKE:
                if stop_at_invoke:
                    break
                self._invoke(t, th, req, observe)
            else:
                out += self._respond(t, th, req, observe)
            self.mem.current_owner = t
            self._send(th, None)
        return out

    # -- explorer protocol -------------------------------------------------------

    def enabled(self):
        return [t for t, th in enumerate(self.threads) if not th.done]

    def describe(self, t):
        th = self.threads[t]
        self.mem.current_owner = t
        self._drain_markers(t, th, True, stop_at_invoke=False)
        req = th.pending
        if req is None:
            return (t, None, None)
        uid = req[1].uid
        return (t, f"{uid[0]}.{uid[1]}", KIND_NAMES[req[0]])

    def independent(self, t, u) -> bool:
        """Whether the pending steps of ``t`` and ``u`` commute, observers included.

        Two plain reads commute: neither changes memory, and their ghost
        effects touch only the reading operation's own variables. A pending
        invocation (real-time order) or cursor creation (active-cursor
        count) makes a step dependent.
        """
        for th in (self.threads[t], self.threads[u]):
            req = th.pending
            if req is None or req[0] != READ or req[4] == "create.head":
                return False
        return True

    def replay(self, schedule) -> None:
        """Re-execute ``schedule`` without observers."""
        threads, mem = self.threads, self.mem
        for t in schedule:
            th = threads[t]
            mem.current_owner = t
            self._drain_markers(t, th, False, stop_at_invoke=False)
            req = th.pending
            if req is None:
                continue
            kind = req[0]
            if kind == READ:
                res = req[1].load()
            elif kind == CAS:
                res = req[1].cas(req[2], req[3])
            else:
                req[1].store(req[2])
                res = None
            th.hist += (canon(res),)
            try:
                th.pending = th.gen.send(res)
            except StopIteration:
                th.pending = None
                th.done = True
            if th.pending is not None and th.pending[0] == RESPOND:
                self._drain_markers(t, th, False, stop_at_invoke=True)

    def step(self, t, observe=True) -> list[str]:
        th = self.threads[t]
        mem = self.mem
        mem.current_owner = t
        out = self._drain_markers(t, th, observe, stop_at_invoke=False)
        req = th.pending
        if req is None:  # the whole remaining program had no shared access
            return out
        if not observe:
            res = perform(req)
            th.hist += (canon(res),)
            self._send(th, res)
            return out + self._drain_markers(t, th, False, stop_at_invoke=True)

        kind, cell, tag = req[0], req[1], req[4]
        op_id, op = th.op_id, th.op
        name = op[0]
        st = self.opstats[op_id]
        checks = self.checks
        if kind != READ and (name in READ_ONLY_OPS or tag.startswith("uc.")):
            who = "updateCursor" if tag.startswith("uc.") else name
            out.append(f"read-only {who} issued a {KIND_NAMES[kind]} ({tag})")
            if kind == CAS:
                self.stats.cas_by_readonly += 1
            else:
                self.stats.writes_by_readonly += 1
        removed_target = False
        if kind != READ and cell.field in ("nxt", "prv") and isinstance(cell.owner, Node):
            n = cell.owner
            if n.state.value is not ORDINARY and n not in reachable_nodes(self.lst):
                removed_target = True
        before = cell.value
        pre = None
        if checks.potential:
            try:
                pre = self.tracker.potential(self._live_cursors())
            except GhostError as e:
                out.append(f"potential undefined before step: {e}")

        res = perform(req)
        th.hist += (canon(res),)
        st.record(kind, tag, res)
        if removed_target and (kind == WRITE or res):
            out.append(f"{cell.uid} changed after its node was removed")
        if tag in ("help.fwd", "help.bwd") and res:
            ctr = self.fwd_ok if tag == "help.fwd" else self.bwd_ok
            uid = req[5].uid
            ctr[uid] = ctr.get(uid, 0) + 1
            if ctr[uid] > 1:
                out.append(f"second successful {tag} for descriptor {uid}")
        event = self.tracker.on_access(op_id, req, res, before) if checks.potential else None
        if event is not None:
            self.stats.events[event] = self.stats.events.get(event, 0) + 1

        self._send(th, res)
        active = self.lst.active_cursors
        for k in self.c_dot:
            if k not in self.responded and active > self.c_dot[k]:
                self.c_dot[k] = active
        if checks.potential and pre is not None:
            try:
                post = self.tracker.potential(self._live_cursors())
                row = event if name in UPDATE_OPS or event == "hop" else "move"
                out += check_delta(row, post - pre, max(self.c_dot[op_id], 1))
                out += self.tracker.range_violations()
            except GhostError as e:
                out.append(f"potential undefined after step: {e}")
        if checks.witnesses and self.witness:
            pairs = self._pairs()
            for k in self.witness:
                self.witness[k].update(pairs)
        out += self._drain_markers(t, th, True, stop_at_invoke=True)
        return out

    def _fkey(self, th):
        if th.fkey is None:
            th.fkey = frame_key(th.gen)
        return th.fkey

    def state_key(self):
        # cells never written hold values fixed by setup or by their allocating thread
        memkey = frozenset(
            (c.uid, tuple(canon(v) for _, v in c.history)) for c in self.mem.cells if len(c.history) > 1
        )
        threads = tuple(
            (self._fkey(th), th.done, th.op_id, tuple(canon(r) for r in th.responses)) for th in self.threads
        )
        cursors = tuple(
            sorted((repr(n), canon(c.node), c.live, canon(c.moved_from)) for n, c in self.cursors.items())
        )
        return (
            memkey,
            threads,
            cursors,
            tuple(sorted(self.mem._alloc.items(), key=repr)),
            tuple(sorted(self.rt.items())),
            self.tracker.key(),
            tuple(sorted(self.c_dot.items())),
            tuple(sorted((k, s.attempts, s.uc_iterations) for k, s in self.opstats.items())),
            tuple(sorted((k, frozenset(v)) for k, v in self.witness.items())),
        )

    def snapshot(self):
        return (
            self.tracker.snapshot(),
            {k: OpStats(**vars(v)) for k, v in self.opstats.items()},
            dict(self.c_dot),
            {k: set(v) for k, v in self.witness.items()},
            dict(self.fwd_ok),
            dict(self.bwd_ok),
        )

    def restore(self, snap) -> None:
        tracker, opstats, c_dot, witness, fwd, bwd = snap
        self.tracker.restore(tracker, lambda c: self.cursors[c.name])
        self.opstats = {k: OpStats(**vars(v)) for k, v in opstats.items()}
        self.c_dot = dict(c_dot)
        self.witness = {k: set(v) for k, v in witness.items()}
        self.fwd_ok = dict(fwd)
        self.bwd_ok = dict(bwd)

    def on_new_state(self) -> list[str]:
        out = []
        if self.checks.sweep:
            try:
                out += sweep_invariants(self.lst, self._live_cursors())
            except GhostError as e:
                out.append(str(e))
        if self.checks.potential:
            try:
                phi = self.tracker.potential(self._live_cursors())
                if phi.cursor < 0 or phi.flag < 0 or phi.state < 0:
                    out.append(f"negative potential {phi}")
            except GhostError as e:
                out.append(str(e))
        return out

    # -- terminal -------------------------------------------------------------

    def final_items(self):
        return [(n.val, n.abs_val) for n in self.lst.nodes_forward()]

    def history(self) -> History:
        return History(list(self.events), self.model0)

    def finish(self):
        out = []
        final = self.final_items()
        outcome = {
            "responses": [[encode_value(r) for r in th.responses] for th in self.threads],
            "final": [encode_value(v) for v, _ in final],
        }
        if self.lst.values_backward()[::-1] != [v for v, _ in final]:
            out.append("backward traversal disagrees with forward traversal at quiescence")
        out += sweep_invariants(self.lst, self._live_cursors()) if self.checks.sweep else []
        for inf in (o for o in self.mem.objects if hasattr(o, "rmv")):
            if inf.uid[0] == "setup":
                continue
            if inf.status.value is COMMITTED and (self.fwd_ok.get(inf.uid) != 1 or self.bwd_ok.get(inf.uid) != 1):
                out.append(f"committed {inf!r} without exactly one forward and one backward CAS")
        if self.checks.lincheck:
            want = [(v, a) for v, a in final]
            res = check_linearizable(
                self.history(),
                final=lambda s: [(it.value, it.abs_val) for it in s.items] == want,
            )
            if not res.ok:
                out.append(f"history not linearizable ({res.status}, prefix {res.prefix_len})")
        recs = list(self.opstats.values())
        if recs and self.checks.step_bound_k:
            b = verify_step_bound(recs, self.checks.step_bound_k)
            s = self.stats
            s.max_ratio = max(s.max_ratio, b.ratio)
            s.units += b.units
            s.terms += b.bound_terms
            if not b.ok:
                out.append(f"step bound: {b.detail}")
        self.stats.terminals += 1
        return outcome, out


# ---------------------------------------------------------------------------
# expected outcomes from the model
# ---------------------------------------------------------------------------


def _interleavings(lengths):
    total = sum(lengths)
    if total == 0:
        yield ()
        return
    for t, n in enumerate(lengths):
        if n:
            rest = list(lengths)
            rest[t] -= 1
            for tail in _interleavings(rest):
                yield (t,) + tail


def model_outcomes(sc: Scenario) -> set:
    """Every (responses, final traversal) reachable by running whole operations in sequence."""
    _, model0 = build_setup(
        ListHandle(), sc.initial, {n: p for n, p, _ in sc.cursors}, pid_of={n: t for n, _, t in sc.cursors}.get
    )
    out = set()
    for order in _interleavings([len(p) for p in sc.programs]):
        state = model0
        pos = [0] * sc.threads
        resp = [[] for _ in range(sc.threads)]
        for t in order:
            op = sc.programs[t][pos[t]]
            pos[t] += 1
            state, r = sm.apply_op(state, op, t)
            resp[t].append(encode_value(r))
        out.add(json.dumps({"responses": resp, "final": [encode_value(v) for v in sm.traverse(state)]}, sort_keys=True))
    return out


# ---------------------------------------------------------------------------
# catalog
# ---------------------------------------------------------------------------

INV = "invalidCursor"


def _S(name, initial, cursors, programs, expected=None, note=""):
    exp = None
    if expected is not None:
        exp = frozenset(json.dumps(e) for e in expected)
    return Scenario(name, tuple(initial), tuple(cursors), tuple(tuple(p) for p in programs), exp, note)


CATALOG = [
    _S(
        "insert_insert_same_gap",
        [5],
        [("a", 0, 0), ("b", 0, 1)],
        [[("insertBefore", "a", 1)], [("insertBefore", "b", 2)]],
        expected=[[[True], [{"marker": INV}]], [[{"marker": INV}], [True]]],
        note="two cursors at one item insert concurrently",
    ),
    _S(
        "insert_insert_same_gap_retry",
        [5],
        [("a", 0, 0), ("b", 0, 1)],
        [[("insertBefore", "a", 1), ("get", "a")], [("insertBefore", "b", 2), ("insertBefore", "b", 2)]],
        note="the loser retries after invalidCursor",
    ),
    _S(
        "insert_delete_same_item",
        [5, 8],
        [("a", 0, 0), ("b", 0, 1)],
        [[("insertBefore", "a", 1)], [("delete", "b")]],
    ),
    _S(
        "delete_delete_same_item",
        [5],
        [("a", 0, 0), ("b", 0, 1)],
        [[("delete", "a")], [("delete", "b")]],
        expected=[[[True], [{"marker": INV}]], [[{"marker": INV}], [True]]],
    ),
    _S(
        "delete_delete_adjacent",
        [5, 8, 9],
        [("a", 0, 0), ("b", 1, 1)],
        [[("delete", "a"), ("get", "a")], [("delete", "b"), ("get", "b")]],
    ),
    _S(
        "delete_vs_moveLeft",
        [5, 8, 9],
        [("a", 1, 0), ("b", 2, 1)],
        [[("delete", "a")], [("moveLeft", "b"), ("get", "b")]],
    ),
    _S(
        "delete_first_vs_moveLeft",
        [5, 8],
        [("a", 0, 0), ("b", 1, 1)],
        [[("delete", "a")], [("moveLeft", "b"), ("moveLeft", "b")]],
    ),
    _S(
        "delete_vs_moveRight",
        [5, 8, 9],
        [("a", 1, 0), ("b", 0, 1)],
        [[("delete", "a")], [("moveRight", "b"), ("get", "b")]],
    ),
    _S(
        "insert_vs_moveLeft",
        [5, 8],
        [("a", 1, 0), ("b", 1, 1)],
        [[("insertBefore", "a", 7)], [("moveLeft", "b"), ("get", "b")]],
    ),
    _S(
        "insert_vs_moveRight",
        [5, 8],
        [("a", 1, 0), ("b", 0, 1)],
        [[("insertBefore", "a", 7)], [("moveRight", "b"), ("moveLeft", "b")]],
    ),
    _S(
        "disjoint_inserts",
        [1, 2, 3, 4],
        [("a", 0, 0), ("b", 3, 1)],
        [[("insertBefore", "a", 7)], [("insertBefore", "b", 9)]],
        expected=[[[True], [True]]],
        note="updates at different parts of the list both succeed",
    ),
    _S(
        "disjoint_insert_delete",
        [1, 2, 3, 4],
        [("a", 0, 0), ("b", 3, 1)],
        [[("insertBefore", "a", 7)], [("delete", "b")]],
        expected=[[[True], [True]]],
    ),
    _S(
        "adjacent_inserts",
        [5, 8],
        [("a", 0, 0), ("b", 1, 1)],
        [[("insertBefore", "a", 1)], [("insertBefore", "b", 2)]],
    ),
    _S(
        "eol_boundary",
        [5],
        [("a", 1, 0), ("b", 0, 1)],
        [[("delete", "a"), ("insertBefore", "a", 3)], [("delete", "b"), ("moveRight", "b")]],
    ),
    _S(
        "empty_list_moves",
        [],
        [("a", 0, 0), ("b", 0, 1)],
        [[("moveRight", "a"), ("moveLeft", "a")], [("insertBefore", "b", 3), ("moveLeft", "b")]],
    ),
    _S(
        "create_vs_delete",
        [5],
        [("b", 0, 1)],
        [[("createCursor", "x"), ("get", "x")], [("delete", "b"), ("get", "b")]],
    ),
    _S(
        "reset_vs_delete",
        [5, 8],
        [("a", 1, 0), ("b", 0, 1)],
        [[("resetCursor", "a"), ("get", "a")], [("delete", "b"), ("destroyCursor", "b")]],
    ),
    _S(
        "three_thread_same_item_mix",
        [5, 8],
        [("a", 0, 0), ("b", 0, 1), ("c", 0, 2)],
        [[("insertBefore", "a", 1)], [("delete", "b")], [("moveRight", "c")]],
    ),
]

# Larger three-thread state spaces (a few minutes each); opt-in.
EXTENDED_CATALOG = [
    _S(
        "three_thread_adjacent_deletes",
        [1, 2, 3],
        [("a", 0, 0), ("b", 1, 1), ("c", 2, 2)],
        [[("delete", "a")], [("delete", "b")], [("delete", "c")]],
    ),
    _S(
        "three_thread_insert_delete_move",
        [5, 8],
        [("a", 1, 0), ("b", 0, 1), ("c", 2, 2)],
        [[("insertBefore", "a", 7)], [("delete", "b")], [("moveLeft", "c")]],
    ),
]

SCENARIOS = {sc.name: sc for sc in CATALOG + EXTENDED_CATALOG}


@dataclass
class ScenarioResult:
    scenario: Scenario
    report: ExplorationReport
    stats: SuiteStats
    expected: set
    explored: set

    @property
    def outcomes_match(self) -> bool:
        return self.explored == self.expected

    @property
    def hand_expected_ok(self) -> bool:
        if self.scenario.expected is None:
            return True
        got = {json.dumps(json.loads(o)["responses"]) for o in self.explored}
        return got == set(self.scenario.expected)

    @property
    def ok(self) -> bool:
        return self.report.ok and self.outcomes_match and self.hand_expected_ok

    def to_json(self) -> dict:
        d = self.report.to_json()
        d["stats"] = self.stats.to_json()
        d["outcomes_match_model"] = self.outcomes_match
        d["hand_expected_ok"] = self.hand_expected_ok
        return d


def run_scenario(sc: Scenario, bounds: Bounds | None = None, checks: Checks | None = None, *, stateful=True) -> ScenarioResult:
    stats = SuiteStats()
    checks = checks or Checks()
    base = SetupState(sc)
    rep = explore(lambda: ListWorld(sc, checks, stats, base), bounds, stateful=stateful, name=sc.name)
    explored = set(rep.outcomes)
    return ScenarioResult(sc, rep, stats, model_outcomes(sc), explored)


def run_exhaustive_suite(catalog=None, bounds: Bounds | None = None, checks: Checks | None = None, progress=None):
    """Explore every scenario; returns the list of :class:`ScenarioResult`."""
    results = []
    for sc in catalog or CATALOG:
        r = run_scenario(sc, bounds, checks)
        results.append(r)
        if progress:
            progress(r)
    return results


# ---------------------------------------------------------------------------
# replay of one schedule on the atomic backend
# ---------------------------------------------------------------------------


def random_schedule(sc: Scenario, rng, checks: Checks | None = None):
    """Run one random interleaving on the deterministic backend.

    Returns ``(access_schedule, outcome, violations)`` where the schedule
    lists the thread of every shared access, the form
    :func:`replay_on_atomic` takes.
    """
    checks = checks or Checks()
    w = ListWorld(sc, checks, SuiteStats(), SetupState(sc))
    schedule, msgs = [], list(w.on_new_state())
    while True:
        enabled = w.enabled()
        if not enabled:
            break
        t = rng.choice(enabled)
        desc = w.describe(t)
        msgs += w.step(t, observe=True)
        msgs += w.on_new_state()
        if desc[1] is not None:
            schedule.append(t)
    outcome, fin = w.finish()
    return schedule, outcome, msgs + fin


def replay_on_atomic(sc: Scenario, schedule) -> dict:
    """Run ``sc`` on real threads, one shared access at a time, following ``schedule``.

    Returns the same outcome dictionary as :meth:`ListWorld.finish`.
    """
    from .explore import PinnedRunner

    lst = ListHandle()
    owner = {name: t for name, _, t in sc.cursors}
    cursors, _ = build_setup(lst, sc.initial, {n: p for n, p, _ in sc.cursors}, pid_of=owner.get)
    responses = [[] for _ in sc.programs]

    def make(t):
        def gen():
            for c in cursors.values():
                if owner.get(c.name) == t:
                    c.handoff()
            for op in sc.programs[t]:
                name, cname, *args = op
                if name == "createCursor":
                    c = yield from lst.gen_create_cursor(cname)
                    cursors[cname] = c
                    r = ACK
                else:
                    r = yield from lst.gen_op(name, cursors[cname], *args)
                responses[t].append(encode_value(r))

        return gen

    PinnedRunner([make(t) for t in range(len(sc.programs))], schedule).run()
    return {"responses": responses, "final": [encode_value(v) for v in lst.values()]}


__all__ = [
    "Scenario",
    "Checks",
    "SuiteStats",
    "ListWorld",
    "CATALOG",
    "EXTENDED_CATALOG",
    "SCENARIOS",
    "ScenarioResult",
    "run_scenario",
    "run_exhaustive_suite",
    "model_outcomes",
    "replay_on_atomic",
    "random_schedule",
]
