"""Deterministic interleaving explorer.

A *world* is a freshly built, single-threaded simulation of a concurrent
program whose threads are generators over the access port. The explorer
only needs this protocol::

    world.enabled()          -> sorted list of thread ids with a pending access
    world.describe(t)        -> (t, cell_uid, kind) of t's pending access
    world.step(t, observe)   -> list of violation strings (empty if none)
    world.state_key()        -> hashable canonical configuration (stateful mode)
    world.snapshot()/restore(snap)   observer state, for replay (stateful mode)
    world.on_new_state()     -> violations found by a full configuration sweep
    world.finish()           -> (outcome, violations) at a terminal state

Worlds cannot be copied (they hold live generators), so backtracking
rebuilds the world from its factory and replays the schedule prefix with
``observe=False``. Stateful mode skips configurations whose key was already
seen; stateless mode enumerates every schedule and can bound preemptions.
"""

from __future__ import annotations

import json
import sys
import threading
from collections import Counter
from dataclasses import dataclass, field

from .memory import CAS, KIND_NAMES, READ, WRITE, TracedMemory, perform


@dataclass
class Bounds:
    max_states: int = 2_000_000
    max_schedules: int | None = None
    max_preemptions: int | None = None
    max_depth: int = 10_000


@dataclass
class Violation:
    message: str
    schedule: list
    trace: list

    def to_json(self) -> dict:
        return {"message": self.message, "schedule": self.schedule, "trace": [list(t) for t in self.trace]}


@dataclass
class ExplorationReport:
    name: str
    mode: str
    states: int = 0
    transitions: int = 0
    schedules: int = 0
    terminals: int = 0
    max_depth: int = 0
    replays: int = 0
    outcomes: Counter = field(default_factory=Counter)
    violations: list = field(default_factory=list)
    exhausted: str | None = None
    extra: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations and self.exhausted is None

    @property
    def status(self) -> str:
        if self.violations:
            return "violation"
        if self.exhausted:
            return "bound-exhausted"
        return "ok"

    def to_json(self) -> dict:
        return {
            "name": self.name,
            "mode": self.mode,
            "status": self.status,
            "states": self.states,
            "transitions": self.transitions,
            "schedules": self.schedules,
            "terminals": self.terminals,
            "max_depth": self.max_depth,
            "replays": self.replays,
            "exhausted": self.exhausted,
            "outcomes": sorted(([json.loads(k), n] for k, n in self.outcomes.items()), key=lambda x: json.dumps(x)),
            "violations": [v.to_json() for v in self.violations],
            "extra": self.extra,
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True)


class _Stop(Exception):
    pass


class Explorer:
    """Bounded DFS over the interleavings of one world factory."""

    def __init__(self, factory, bounds: Bounds | None = None, *, stateful: bool = True, name: str = "",
                 stop_on_violation: bool = True, max_violations: int = 10, hash_keys: bool = True):
        self.hash_keys = hash_keys
        self.factory = factory
        self.bounds = bounds or Bounds()
        self.stateful = stateful
        self.stop_on_violation = stop_on_violation
        self.max_violations = max_violations
        self.report = ExplorationReport(name, "stateful" if stateful else "stateless")
        self._seen: dict = {}

    # -- helpers --------------------------------------------------------------

    def _key(self, w):
        # 64-bit digests keep memory flat; a collision would merge two states
        k = w.state_key()
        return hash(k) if self.hash_keys else k

    def _fresh(self, prefix):
        w = self.factory()
        if hasattr(w, "replay"):
            w.replay(prefix)
        else:
            for t in prefix:
                w.step(t, observe=False)
        return w

    def _violate(self, msgs, schedule, trace) -> None:
        for m in msgs:
            self.report.violations.append(Violation(m, list(schedule), list(trace)))
        if self.stop_on_violation or len(self.report.violations) >= self.max_violations:
            raise _Stop

    def _terminal(self, w, schedule, trace) -> None:
        outcome, msgs = w.finish()
        self.report.terminals += 1
        self.report.outcomes[json.dumps(outcome, sort_keys=True, default=str)] += 1
        if msgs:
            self._violate(msgs, schedule, trace)

    # -- public ---------------------------------------------------------------

    def run(self) -> ExplorationReport:
        limit = sys.getrecursionlimit()
        sys.setrecursionlimit(max(limit, 20_000))
        try:
            w = self.factory()
            if self.stateful:
                self._visit(w, [], [], self._key(w), frozenset())
            else:
                self.report.states = 1
                msgs = w.on_new_state()
                if msgs:
                    self._violate(msgs, [], [])
                self._dfs_stateless(w, [], [], None, 0)
        except _Stop:
            pass
        finally:
            sys.setrecursionlimit(limit)
        return self.report

    def _visit(self, w, schedule, trace, key, sleep: frozenset) -> None:
        """Stateful DFS with sleep sets.

        A thread is put to sleep in a child when its pending step commutes
        with the step taken (``w.independent``); the commuted order reaches
        the same state, so the transition is redundant. Sleep sets stored
        per state follow the usual fix for combining them with state
        caching: a revisit explores what was asleep before but is awake now.
        """
        rep, b = self.report, self.bounds
        stored = self._seen.get(key)
        enabled = w.enabled()
        if stored is None:
            self._seen[key] = sleep
            rep.states += 1
            if rep.states > b.max_states:
                rep.exhausted = "max_states"
                raise _Stop
            msgs = w.on_new_state()
            if msgs:
                self._violate(msgs, schedule, trace)
            if not enabled:
                rep.schedules += 1
                self._terminal(w, schedule, trace)
                return
            todo = [t for t in enabled if t not in sleep]
        else:
            if stored <= sleep or not enabled:
                return
            self._seen[key] = stored & sleep
            todo = [t for t in enabled if t in stored and t not in sleep]
        if not todo:
            return
        if len(schedule) >= b.max_depth:
            rep.exhausted = "max_depth"
            return
        rep.max_depth = max(rep.max_depth, len(schedule) + 1)
        indep = w.independent if hasattr(w, "independent") else None
        pairs = {}
        if indep is not None:
            cand = set(todo) | set(sleep)
            for t in todo:
                pairs[t] = frozenset(u for u in cand if u != t and indep(u, t))
        snap = w.snapshot()
        done: list = []
        first = True
        for t in todo:
            if not first:
                w = self._fresh(schedule)
                w.restore(snap)
                rep.replays += 1
            first = False
            child_sleep = frozenset(u for u in (set(sleep) | set(done)) if u in pairs.get(t, ()))
            desc = w.describe(t)
            msgs = w.step(t, observe=True)
            rep.transitions += 1
            schedule.append(t)
            trace.append(desc)
            if msgs:
                self._violate(msgs, schedule, trace)
            self._visit(w, schedule, trace, self._key(w), child_sleep)
            schedule.pop()
            trace.pop()
            done.append(t)

    def _dfs_stateless(self, w, schedule, trace, last, preemptions) -> None:
        rep, b = self.report, self.bounds
        enabled = w.enabled()
        if not enabled:
            if b.max_schedules is not None and rep.schedules >= b.max_schedules:
                rep.exhausted = "max_schedules"
                raise _Stop
            rep.schedules += 1
            self._terminal(w, schedule, trace)
            return
        if len(schedule) >= b.max_depth:
            rep.exhausted = "max_depth"
            return
        rep.max_depth = max(rep.max_depth, len(schedule) + 1)
        snap = w.snapshot()
        first = True
        for t in enabled:
            cost = preemptions + (1 if last is not None and t != last and last in enabled else 0)
            if b.max_preemptions is not None and cost > b.max_preemptions:
                continue
            if not first:
                w = self._fresh(schedule)
                w.restore(snap)
                rep.replays += 1
            first = False
            desc = w.describe(t)
            msgs = w.step(t, observe=True)
            rep.transitions += 1
            rep.states += 1
            schedule.append(t)
            trace.append(desc)
            if msgs:
                self._violate(msgs, schedule, trace)
            msgs = w.on_new_state()
            if msgs:
                self._violate(msgs, schedule, trace)
            self._dfs_stateless(w, schedule, trace, t, cost)
            schedule.pop()
            trace.pop()


def explore(factory, bounds: Bounds | None = None, *, stateful: bool = True, name: str = "", **kw) -> ExplorationReport:
    return Explorer(factory, bounds, stateful=stateful, name=name, **kw).run()


# ---------------------------------------------------------------------------
# a minimal world over bare cells
# ---------------------------------------------------------------------------


def canon(v):
    """Canonical, hashable stand-in for a cell value."""
    uid = getattr(v, "uid", None)
    if uid is not None:
        return ("obj", uid)
    return v


class _Thread:
    __slots__ = ("gen", "pending", "done", "result", "hist")

    def __init__(self, gen):
        self.gen = gen
        self.pending = None
        self.done = False
        self.result = None
        self.hist = 0


class CellWorld:
    """Threads are generator functions ``f(cells)`` yielding port requests.

    Used to test the explorer itself and the port semantics on bare cells.
    ``check(world)`` is an optional per-step callback returning violations.
    """

    def __init__(self, init_values: dict, programs, check=None):
        self.mem = TracedMemory()
        self.cells = {name: self.mem.cell(v, name, "v") for name, v in init_values.items()}
        self.threads = []
        for p in programs:
            th = _Thread(p(self.cells))
            self._advance(th, None)
            self.threads.append(th)
        self.check = check

    def _advance(self, th, value):
        try:
            th.pending = th.gen.send(value)
        except StopIteration as stop:
            th.pending = None
            th.done = True
            th.result = stop.value

    def enabled(self):
        return [i for i, th in enumerate(self.threads) if not th.done]

    def describe(self, t):
        req = self.threads[t].pending
        return (t, "/".join(map(str, req[1].uid)), KIND_NAMES[req[0]])

    def independent(self, t, u) -> bool:
        return self.threads[t].pending[0] == READ and self.threads[u].pending[0] == READ

    def step(self, t, observe=True):
        th = self.threads[t]
        res = perform(th.pending)
        th.hist = hash((th.hist, canon(res)))
        self._advance(th, res)
        if observe and self.check:
            return self.check(self)
        return []

    def state_key(self):
        return (
            tuple((c.uid, tuple(canon(v) for _, v in c.history)) for c in self.mem.cells),
            tuple((th.hist, th.done) for th in self.threads),
        )

    def snapshot(self):
        return None

    def restore(self, snap):
        pass

    def on_new_state(self):
        return []

    def finish(self):
        return {
            "results": [canon(th.result) for th in self.threads],
            "cells": {k: canon(c.value) for k, c in self.cells.items()},
        }, []


# ---------------------------------------------------------------------------
# pinned replay on the atomic backend
# ---------------------------------------------------------------------------


class PinnedRunner:
    """Run one OS thread per logical thread, releasing them one access at a time.

    Each worker drives its generator with real cells; before every shared
    access it waits for its turn, so the schedule fixes the interleaving of
    accesses exactly as in the explorer.
    """

    def __init__(self, gens_factories, schedule):
        self.factories = gens_factories
        self.schedule = list(schedule)
        self._turn = threading.Condition()
        self._current = None
        self._waiting: dict = {}
        self.results = [None] * len(gens_factories)
        self.errors: list = []

    def _worker(self, t):
        try:
            gen = self.factories[t]()
            value = None
            while True:
                try:
                    req = gen.send(value)
                except StopIteration as stop:
                    self.results[t] = stop.value
                    break
                if req[0] in (READ, WRITE, CAS):
                    with self._turn:
                        self._waiting[t] = True
                        self._turn.notify_all()
                        self._turn.wait_for(lambda: self._current == t)
                        self._waiting[t] = False
                        value = perform(req)
                        self._current = None
                        self._turn.notify_all()
                else:
                    value = None
        except BaseException as e:  # pragma: no cover - surfaced to caller
            self.errors.append(e)
        finally:
            with self._turn:
                self._waiting[t] = "done"
                self._turn.notify_all()

    def run(self, timeout: float = 10.0):
        n = len(self.factories)
        threads = [threading.Thread(target=self._worker, args=(t,), daemon=True) for t in range(n)]
        for th in threads:
            th.start()
        for t in self.schedule:
            with self._turn:
                ok = self._turn.wait_for(lambda: self._current is None and self._waiting.get(t) is True, timeout)
                if not ok:
                    raise RuntimeError(f"thread {t} not ready for its scheduled access")
                self._current = t
                self._turn.notify_all()
        with self._turn:
            self._turn.wait_for(lambda: self._current is None, timeout)
        for th in threads:
            th.join(timeout)
        if self.errors:
            raise self.errors[0]
        return self.results
