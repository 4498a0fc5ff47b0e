"""Shared-cell access port.

Algorithm code never touches a cell directly. It yields small request tuples
and receives the access result back::

    state = yield (READ, node.state, None, None, "uc.enter", None)
    ok = yield (CAS, node.info, expected, new, "help.flag", (info, i))

A driver decides when and how each request is performed. :func:`run_direct`
performs requests immediately on the calling thread (the atomic backend); the
explorer in :mod:`nbdll.explore` performs one request per scheduling point
(the deterministic backend). Requests are ``(kind, cell, a, b, tag, extra)``
where ``a``/``b`` are the write value or the CAS expected/new pair, ``tag``
names the pseudo-code line, and ``extra`` is instrumentation payload.

Two request kinds, :data:`INVOKE` and :data:`RESPOND`, are markers rather
than accesses. Drivers handle them inline and never schedule on them.
"""

from __future__ import annotations

import itertools
import threading
from collections import Counter
from dataclasses import dataclass, field

READ = 0
WRITE = 1
CAS = 2
INVOKE = 3
RESPOND = 4

KIND_NAMES = {READ: "read", WRITE: "write", CAS: "cas", INVOKE: "invoke", RESPOND: "respond"}

_STRIPES = 64
_locks = [threading.Lock() for _ in range(_STRIPES)]


class Cell:
    """A single shared word with sequentially consistent read/write/CAS.

    Reads are plain attribute loads. Writes and CAS serialize on a striped
    lock so a CAS's compare and swap are indivisible with respect to any
    other write of the same cell. Comparison is by identity.
    """

    __slots__ = ("value", "__weakref__")

    def __init__(self, value=None):
        self.value = value

    def load(self):
        return self.value

    def store(self, v) -> None:
        with _locks[id(self) % _STRIPES]:
            self.value = v

    def cas(self, expected, new) -> bool:
        with _locks[id(self) % _STRIPES]:
            if self.value is expected:
                self.value = new
                return True
            return False

    def init(self, v) -> None:
        """Set the value of a cell that is not yet visible to other threads."""
        self.value = v


class AtomicMemory:
    """Allocator for the atomic backend. Identities come from a counter."""

    traced = False

    def __init__(self):
        self._ids = itertools.count()

    def cell(self, value, owner=None, field_name: str = "") -> Cell:
        return Cell(value)

    def new_uid(self):
        return next(self._ids)


class TracedCell(Cell):
    """A cell of the deterministic backend.

    Keeps the full write history as ``(timestamp, value)`` pairs (the initial
    value at timestamp 0) plus per-kind access counters.
    """

    __slots__ = ("uid", "owner", "field", "history", "reads", "writes", "cas_ok", "cas_fail", "_mem")

    def __init__(self, mem: "TracedMemory", value, owner, field_name: str):
        super().__init__(value)
        self._mem = mem
        self.owner = owner
        self.field = field_name
        self.uid = (getattr(owner, "uid", owner), field_name)
        self.history: list[tuple[int, object]] = [(0, value)]
        self.reads = self.writes = self.cas_ok = self.cas_fail = 0

    def load(self):
        self.reads += 1
        return self.value

    def store(self, v) -> None:
        self.writes += 1
        self.value = v
        self.history.append((self._mem.tick(), v))

    def cas(self, expected, new) -> bool:
        if self.value is expected:
            self.cas_ok += 1
            self.value = new
            self.history.append((self._mem.tick(), new))
            return True
        self.cas_fail += 1
        return False

    def init(self, v) -> None:
        self.value = v
        self.history[0] = (0, v)


class TracedMemory:
    """Allocator for the deterministic backend.

    Object identities are canonical: ``(owner, n)`` where ``owner`` is the
    logical thread that allocated the object and ``n`` counts that thread's
    allocations. Two schedules that lead to the same configuration therefore
    produce equal identities regardless of interleaving.
    """

    traced = True

    def __init__(self):
        self.clock = 0
        self.current_owner: object = "init"
        self._alloc: Counter = Counter()
        self.cells: list[TracedCell] = []
        self.objects: list = []

    def tick(self) -> int:
        self.clock += 1
        return self.clock

    def new_uid(self):
        owner = self.current_owner
        n = self._alloc[owner]
        self._alloc[owner] = n + 1
        return (owner, n)

    def cell(self, value, owner=None, field_name: str = "") -> TracedCell:
        c = TracedCell(self, value, owner, field_name)
        self.cells.append(c)
        return c

    def register(self, obj) -> None:
        self.objects.append(obj)

    def checkpoint(self):
        """Token for :meth:`rollback`; cheap, records lengths only."""
        return (
            len(self.cells),
            [(len(c.history), c.reads, c.writes, c.cas_ok, c.cas_fail) for c in self.cells],
            len(self.objects),
            Counter(self._alloc),
            self.clock,
            self.current_owner,
        )

    def rollback(self, cp) -> None:
        """Return every cell that existed at ``cp`` to its value then; forget newer cells."""
        n, marks, n_obj, alloc, clock, owner = cp
        del self.cells[n:]
        for c, (k, r, w, ok, fail) in zip(self.cells, marks):
            if len(c.history) != k:
                del c.history[k:]
                c.value = c.history[-1][1]
            c.reads, c.writes, c.cas_ok, c.cas_fail = r, w, ok, fail
        del self.objects[n_obj:]
        self._alloc = Counter(alloc)
        self.clock = clock
        self.current_owner = owner


@dataclass
class AccessLog:
    """Per-tag access counts collected by a driver."""

    reads: int = 0
    writes: int = 0
    cas_issued: int = 0
    cas_succeeded: int = 0
    uc_mutations: int = 0  # writes or CAS issued from inside updateCursor
    by_tag: Counter = field(default_factory=Counter)
    cas_ok_by_tag: Counter = field(default_factory=Counter)

    def record(self, kind: int, tag: str, result) -> None:
        self.by_tag[tag] += 1
        if kind == READ:
            self.reads += 1
            return
        if tag.startswith("uc."):
            self.uc_mutations += 1
        if kind == CAS:
            self.cas_issued += 1
            if result:
                self.cas_succeeded += 1
                self.cas_ok_by_tag[tag] += 1
        elif kind == WRITE:
            self.writes += 1


def perform(req):
    """Perform one access request and return its result."""
    kind, cell = req[0], req[1]
    if kind == READ:
        return cell.load()
    if kind == CAS:
        return cell.cas(req[2], req[3])
    if kind == WRITE:
        cell.store(req[2])
        return None
    raise ValueError(f"not an access request: {req!r}")


def run_direct(gen, log=None):
    """Drive an algorithm generator to completion on the calling thread.

    Markers are ignored. If ``log`` has a ``record(kind, tag, result)``
    method every access is reported to it.
    """
    send = gen.send
    result = None
    try:
        if log is None:
            while True:
                req = send(result)
                kind = req[0]
                if kind == READ:
                    result = req[1].value
                elif kind == CAS:
                    result = req[1].cas(req[2], req[3])
                elif kind == WRITE:
                    req[1].store(req[2])
                    result = None
                else:
                    result = None
        else:
            record = log.record
            while True:
                req = send(result)
                kind = req[0]
                if kind >= INVOKE:
                    result = None
                    continue
                result = perform(req)
                record(kind, req[4], result)
    except StopIteration as stop:
        return stop.value
