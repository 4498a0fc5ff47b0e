"""Non-blocking doubly-linked list with process-local cursors.

Every public operation has a generator twin (``gen_<name>``) that yields
access requests to a driver instead of touching shared cells itself (see
:mod:`nbdll.memory`). The public methods run the twin with
:func:`~nbdll.memory.run_direct`; the deterministic explorer steps the same
twin one shared access at a time.

Updates flag three consecutive nodes ``x, y, z`` with an :class:`Info`
descriptor, then change ``x.nxt`` (forward CAS) and ``z.prv`` (backward CAS).
An insertion replaces ``y`` by a fresh copy so no ``nxt``/``prv`` cell ever
sees a value twice. Moves only read.
"""

from __future__ import annotations

import enum
import threading
from dataclasses import dataclass

from .dyadic import ONE, TWO, ZERO
from .memory import CAS, READ, WRITE, AccessLog, AtomicMemory, run_direct
from .values import ACK, EOL, INVALID_CURSOR, NO_VALUE, Marker


class State(enum.Enum):
    ORDINARY = "ordinary"
    COPIED = "copied"
    MARKED = "marked"


class Status(enum.Enum):
    IN_PROGRESS = "inProgress"
    COMMITTED = "committed"
    ABORTED = "aborted"


ORDINARY, COPIED, MARKED = State.ORDINARY, State.COPIED, State.MARKED
IN_PROGRESS, COMMITTED, ABORTED = Status.IN_PROGRESS, Status.COMMITTED, Status.ABORTED


class Node:
    __slots__ = ("val", "nxt", "prv", "copy", "info", "state", "abs_val", "uid")

    def __init__(self, mem, val, nxt, prv, info, abs_val=None):
        self.uid = mem.new_uid()
        self.val = val
        self.nxt = mem.cell(nxt, self, "nxt")
        self.prv = mem.cell(prv, self, "prv")
        self.copy = mem.cell(None, self, "copy")
        self.info = mem.cell(info, self, "info")
        self.state = mem.cell(ORDINARY, self, "state")
        self.abs_val = abs_val
        if mem.traced:
            mem.register(self)

    def __repr__(self) -> str:
        return f"Node({self.val!r}, uid={self.uid})"


class Info:
    __slots__ = ("nodes", "old_info", "new_nxt", "new_prv", "rmv", "status", "uid", "creator")

    def __init__(self, mem, nodes, old_info, new_nxt, new_prv, rmv, status=IN_PROGRESS, creator=None):
        self.uid = mem.new_uid()
        self.nodes = nodes
        self.old_info = old_info
        self.new_nxt = new_nxt
        self.new_prv = new_prv
        self.rmv = rmv
        self.status = mem.cell(status, self, "status")
        self.creator = creator
        if mem.traced:
            mem.register(self)

    def __repr__(self) -> str:
        kind = "delete" if self.rmv else "insert"
        return f"Info({kind}, uid={self.uid})"


class CursorError(RuntimeError):
    """Raised on cursor misuse: use after destroy or by a non-owner thread."""


class Cursor:
    """A process-local location in the list.

    ``node`` is private to the owning thread and is never written by anyone
    else. ``moved_from`` records the node a move started from (the node
    returned by updateCursor) for the move-witness checks.
    """

    __slots__ = ("lst", "node", "owner", "live", "name", "moved_from", "op_log")

    def __init__(self, lst: "ListHandle", node: Node, name=None):
        self.lst = lst
        self.node = node
        self.owner = threading.get_ident()
        self.live = True
        self.name = name
        self.moved_from = None
        self.op_log = None

    def handoff(self) -> None:
        """Transfer ownership to the calling thread (no operation in flight)."""
        self.owner = threading.get_ident()

    def __repr__(self) -> str:
        return f"Cursor({self.name!r} @ {self.node!r})"


@dataclass(frozen=True)
class UpdateCursorResult:
    node: Node
    info: Info
    nxt: Node
    prv: Node
    inv_del: bool
    inv_ins: bool


class ListHandle:
    """A shared non-blocking list.

    ``instrument=True`` maintains ghost abstract values on nodes and
    per-operation access logs on cursors (``cursor.op_log``).
    """

    def __init__(self, mem=None, *, instrument: bool = False):
        self.mem = mem if mem is not None else AtomicMemory()
        self.instrument = instrument
        mem = self.mem
        self.dum = Info(mem, (), (), None, None, False, status=ABORTED)
        self.head = Node(mem, NO_VALUE, None, None, self.dum, ZERO if instrument else None)
        self.eol = Node(mem, EOL, None, self.head, self.dum, ONE if instrument else None)
        self.tail = Node(mem, NO_VALUE, None, self.eol, self.dum, TWO if instrument else None)
        self.head.nxt.init(self.eol)
        self.eol.nxt.init(self.tail)
        self._active = 0
        self._active_lock = threading.Lock()
        self.max_active = 0

    # -- cursor bookkeeping -------------------------------------------------

    @property
    def active_cursors(self) -> int:
        return self._active

    def _register(self, delta: int) -> None:
        with self._active_lock:
            self._active += delta
            if self._active > self.max_active:
                self.max_active = self._active

    def _check(self, c: Cursor) -> None:
        if not c.live:
            raise CursorError("cursor used after destroyCursor")
        if __debug__ and c.owner != threading.get_ident():
            raise CursorError("cursor used by a thread that does not own it")

    # -- generator twins ----------------------------------------------------

    def gen_create_cursor(self, name=None):
        first = yield (READ, self.head.nxt, None, None, "create.head", None)
        c = Cursor(self, first, name)
        self._register(+1)
        return c

    def gen_destroy_cursor(self, c: Cursor):
        self._check(c)
        c.live = False
        self._register(-1)
        return ACK
        yield  # pragma: no cover

    def gen_reset_cursor(self, c: Cursor):
        self._check(c)
        c.node = yield (READ, self.head.nxt, None, None, "reset.head", None)
        return ACK

    def gen_update_cursor(self, c: Cursor):
        inv_del = inv_ins = False
        tag = "uc.enter"
        while True:
            node = c.node
            st = yield (READ, node.state, None, None, tag, None)
            tag = "uc.state"
            if st is ORDINARY:
                break
            p = yield (READ, node.prv, None, None, "uc.prv", None)
            pn = yield (READ, p.nxt, None, None, "uc.prvnxt", None)
            if pn is node:
                break
            st = yield (READ, node.state, None, None, "uc.kind", None)
            if st is COPIED:
                c.node = yield (READ, node.copy, None, None, "uc.copy", None)
                inv_ins = True
            else:
                c.node = yield (READ, node.nxt, None, None, "uc.nxt", None)
                inv_del = True
        node = c.node
        info = yield (READ, node.info, None, None, "uc.info", None)
        nxt = yield (READ, node.nxt, None, None, "uc.rnxt", None)
        prv = yield (READ, node.prv, None, None, "uc.rprv", None)
        return UpdateCursorResult(node, info, nxt, prv, inv_del, inv_ins)

    def gen_check_info(self, nodes, old_info):
        for i in range(3):
            st = yield (READ, old_info[i].status, None, None, "ci.status", i)
            if st is IN_PROGRESS:
                yield from self.gen_help(old_info[i])
                return False
        for i in range(3):
            st = yield (READ, nodes[i].state, None, None, "ci.state", i)
            if st is not ORDINARY:
                return False
        for i in (1, 2):
            inf = yield (READ, nodes[i].info, None, None, "ci.info", (i, old_info[i]))
            if inf is not old_info[i]:
                return False
        return True

    def gen_help(self, info: Info, own: bool = False):
        do_ptr_cas = True
        i = 0
        while i < 3 and do_ptr_cas:
            node = info.nodes[i]
            yield (CAS, node.info, info.old_info[i], info, "help.flag", (info, i))
            cur = yield (READ, node.info, None, None, "help.flagread", (info, i))
            do_ptr_cas = cur is info
            i += 1
        if do_ptr_cas:
            y = info.nodes[1]
            if info.rmv:
                yield (WRITE, y.state, MARKED, None, "help.state", info)
            else:
                yield (WRITE, y.copy, info.new_prv, None, "help.copy", info)
                yield (WRITE, y.state, COPIED, None, "help.state", info)
            yield (CAS, info.nodes[0].nxt, y, info.new_nxt, "help.fwd", info)
            yield (CAS, info.nodes[2].prv, y, info.new_prv, "help.bwd", info)
            yield (WRITE, info.status, COMMITTED, None, "help.commit", info)
        else:
            st = yield (READ, info.status, None, None, "help.check", info)
            if st is IN_PROGRESS:
                yield (WRITE, info.status, ABORTED, None, "help.abort", info)
        st = yield (READ, info.status, None, None, "help.ret.own" if own else "help.ret", info)
        return st is COMMITTED

    def gen_insert_before(self, c: Cursor, v, creator=None):
        self._check(c)
        if isinstance(v, Marker):
            raise ValueError("insertBefore takes a user value")
        mem = self.mem
        while True:
            r = yield from self.gen_update_cursor(c)
            y, y_info, z, x = r.node, r.info, r.nxt, r.prv
            if r.inv_del or r.inv_ins:
                return INVALID_CURSOR
            nodes = (x, y, z)
            x_info = yield (READ, x.info, None, None, "op.xinfo", None)
            z_info = yield (READ, z.info, None, None, "op.zinfo", None)
            old_info = (x_info, y_info, z_info)
            if (yield from self.gen_check_info(nodes, old_info)):
                if self.instrument:
                    new_abs, copy_abs = x.abs_val.midpoint(y.abs_val), y.abs_val
                else:
                    new_abs = copy_abs = None
                new = Node(mem, v, None, x, self.dum, new_abs)
                y_copy = Node(mem, y.val, z, new, self.dum, copy_abs)
                new.nxt.init(y_copy)
                info = Info(mem, nodes, old_info, new, y_copy, False, creator=creator)
                if (yield from self.gen_help(info, own=True)):
                    c.node = y_copy
                    return True

    def gen_delete(self, c: Cursor, creator=None):
        self._check(c)
        mem = self.mem
        while True:
            r = yield from self.gen_update_cursor(c)
            y, y_info, z, x = r.node, r.info, r.nxt, r.prv
            if r.inv_del:
                return INVALID_CURSOR
            nodes = (x, y, z)
            x_info = yield (READ, x.info, None, None, "op.xinfo", None)
            z_info = yield (READ, z.info, None, None, "op.zinfo", None)
            old_info = (x_info, y_info, z_info)
            if (yield from self.gen_check_info(nodes, old_info)):
                if y.val is EOL:
                    return False
                info = Info(mem, nodes, old_info, z, x, True, creator=creator)
                if (yield from self.gen_help(info, own=True)):
                    c.node = z
                    return True

    def gen_move_right(self, c: Cursor):
        self._check(c)
        r = yield from self.gen_update_cursor(c)
        y, z = r.node, r.nxt
        c.moved_from = y
        if r.inv_del:
            return INVALID_CURSOR
        if y.val is EOL:
            return False
        c.node = z
        return True

    def gen_move_left(self, c: Cursor):
        self._check(c)
        r = yield from self.gen_update_cursor(c)
        y, x = r.node, r.prv
        c.moved_from = y
        if r.inv_del:
            return INVALID_CURSOR
        if x is self.head:
            return False
        # short-circuit, one shared read per operand
        recover = False
        st = yield (READ, x.state, None, None, "ml.state", None)
        if st is not ORDINARY:
            xp = yield (READ, x.prv, None, None, "ml.prv", None)
            xpn = yield (READ, xp.nxt, None, None, "ml.prvnxt", None)
            if xpn is not x:
                xn = yield (READ, x.nxt, None, None, "ml.nxt", None)
                recover = xn is y
        if recover:
            st = yield (READ, x.state, None, None, "ml.kind", None)
            if st is COPIED:
                c.node = yield (READ, x.copy, None, None, "ml.copy", None)
            else:
                w = yield (READ, x.prv, None, None, "ml.w", None)
                if w is self.head:
                    return False
                c.node = w
        else:
            c.node = x
        return True

    def gen_get(self, c: Cursor):
        self._check(c)
        r = yield from self.gen_update_cursor(c)
        if r.inv_del:
            return INVALID_CURSOR
        return r.node.val

    def gen_op(self, name: str, c: Cursor | None, *args, creator=None):
        """Generator for an operation named as in the sequential model."""
        if name == "insertBefore":
            return self.gen_insert_before(c, args[0], creator=creator)
        if name == "delete":
            return self.gen_delete(c, creator=creator)
        if name == "moveRight":
            return self.gen_move_right(c)
        if name == "moveLeft":
            return self.gen_move_left(c)
        if name == "get":
            return self.gen_get(c)
        if name == "resetCursor":
            return self.gen_reset_cursor(c)
        if name == "destroyCursor":
            return self.gen_destroy_cursor(c)
        if name == "createCursor":
            return self.gen_create_cursor(*args)
        raise ValueError(f"unknown operation {name!r}")

    # -- public API ---------------------------------------------------------

    def _run(self, gen, c: Cursor | None):
        if not self.instrument:
            return run_direct(gen)
        log = AccessLog()
        res = run_direct(gen, log)
        if isinstance(res, Cursor):
            c = res
        if c is not None:
            c.op_log = log
        return res

    def create_cursor(self, name=None) -> Cursor:
        return self._run(self.gen_create_cursor(name), None)

    def destroy_cursor(self, c: Cursor):
        return self._run(self.gen_destroy_cursor(c), c)

    def reset_cursor(self, c: Cursor):
        return self._run(self.gen_reset_cursor(c), c)

    def insert_before(self, c: Cursor, v):
        return self._run(self.gen_insert_before(c, v), c)

    def delete(self, c: Cursor):
        return self._run(self.gen_delete(c), c)

    def move_right(self, c: Cursor):
        return self._run(self.gen_move_right(c), c)

    def move_left(self, c: Cursor):
        return self._run(self.gen_move_left(c), c)

    def get(self, c: Cursor):
        return self._run(self.gen_get(c), c)

    def update_cursor(self, c: Cursor) -> UpdateCursorResult:
        return self._run(self.gen_update_cursor(c), c)

    def check_info(self, nodes, old_info) -> bool:
        return run_direct(self.gen_check_info(nodes, old_info))

    def help(self, info: Info) -> bool:
        return run_direct(self.gen_help(info))

    # -- quiescent inspection -------------------------------------------------

    def nodes_forward(self) -> list[Node]:
        """Reachable nodes between the sentinels, by following ``nxt``."""
        out = []
        n = self.head.nxt.value
        while n is not self.tail:
            out.append(n)
            n = n.nxt.value
        return out

    def values(self) -> list:
        """Item values in list order, ending with EOL (quiescent use)."""
        return [n.val for n in self.nodes_forward()]

    def values_backward(self) -> list:
        out = []
        n = self.tail.prv.value
        while n is not self.head:
            out.append(n.val)
            n = n.prv.value
        return out

    def __len__(self) -> int:
        return len(self.nodes_forward()) - 1


def new_list(mem=None, *, instrument: bool = False) -> ListHandle:
    """Fresh list ``head -> EOL -> tail``."""
    return ListHandle(mem, instrument=instrument)
