"""Ghost-state instrumentation: realNode, invariant sweeps, potential function.

Everything here except :class:`OpStats` and :func:`verify_step_bound` reads a
*consistent configuration* and therefore only makes sense under the
deterministic backend, where no access is in flight while we look.
"""

from __future__ import annotations

import json
import threading
from collections import Counter
from dataclasses import asdict, dataclass, field

from .core import (
    ABORTED,
    COMMITTED,
    COPIED,
    IN_PROGRESS,
    MARKED,
    ORDINARY,
    Info,
    ListHandle,
    Node,
)
from .memory import AccessLog
from .values import EOL

UPDATE_OPS = frozenset({"insertBefore", "delete"})
HOP_TAGS = frozenset({"uc.copy", "uc.nxt"})
MAX_HOPS = 10_000


class GhostError(AssertionError):
    """A ghost quantity is undefined in the current configuration."""


# ---------------------------------------------------------------------------
# per-operation accounting
# ---------------------------------------------------------------------------


@dataclass
class OpStats:
    op: str
    attempts: int = 0
    uc_iterations: int = 0
    flag_cas: int = 0
    flag_ok: int = 0
    forward_cas: int = 0
    forward_ok: int = 0
    backward_cas: int = 0
    backward_ok: int = 0
    reads: int = 0
    writes: int = 0
    c_dot: int = 0
    uc_mutations: int = 0

    @property
    def is_update(self) -> bool:
        return self.op in UPDATE_OPS

    @property
    def cas_total(self) -> int:
        return self.flag_cas + self.forward_cas + self.backward_cas

    @property
    def units(self) -> int:
        """Attempts (one for non-updates) plus updateCursor loop iterations."""
        return (self.attempts if self.is_update else 1) + self.uc_iterations

    def record(self, kind: int, tag: str, result) -> None:
        if kind == 0:
            self.reads += 1
            if tag == "uc.enter":
                self.attempts += 1
            elif tag in HOP_TAGS:
                self.uc_iterations += 1
        elif kind == 2:
            if tag == "help.flag":
                self.flag_cas += 1
                self.flag_ok += bool(result)
            elif tag == "help.fwd":
                self.forward_cas += 1
                self.forward_ok += bool(result)
            elif tag == "help.bwd":
                self.backward_cas += 1
                self.backward_ok += bool(result)
        elif kind == 1:
            self.writes += 1

    @classmethod
    def from_log(cls, op: str, log: AccessLog, c_dot: int = 1) -> "OpStats":
        t, ok = log.by_tag, log.cas_ok_by_tag
        return cls(
            op=op,
            attempts=t["uc.enter"],
            uc_iterations=t["uc.copy"] + t["uc.nxt"],
            flag_cas=t["help.flag"],
            flag_ok=ok["help.flag"],
            forward_cas=t["help.fwd"],
            forward_ok=ok["help.fwd"],
            backward_cas=t["help.bwd"],
            backward_ok=ok["help.bwd"],
            reads=log.reads,
            writes=log.writes,
            c_dot=c_dot,
            uc_mutations=log.uc_mutations,
        )


@dataclass
class StepBoundResult:
    ok: bool
    units: int
    bound_terms: int
    k: float
    ratio: float
    detail: str = ""


def verify_step_bound(records, k: float = 128) -> StepBoundResult:
    """Check ``total units <= k * (sum of c_dot over updates + #moves + #updates)``.

    Every non-update operation counts as a move (each takes O(1) amortized
    steps).
    """
    records = list(records)
    units = sum(r.units for r in records)
    terms = sum(r.c_dot + 1 if r.is_update else 1 for r in records)
    ratio = units / terms if terms else 0.0
    ok = units <= k * terms
    detail = "" if ok else f"{units} units > {k} * {terms}"
    return StepBoundResult(ok, units, terms, k, ratio, detail)


def stats_to_json(records) -> str:
    return json.dumps([asdict(r) for r in records], indent=2)


READ_ONLY_OPS = frozenset({"moveRight", "moveLeft", "get", "resetCursor", "destroyCursor", "createCursor", "updateCursor"})


class StatsAccumulator:
    """Thread-safe running totals of :class:`OpStats` for atomic-backend runs.

    Keeps sums rather than records so long stress runs use constant memory.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self.ops: Counter = Counter()
        self.totals: Counter = Counter()
        self.units = 0
        self.terms = 0
        self.readonly_writes = 0
        self.readonly_cas = 0
        self.uc_mutations = 0
        self.max_c_dot = 0

    def add(self, st: OpStats) -> None:
        with self._lock:
            self.ops[st.op] += 1
            for f in ("attempts", "uc_iterations", "flag_cas", "flag_ok", "forward_cas", "forward_ok",
                      "backward_cas", "backward_ok", "reads", "writes"):
                self.totals[f] += getattr(st, f)
            self.units += st.units
            self.terms += st.c_dot + 1 if st.is_update else 1
            if st.op in READ_ONLY_OPS:
                self.readonly_writes += st.writes
                self.readonly_cas += st.cas_total
            self.uc_mutations += st.uc_mutations
            self.max_c_dot = max(self.max_c_dot, st.c_dot)

    def merge(self, other: "StatsAccumulator") -> None:
        with self._lock:
            self.ops.update(other.ops)
            self.totals.update(other.totals)
            self.units += other.units
            self.terms += other.terms
            self.readonly_writes += other.readonly_writes
            self.readonly_cas += other.readonly_cas
            self.uc_mutations += other.uc_mutations
            self.max_c_dot = max(self.max_c_dot, other.max_c_dot)

    def step_bound(self, k: float = 128) -> StepBoundResult:
        ratio = self.units / self.terms if self.terms else 0.0
        ok = self.units <= k * self.terms
        return StepBoundResult(ok, self.units, self.terms, k, ratio, "" if ok else f"{self.units} units > {k} * {self.terms}")

    def to_json(self) -> dict:
        b = self.step_bound()
        return {
            "ops": dict(sorted(self.ops.items())),
            "totals": dict(sorted(self.totals.items())),
            "units": self.units,
            "bound_terms": self.terms,
            "units_per_term": round(b.ratio, 6),
            "readonly_writes": self.readonly_writes,
            "readonly_cas": self.readonly_cas,
            "update_cursor_mutations": self.uc_mutations,
            "max_c_dot": self.max_c_dot,
        }


# ---------------------------------------------------------------------------
# configuration helpers
# ---------------------------------------------------------------------------


def reachable_nodes(lst: ListHandle) -> list[Node]:
    """``head``, every node on the ``nxt`` path, and ``tail``."""
    out = [lst.head]
    n = lst.head.nxt.value
    limit = MAX_HOPS
    while n is not None and n is not lst.tail:
        out.append(n)
        n = n.nxt.value
        limit -= 1
        if limit == 0:
            raise GhostError("nxt path from head does not reach tail")
    out.append(lst.tail)
    return out


def real_node(u: Node, reachable) -> tuple[Node, int]:
    """Follow copy/nxt from ``u`` while the node is removed; return (node, hops)."""
    hops = 0
    while u not in reachable:
        st = u.state.value
        if st is COPIED:
            u = u.copy.value
        elif st is MARKED:
            u = u.nxt.value
        else:
            break
        hops += 1
        if hops > MAX_HOPS:
            raise GhostError("realNode chain does not terminate")
    return u, hops


def length(u: Node, reachable) -> int:
    return real_node(u, reachable)[1]


def _published(lst: ListHandle, cursors) -> set:
    seen = set()
    stack = [lst.head, lst.tail] + [c.node for c in cursors]
    while stack:
        n = stack.pop()
        if n is None or n in seen:
            continue
        seen.add(n)
        for cell in (n.nxt, n.prv, n.copy):
            v = cell.value
            if v is not None and v not in seen:
                stack.append(v)
    return seen


def _all_nodes(lst: ListHandle):
    return [o for o in lst.mem.objects if isinstance(o, Node)]


def _all_infos(lst: ListHandle):
    return [o for o in lst.mem.objects if isinstance(o, Info)]


def _values(cell):
    return [v for _, v in cell.history]


def _distinct_by_identity(vals) -> bool:
    return len({id(v) for v in vals}) == len(vals)


def sweep_invariants(lst: ListHandle, cursors=()) -> list[str]:
    """Check every state invariant in the current configuration.

    Requires a list built on :class:`~nbdll.memory.TracedMemory`. Returns a
    list of human-readable violations (empty when all hold).
    """
    out: list[str] = []
    cursors = [c for c in cursors if c.live]
    head, tail = lst.head, lst.tail
    nodes = _all_nodes(lst)
    reach = reachable_nodes(lst)
    reach_set = set(reach)
    published = _published(lst, cursors)

    for c in cursors:
        if c.node is head or c.node is tail:
            out.append(f"cursor {c.name!r} points to a sentinel")

    for n in published:
        fields = [("info", n.info), ("state", n.state)]
        if n is not head:
            fields.append(("prv", n.prv))
        if n is not tail:
            fields.append(("nxt", n.nxt))
        for fname, cell in fields:
            if cell.value is None:
                out.append(f"{n!r}.{fname} is null")
        if n.state.value is COPIED and n.copy.value is None:
            out.append(f"{n!r} is copied but has no copy")
        if n.nxt.value is tail and n.val is not EOL:
            out.append(f"{n!r}.nxt is tail but val is not EOL")

    if lst.instrument:
        for v in nodes:
            w = v.nxt.value
            if w is not None and not v.abs_val < w.abs_val:
                out.append(f"absVal order broken on {v!r}.nxt -> {w!r}")
            u = v.prv.value
            if u is not None and not u.abs_val < v.abs_val:
                out.append(f"absVal order broken on {v!r}.prv -> {u!r}")

    for v in nodes:
        sts = _values(v.state)
        if sts[0] is not ORDINARY or len({s for s in sts[1:]} - {None}) > 1 or ORDINARY in sts[1:]:
            out.append(f"state of {v!r} not write-monotone: {sts}")
        copies = [x for x in _values(v.copy)[1:]]
        if len({id(x) for x in copies}) > 1:
            out.append(f"copy of {v!r} written with different values")
        for fname in ("info", "nxt", "prv"):
            vals = _values(getattr(v, fname))
            if not _distinct_by_identity(vals):
                out.append(f"{v!r}.{fname} stored a value twice")

    for inf in _all_infos(lst):
        sts = _values(inf.status)
        if inf is lst.dum:
            if sts != [ABORTED]:
                out.append("dummy descriptor status changed")
            continue
        if sts[0] is not IN_PROGRESS or len(set(sts[1:])) > 1 or IN_PROGRESS in sts[1:]:
            out.append(f"status of {inf!r} not monotone: {sts}")
        if sts[-1] is COMMITTED:
            x, y, z = inf.nodes
            if not any(v is inf.new_prv for v in _values(z.prv)):
                out.append(f"committed {inf!r} backward CAS missing")
            fwd_ts = next((ts for ts, v in x.nxt.history if v is inf.new_nxt), None)
            if fwd_ts is None:
                out.append(f"committed {inf!r} forward CAS missing")
                continue
            for fname in ("nxt", "prv"):
                late = [ts for ts, _ in getattr(y, fname).history if ts > fwd_ts]
                if late and y not in reach_set:
                    out.append(f"{y!r}.{fname} written after removal")

    for n in reach[1:-1]:
        if n.state.value is not ORDINARY and n.prv.value.nxt.value is not n:
            # reachable node must pass the reachability test used by updateCursor
            out.append(f"{n!r} reachable but fails prv.nxt test")
    return out


# ---------------------------------------------------------------------------
# potential function
# ---------------------------------------------------------------------------


@dataclass
class OpGhost:
    op_id: int
    cursor: object
    lose: list = field(default_factory=lambda: [3, 3, 3])
    phi_state: int = 2


@dataclass(frozen=True)
class Potential:
    cursor: int
    flag: int
    state: int

    @property
    def total(self) -> int:
        return self.cursor + self.flag + self.state

    def __sub__(self, other: "Potential") -> "Potential":
        return Potential(self.cursor - other.cursor, self.flag - other.flag, self.state - other.state)


class PotentialTracker:
    """Auxiliary variables for the amortized-analysis potential.

    ``on_access`` applies the update rules for ``lose_i``, ``abort`` and
    ``phi_state`` and classifies the step so the caller can compare the
    potential change against the per-step table (see :data:`DELTA_TABLE`).
    """

    def __init__(self, lst: ListHandle):
        self.lst = lst
        self.abort: set = set()
        self.ops: dict[int, OpGhost] = {}
        self.first_flag: set = set()

    # -- snapshots ------------------------------------------------------------

    def snapshot(self):
        return (
            set(self.abort),
            {k: OpGhost(g.op_id, g.cursor, list(g.lose), g.phi_state) for k, g in self.ops.items()},
            set(self.first_flag),
        )

    def restore(self, snap, cursor_map=None) -> None:
        abort, ops, first = snap
        self.abort = set(abort)
        self.ops = {}
        for k, g in ops.items():
            cur = cursor_map(g.cursor) if cursor_map else g.cursor
            self.ops[k] = OpGhost(g.op_id, cur, list(g.lose), g.phi_state)
        self.first_flag = set(first)

    def key(self):
        return (
            frozenset(self.abort),
            tuple(sorted((k, tuple(g.lose), g.phi_state) for k, g in self.ops.items())),
            frozenset(self.first_flag),
        )

    # -- events ---------------------------------------------------------------

    def on_invoke(self, op_id: int, cursor) -> None:
        self.ops[op_id] = OpGhost(op_id, cursor)

    def on_respond(self, op_id: int) -> None:
        self.ops.pop(op_id, None)

    def _node_triple(self, g: OpGhost, reach, pos):
        n1, _ = real_node(g.cursor.node, pos)
        if n1 not in pos:
            raise GhostError(f"realNode of op {g.op_id}'s cursor is unreachable")
        i1 = pos[n1]
        return reach[i1 - 1], n1, reach[i1 + 1]

    def on_access(self, op_id, req, result, before) -> str | None:
        """Apply ghost updates for one performed access; return its event class."""
        kind, cell, a, b, tag, extra = req
        g = self.ops.get(op_id)
        if tag in HOP_TAGS:
            return "hop"
        if tag == "ci.status":
            if result is IN_PROGRESS:
                if g is not None and g.lose[extra] > 0:
                    g.lose[extra] -= 1
                return "ci.status.inprog"
            return None
        if tag == "ci.state":
            if result is not ORDINARY:
                if g is not None and g.phi_state > 0:
                    g.phi_state -= 1
                return "ci.state.removed"
            return None
        if tag == "ci.info":
            i, old = extra
            if result is not old:
                if g is not None and g.lose[i] > 0:
                    g.lose[i] -= 1
                return "ci.info.changed"
            return None
        if tag == "help.flag":
            info, i = extra
            first = (info.uid, i) not in self.first_flag
            self.first_flag.add((info.uid, i))
            node = info.nodes[i]
            if result:
                reach = reachable_nodes(self.lst)
                pos = {n: j for j, n in enumerate(reach)}
                j = pos.get(node)
                if j is not None and j > 0:
                    self.abort.add(reach[j - 1].uid)
                for other in self.ops.values():
                    if other.op_id == info.creator:
                        continue
                    for k, nk in enumerate(self._node_triple(other, reach, pos)):
                        if nk is node:
                            other.lose[k] = 3
                return "flag.ok"
            if first:
                owner = self.ops.get(info.creator)
                if owner is not None:
                    owner.lose[i] = 2
                return "flag.first.fail"
            return None
        if tag in ("help.fwd", "help.bwd"):
            if not result:
                return None
            for other in self.ops.values():
                other.lose = [3, 3, 3]
                other.phi_state = 2
            if tag == "help.fwd":
                self.abort.add(extra.nodes[0].uid)
                return "fwd.ok"
            return "bwd.ok"
        if tag == "help.state":
            if before is ORDINARY:
                for other in self.ops.values():
                    other.phi_state = 2
                return "state.set"
            return None
        if tag in ("help.commit", "help.abort"):
            if before is IN_PROGRESS:
                info = extra
                for n in info.nodes:
                    if n.info.value is info:
                        self.abort.discard(n.uid)
                return "commit" if tag == "help.commit" else "abort"
            return None
        if tag == "help.ret.own" and result is COMMITTED:
            return "setcursor"
        return None

    # -- value ----------------------------------------------------------------

    def potential(self, cursors) -> Potential:
        reach = reachable_nodes(self.lst)
        pos = {n: j for j, n in enumerate(reach)}
        phi_c = sum(length(c.node, pos) for c in cursors if c.live)

        suffix = [0] * (len(reach) + 1)
        for j in range(len(reach) - 1, -1, -1):
            n = reach[j]
            term = (1 if n.uid in self.abort else 0) - (1 if n.info.value.status.value is IN_PROGRESS else 0)
            suffix[j] = suffix[j + 1] + term
        phi_f = 0
        phi_s = 0
        for g in self.ops.values():
            triple = self._node_triple(g, reach, pos)
            phi_f += 3 * sum(suffix[pos[n]] for n in triple) + sum(g.lose)
            phi_s += g.phi_state
        u = len(self.ops)
        phi_f += 27 * u * u
        return Potential(phi_c, phi_f, phi_s)

    def range_violations(self) -> list[str]:
        out = []
        for g in self.ops.values():
            if not all(0 <= x <= 3 for x in g.lose):
                out.append(f"lose out of range for op {g.op_id}: {g.lose}")
            if not 0 <= g.phi_state <= 2:
                out.append(f"phi_state out of range for op {g.op_id}: {g.phi_state}")
        return out


# (cursor, flag, state) bounds per step class. ("eq", v) exact, ("le", v)
# upper bound, ("le_c", m) at most m * c_dot(op); None means unconstrained.
DELTA_TABLE = {
    "hop": (("eq", -1), ("eq", 0), ("eq", 0)),
    "ci.status.inprog": (("eq", 0), ("eq", -1), ("eq", 0)),
    "ci.state.removed": (("eq", 0), ("eq", 0), ("eq", -1)),
    "ci.info.changed": (("eq", 0), ("eq", -1), ("eq", 0)),
    "flag.first.fail": (("eq", 0), ("eq", -1), ("eq", 0)),
    "abort": (("eq", 0), ("eq", 0), ("eq", 0)),
    "flag.ok": (("eq", 0), ("le", -3), ("eq", 0)),
    "state.set": (("eq", 0), ("eq", 0), ("le_c", 2)),
    "fwd.ok": (("le_c", 1), ("le_c", 63), ("le_c", 2)),
    "bwd.ok": (("eq", 0), ("le_c", 9), ("le_c", 2)),
    "commit": (("eq", 0), ("le_c", 27), ("eq", 0)),
    "setcursor": (("eq", -1), ("eq", 0), ("eq", 0)),
    None: (("eq", 0), ("eq", 0), ("eq", 0)),
    "move": (None, ("eq", 0), ("eq", 0)),
}

FAILING_EVENTS = frozenset({"ci.status.inprog", "ci.state.removed", "ci.info.changed", "flag.first.fail"})


def check_delta(event, delta: Potential, c_dot: int) -> list[str]:
    """Compare a step's potential change against its table row."""
    out = []
    row = DELTA_TABLE[event]
    for name, bound, value in zip(("cursor", "flag", "state"), row, (delta.cursor, delta.flag, delta.state)):
        if bound is None:
            continue
        kind, v = bound
        if kind == "eq" and value != v:
            out.append(f"step {event}: dPhi_{name} = {value}, expected {v}")
        elif kind == "le" and value > v:
            out.append(f"step {event}: dPhi_{name} = {value}, expected <= {v}")
        elif kind == "le_c" and value > v * c_dot:
            out.append(f"step {event}: dPhi_{name} = {value}, expected <= {v}*{c_dot}")
    if event in FAILING_EVENTS and delta.total > -1:
        out.append(f"failing step {event}: dPhi = {delta.total}, expected <= -1")
    return out
