"""Executable sequential specification: the pair (L, S).

``L`` is a tuple of items ending with the EOL item, ``S`` a tuple of cursors
sorted by name. States are immutable, so :func:`apply_op` is a pure function
and states can be shared freely by search-based checkers.

Operation descriptors are tuples ``(name, cursor_name, *args)`` with the
issuing process id supplied separately, e.g. ``("insertBefore", "c", 5)``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from .dyadic import ONE, DyadicRational
from .values import ACK, EOL, INVALID_CURSOR, decode_value, encode_value

OP_NAMES = (
    "createCursor",
    "destroyCursor",
    "resetCursor",
    "insertBefore",
    "delete",
    "get",
    "moveRight",
    "moveLeft",
)


@dataclass(frozen=True)
class SeqItem:
    uid: int
    value: object
    abs_val: DyadicRational


@dataclass(frozen=True)
class SeqCursor:
    name: object
    item: int  # uid of the item
    inv_del: bool = False
    inv_ins: bool = False
    pid: object = None


@dataclass(frozen=True)
class SeqListState:
    items: tuple[SeqItem, ...] = (SeqItem(0, EOL, ONE),)
    cursors: tuple[SeqCursor, ...] = ()
    next_uid: int = 1

    # -- lookups ------------------------------------------------------------

    def index_of(self, uid: int) -> int:
        for i, it in enumerate(self.items):
            if it.uid == uid:
                return i
        raise KeyError(uid)

    def cursor(self, name) -> SeqCursor:
        for c in self.cursors:
            if c.name == name:
                return c
        raise KeyError(f"unknown cursor {name!r}")

    def item_of(self, name) -> SeqItem:
        return self.items[self.index_of(self.cursor(name).item)]

    def key(self):
        """Canonical hashable form; ignores item uids."""
        av = {it.uid: it.abs_val for it in self.items}
        return (
            tuple((it.value, it.abs_val) for it in self.items),
            tuple((c.name, av[c.item], c.inv_del, c.inv_ins) for c in self.cursors),
        )

    # -- serialization ------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "items": [[it.uid, encode_value(it.value), it.abs_val.to_json()] for it in self.items],
            "cursors": [[c.name, c.item, c.inv_del, c.inv_ins, c.pid] for c in self.cursors],
            "next_uid": self.next_uid,
        }

    @classmethod
    def from_json(cls, data: dict) -> "SeqListState":
        items = tuple(
            SeqItem(uid, decode_value(v), DyadicRational.from_json(a)) for uid, v, a in data["items"]
        )
        cursors = tuple(SeqCursor(n, it, d, i, p) for n, it, d, i, p in data["cursors"])
        return cls(items, cursors, data["next_uid"])


INITIAL = SeqListState()


def traverse(state: SeqListState) -> list:
    return [it.value for it in state.items]


def _with_cursor(state: SeqListState, c: SeqCursor) -> SeqListState:
    cs = tuple(c if x.name == c.name else x for x in state.cursors)
    return replace(state, cursors=cs)


def _cleared(c: SeqCursor, **kw) -> SeqCursor:
    return replace(c, inv_del=False, inv_ins=False, **kw)


def apply_op(state: SeqListState, op: tuple, pid=None) -> tuple[SeqListState, object]:
    """Apply one operation; return ``(new_state, response)``."""
    name = op[0]
    if name == "createCursor":
        cname = op[1]
        if any(c.name == cname for c in state.cursors):
            raise KeyError(f"cursor {cname!r} already exists")
        c = SeqCursor(cname, state.items[0].uid, False, False, pid)
        cs = tuple(sorted(state.cursors + (c,), key=lambda x: repr(x.name)))
        return replace(state, cursors=cs), ACK

    c = state.cursor(op[1])
    if pid is not None and c.pid is not None and c.pid != pid:
        raise PermissionError(f"cursor {c.name!r} belongs to {c.pid!r}")

    if name == "destroyCursor":
        return replace(state, cursors=tuple(x for x in state.cursors if x.name != c.name)), ACK
    if name == "resetCursor":
        return _with_cursor(state, _cleared(c, item=state.items[0].uid)), ACK

    invalid = c.inv_del or (name == "insertBefore" and c.inv_ins)
    if invalid:
        return _with_cursor(state, _cleared(c)), INVALID_CURSOR

    items = state.items
    idx = state.index_of(c.item)
    item = items[idx]

    if name == "get":
        return _with_cursor(state, _cleared(c)), item.value
    if name == "moveRight":
        if item.value is EOL:
            return _with_cursor(state, _cleared(c)), False
        return _with_cursor(state, _cleared(c, item=items[idx + 1].uid)), True
    if name == "moveLeft":
        if idx == 0:
            return _with_cursor(state, _cleared(c)), False
        return _with_cursor(state, _cleared(c, item=items[idx - 1].uid)), True
    if name == "insertBefore":
        value = op[2]
        if idx == 0:
            av = item.abs_val.half()
        else:
            av = items[idx - 1].abs_val.midpoint(item.abs_val)
        new = SeqItem(state.next_uid, value, av)
        new_items = items[:idx] + (new,) + items[idx:]
        cs = []
        for x in state.cursors:
            if x.name == c.name:
                cs.append(_cleared(x))
            elif x.item == c.item:
                cs.append(replace(x, inv_ins=True))
            else:
                cs.append(x)
        return SeqListState(new_items, tuple(cs), state.next_uid + 1), True
    if name == "delete":
        if item.value is EOL:
            return _with_cursor(state, _cleared(c)), False
        nxt = items[idx + 1].uid
        new_items = items[:idx] + items[idx + 1 :]
        cs = []
        for x in state.cursors:
            if x.name == c.name:
                cs.append(_cleared(x, item=nxt))
            elif x.item == c.item:
                cs.append(replace(x, item=nxt, inv_del=True))
            else:
                cs.append(x)
        return SeqListState(new_items, tuple(cs), state.next_uid), True
    raise ValueError(f"unknown operation {name!r}")


def run_ops(ops, state: SeqListState = INITIAL, pid=None):
    """Apply a sequence of operations; return ``(final_state, responses)``."""
    out = []
    for op in ops:
        state, r = apply_op(state, op, pid)
        out.append(r)
    return state, out


def encode_op(op: tuple) -> list:
    return [encode_value(x) for x in op]


def decode_op(data) -> tuple:
    return tuple(decode_value(x) for x in data)
