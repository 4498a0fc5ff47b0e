import random
import threading

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nbdll import seqmodel as sm
from nbdll.core import CursorError, ListHandle
from nbdll.lincheck import random_program, run_op
from nbdll.metrics import OpStats
from nbdll.values import ACK, EOL, INVALID_CURSOR


def filled(values, instrument=False):
    lst = ListHandle(instrument=instrument)
    c = lst.create_cursor("fill")
    for v in values:
        lst.insert_before(c, v)
    lst.destroy_cursor(c)
    return lst


def test_empty_list():
    lst = ListHandle()
    assert lst.values() == [EOL]
    assert len(lst) == 0
    c = lst.create_cursor()
    assert lst.get(c) is EOL
    assert lst.move_right(c) is False
    assert lst.move_left(c) is False
    assert lst.delete(c) is False


def test_basic_sequence_matches_hand_result():
    lst = ListHandle()
    c = lst.create_cursor()
    assert lst.insert_before(c, 1) is True
    assert lst.insert_before(c, 2) is True
    assert lst.move_left(c) is True
    assert lst.get(c) == 2
    assert lst.delete(c) is True
    assert lst.get(c) is EOL
    assert lst.values() == [1, EOL]
    assert lst.values_backward() == [EOL, 1]


def test_same_item_insert_invalidates_other_cursor():
    lst = filled([7])
    a, b = lst.create_cursor(), lst.create_cursor()
    assert lst.insert_before(a, 1) is True
    assert lst.insert_before(b, 2) is INVALID_CURSOR
    assert lst.insert_before(b, 2) is True
    assert lst.values() == [1, 2, 7, EOL]


def test_delete_invalidates_cursor_on_removed_item():
    lst = filled([7, 8])
    a, b = lst.create_cursor(), lst.create_cursor()
    assert lst.delete(a) is True
    assert lst.get(b) is INVALID_CURSOR
    assert lst.get(b) == 8


@pytest.mark.parametrize("op", ["insert", "delete"])
def test_solo_update_issues_five_cas(op):
    lst = filled([1, 2, 3], instrument=True)
    c = lst.create_cursor()
    lst.move_right(c)
    if op == "insert":
        assert lst.insert_before(c, 9) is True
        st_ = OpStats.from_log("insertBefore", c.op_log)
    else:
        assert lst.delete(c) is True
        st_ = OpStats.from_log("delete", c.op_log)
    assert (st_.flag_cas, st_.forward_cas, st_.backward_cas) == (3, 1, 1)
    assert (st_.flag_ok, st_.forward_ok, st_.backward_ok) == (3, 1, 1)
    assert c.op_log.cas_issued == 5


@pytest.mark.parametrize("name", ["moveRight", "moveLeft", "get", "resetCursor"])
def test_read_only_ops_issue_no_writes(name):
    lst = filled([1, 2], instrument=True)
    c = lst.create_cursor()
    lst.move_right(c)
    run_op(lst, {"c": c}, (name, "c"))
    assert c.op_log.writes == 0 and c.op_log.cas_issued == 0
    lst.update_cursor(c)
    assert c.op_log.writes == 0 and c.op_log.cas_issued == 0


def test_cursor_ownership_enforced():
    lst = ListHandle()
    c = lst.create_cursor()
    err = []

    def other():
        try:
            lst.get(c)
        except CursorError as e:
            err.append(e)

    t = threading.Thread(target=other)
    t.start()
    t.join()
    assert err


def test_handoff_moves_ownership():
    lst = filled([4])
    c = lst.create_cursor()
    out = []

    def other():
        c.handoff()
        out.append(lst.get(c))

    t = threading.Thread(target=other)
    t.start()
    t.join()
    assert out == [4]


def test_destroyed_cursor_rejected_and_count_tracked():
    lst = ListHandle()
    c = lst.create_cursor()
    assert lst.active_cursors == 1
    assert lst.destroy_cursor(c) is ACK
    assert lst.active_cursors == 0
    with pytest.raises(CursorError):
        lst.get(c)


def test_ghost_abstract_values_increase_along_list():
    lst = ListHandle(instrument=True)
    c = lst.create_cursor()
    rng = random.Random(1)
    for _ in range(200):
        if rng.random() < 0.6:
            lst.insert_before(c, 0)
        elif rng.random() < 0.5:
            lst.move_left(c)
        else:
            lst.delete(c)
    nodes = [lst.head] + lst.nodes_forward() + [lst.tail]
    avs = [n.abs_val for n in nodes]
    assert all(a < b for a, b in zip(avs, avs[1:]))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32), st.integers(1, 80))
def test_random_programs_match_model(seed, n):
    prog = random_program(random.Random(seed), n)
    lst = ListHandle()
    cursors = {}
    got = [run_op(lst, cursors, op) for op in prog]
    state, want = sm.run_ops(prog)
    assert got == want
    assert [type(x) for x in got] == [type(x) for x in want]
    assert lst.values() == sm.traverse(state)
    assert lst.values_backward() == sm.traverse(state)[::-1]
