import pytest

from nbdll import seqmodel as sm
from nbdll.dyadic import DyadicRational
from nbdll.values import ACK, EOL, INVALID_CURSOR


def run(ops, state=sm.INITIAL, pid=None):
    return sm.run_ops(ops, state, pid)


def test_initial_state_is_just_eol():
    assert sm.traverse(sm.INITIAL) == [EOL]
    assert sm.INITIAL.items[0].abs_val == DyadicRational(1)


def test_insert_keeps_cursor_on_its_item():
    s, out = run([("createCursor", "a"), ("insertBefore", "a", 5), ("get", "a"), ("insertBefore", "a", 6)])
    assert out == [ACK, True, EOL, True]
    assert sm.traverse(s) == [5, 6, EOL]


def test_abstract_values_bisect():
    s, _ = run([("createCursor", "a"), ("insertBefore", "a", 5), ("insertBefore", "a", 6)])
    assert [it.abs_val for it in s.items] == [DyadicRational(1, 1), DyadicRational(3, 2), DyadicRational(1)]
    s, _ = run([("resetCursor", "a"), ("insertBefore", "a", 4)], s)
    assert s.items[0].abs_val == DyadicRational(1, 2)


def test_moves_at_the_ends_return_false():
    s, out = run(
        [
            ("createCursor", "a"),
            ("moveLeft", "a"),
            ("moveRight", "a"),
            ("insertBefore", "a", 1),
            ("moveRight", "a"),
            ("moveLeft", "a"),
            ("get", "a"),
            ("moveLeft", "a"),
        ]
    )
    assert out == [ACK, False, False, True, False, True, 1, False]


def test_delete_moves_cursor_right_and_eol_delete_fails():
    s, out = run(
        [
            ("createCursor", "a"),
            ("insertBefore", "a", 1),
            ("insertBefore", "a", 2),
            ("resetCursor", "a"),
            ("delete", "a"),
            ("get", "a"),
            ("delete", "a"),
            ("delete", "a"),
        ]
    )
    assert out == [ACK, True, True, ACK, True, 2, True, False]
    assert sm.traverse(s) == [EOL]


def test_other_cursor_sees_insert_before_its_item():
    s, out = run(
        [
            ("createCursor", "a"),
            ("createCursor", "b"),
            ("insertBefore", "a", 1),
            ("insertBefore", "b", 2),
            ("insertBefore", "b", 3),
        ]
    )
    assert out == [ACK, ACK, True, INVALID_CURSOR, True]
    assert sm.traverse(s) == [1, 3, EOL]


def test_insert_invalidation_cleared_by_read_only_op():
    s, out = run(
        [
            ("createCursor", "a"),
            ("createCursor", "b"),
            ("insertBefore", "a", 1),
            ("get", "b"),
            ("insertBefore", "b", 2),
        ]
    )
    assert out == [ACK, ACK, True, EOL, True]
    assert sm.traverse(s) == [1, 2, EOL]


def test_delete_under_another_cursor_invalidates_every_op_once():
    s, out = run(
        [
            ("createCursor", "a"),
            ("insertBefore", "a", 1),
            ("resetCursor", "a"),
            ("createCursor", "b"),
            ("delete", "a"),
            ("moveRight", "b"),
            ("get", "b"),
        ]
    )
    assert out == [ACK, True, ACK, ACK, True, INVALID_CURSOR, EOL]


def test_reset_clears_invalidation():
    s, out = run(
        [
            ("createCursor", "a"),
            ("insertBefore", "a", 1),
            ("resetCursor", "a"),
            ("createCursor", "b"),
            ("delete", "a"),
            ("resetCursor", "b"),
            ("get", "b"),
        ]
    )
    assert out[-2:] == [ACK, EOL]


def test_errors():
    s, _ = run([("createCursor", "a")], pid=0)
    with pytest.raises(KeyError):
        sm.apply_op(s, ("createCursor", "a"))
    with pytest.raises(KeyError):
        sm.apply_op(s, ("get", "zz"))
    with pytest.raises(PermissionError):
        sm.apply_op(s, ("get", "a"), pid=1)
    with pytest.raises(ValueError):
        sm.apply_op(s, ("frobnicate", "a"))


def test_destroy_removes_cursor():
    s, out = run([("createCursor", "a"), ("destroyCursor", "a")])
    assert out == [ACK, ACK] and s.cursors == ()


def test_json_round_trip():
    s, _ = run([("createCursor", "a"), ("insertBefore", "a", 5), ("createCursor", "b"), ("delete", "b")])
    back = sm.SeqListState.from_json(s.to_json())
    assert back == s
    assert sm.decode_op(sm.encode_op(("insertBefore", "a", EOL))) == ("insertBefore", "a", EOL)


def test_key_ignores_item_uids():
    s1, _ = run([("createCursor", "a"), ("insertBefore", "a", 5), ("moveLeft", "a"), ("delete", "a")])
    s2, _ = run([("createCursor", "a")])
    assert s1.key() == s2.key()
    s3, _ = run([("createCursor", "a"), ("insertBefore", "a", 5)])
    s4 = sm.SeqListState(
        tuple(sm.SeqItem(uid + 10, it.value, it.abs_val) for uid, it in enumerate(s3.items)),
        tuple(sm.SeqCursor(c.name, s3.index_of(c.item) + 10, c.inv_del, c.inv_ins) for c in s3.cursors),
        50,
    )
    assert s3.key() == s4.key()
