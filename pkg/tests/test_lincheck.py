import json

from nbdll import seqmodel as sm
from nbdll.lincheck import (
    INVOKE,
    RESPOND,
    History,
    HistoryEvent,
    Recorder,
    check_linearizable,
    record_stress_history,
    replay_witness,
)
from nbdll.values import EOL, INVALID_CURSOR


def one_item_two_cursors():
    s = sm.INITIAL
    for op, pid in [
        (("createCursor", "_s"), None),
        (("insertBefore", "_s", 5), None),
        (("destroyCursor", "_s"), None),
        (("createCursor", "a"), 0),
        (("createCursor", "b"), 1),
    ]:
        s, _ = sm.apply_op(s, op, pid)
    return s


def hist(initial, *entries):
    """``entries`` are ("i", thread, op_id, op) or ("r", thread, op_id, response)."""
    ops = {}
    events = []
    for k, e in enumerate(entries):
        if e[0] == "i":
            ops[e[2]] = e[3]
            events.append(HistoryEvent(INVOKE, e[1], e[2], e[3], None, k))
        else:
            events.append(HistoryEvent(RESPOND, e[1], e[2], ops[e[2]], e[3], k))
    return History(events, initial)


D_A, D_B = ("delete", "a"), ("delete", "b")


def test_double_delete_of_one_item_is_not_linearizable():
    h = hist(one_item_two_cursors(), ("i", 0, 1, D_A), ("i", 1, 2, D_B), ("r", 0, 1, True), ("r", 1, 2, True))
    res = check_linearizable(h)
    assert res.status == "violation"
    assert res.prefix_len == 4


def test_double_delete_with_one_invalid_cursor_is_fine():
    h = hist(one_item_two_cursors(), ("i", 0, 1, D_A), ("i", 1, 2, D_B), ("r", 1, 2, True), ("r", 0, 1, INVALID_CURSOR))
    res = check_linearizable(h)
    assert res.ok and res.witness == [2, 1]
    state, resp = replay_witness(h, res.witness)
    assert resp == {2: True, 1: INVALID_CURSOR}
    assert sm.traverse(state) == [EOL]


def test_real_time_order_is_respected():
    g = ("get", "b")
    # get(b) completes before delete(a) starts, so it cannot see the delete
    h = hist(one_item_two_cursors(), ("i", 1, 1, g), ("r", 1, 1, INVALID_CURSOR), ("i", 0, 2, D_A), ("r", 0, 2, True))
    assert check_linearizable(h).status == "violation"
    h = hist(one_item_two_cursors(), ("i", 0, 2, D_A), ("r", 0, 2, True), ("i", 1, 1, g), ("r", 1, 1, INVALID_CURSOR))
    assert check_linearizable(h).ok


def test_pending_operation_may_take_effect_or_not():
    s = one_item_two_cursors()
    took = hist(s, ("i", 0, 1, D_A), ("i", 1, 2, ("get", "b")), ("r", 1, 2, INVALID_CURSOR))
    skipped = hist(s, ("i", 0, 1, D_A), ("i", 1, 2, ("get", "b")), ("r", 1, 2, 5))
    assert check_linearizable(took).ok
    assert check_linearizable(skipped).ok


def test_responses_compare_by_type():
    s, _ = sm.apply_op(sm.INITIAL, ("createCursor", "a"), 0)
    s, _ = sm.apply_op(s, ("insertBefore", "a", 1), 0)
    s, _ = sm.apply_op(s, ("moveLeft", "a"), 0)
    h = hist(s, ("i", 0, 1, ("get", "a")), ("r", 0, 1, True))  # value 1 is not the boolean True
    assert check_linearizable(h).status == "violation"


def test_budget_exhaustion_is_inconclusive():
    h = record_stress_history(5)
    assert check_linearizable(h, budget=1).status in ("inconclusive", "ok")
    s = one_item_two_cursors()
    h = hist(s, ("i", 0, 1, D_A), ("i", 1, 2, D_B), ("r", 0, 1, True), ("r", 1, 2, True))
    assert check_linearizable(h, budget=1).status == "inconclusive"


def test_shortest_bad_prefix():
    s = one_item_two_cursors()
    h = hist(
        s,
        ("i", 0, 1, D_A),
        ("r", 0, 1, True),
        ("i", 1, 2, ("get", "b")),
        ("r", 1, 2, 5),
        ("i", 0, 3, ("get", "a")),
        ("r", 0, 3, EOL),
    )
    res = check_linearizable(h)
    assert res.status == "violation" and res.prefix_len == 4


def test_jsonl_round_trip_and_well_formedness():
    h = record_stress_history(11)
    back = History.from_jsonl(h.to_jsonl())
    assert back.events == h.events and back.initial == h.initial
    assert back.well_formed()
    bad = hist(one_item_two_cursors(), ("i", 0, 1, D_A), ("i", 0, 2, D_A))
    assert not bad.well_formed()
    for line in h.to_jsonl().splitlines():
        json.loads(line)


def test_recorder_keeps_one_global_order():
    rec = Recorder()
    res, (inv, resp) = rec.record(0, ("get", "a"), lambda: 42)
    assert res == 42 and inv.seq == 0 and resp.seq == 1
    assert rec.history.operations()[0].response == 42


def test_stress_histories_linearize():
    for seed in range(40):
        h = record_stress_history(seed)
        assert h.well_formed()
        assert len(h.events) <= 40
        res = check_linearizable(h)
        assert res.ok, (seed, res)
