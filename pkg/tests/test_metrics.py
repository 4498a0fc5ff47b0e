import random

from nbdll.core import ListHandle
from nbdll.memory import TracedMemory
from nbdll.metrics import (
    DELTA_TABLE,
    OpStats,
    Potential,
    StatsAccumulator,
    check_delta,
    reachable_nodes,
    real_node,
    sweep_invariants,
    verify_step_bound,
)


def traced_list(values):
    lst = ListHandle(TracedMemory(), instrument=True)
    c = lst.create_cursor("fill")
    for v in values:
        lst.insert_before(c, v)
    return lst, c


def test_units_and_bound_terms():
    upd = OpStats("insertBefore", attempts=3, uc_iterations=2, c_dot=4)
    mv = OpStats("moveRight", attempts=1, uc_iterations=1)
    assert upd.units == 5 and mv.units == 2
    r = verify_step_bound([upd, mv], k=1)
    assert (r.units, r.bound_terms) == (7, 6)
    assert not r.ok
    assert verify_step_bound([upd, mv], k=2).ok


def test_accumulator_matches_record_list():
    rng = random.Random(0)
    recs = [
        OpStats(rng.choice(["insertBefore", "delete", "moveLeft", "get"]), attempts=rng.randrange(1, 4),
                uc_iterations=rng.randrange(3), c_dot=rng.randrange(1, 5))
        for _ in range(200)
    ]
    a, b = StatsAccumulator(), StatsAccumulator()
    for r in recs[:100]:
        a.add(r)
    for r in recs[100:]:
        b.add(r)
    a.merge(b)
    want = verify_step_bound(recs)
    got = a.step_bound()
    assert (got.units, got.bound_terms) == (want.units, want.bound_terms)
    assert sum(a.ops.values()) == 200


def test_sweep_clean_after_sequential_updates():
    lst, c = traced_list([1, 2, 3, 4])
    rng = random.Random(3)
    for _ in range(60):
        op = rng.choice(["ins", "del", "l", "r"])
        if op == "ins":
            lst.insert_before(c, 0)
        elif op == "del":
            lst.delete(c)
        elif op == "l":
            lst.move_left(c)
        else:
            lst.move_right(c)
        assert sweep_invariants(lst, [c]) == []


def test_real_node_follows_copies_and_deletes():
    lst, c = traced_list([1, 2])
    lst.move_left(c)
    lst.move_left(c)
    old = c.node  # the node holding 1
    lst.insert_before(c, 0)  # replaces the node holding 1 by a copy
    reach = reachable_nodes(lst)
    assert old not in reach
    rn, _ = real_node(old, reach)
    assert rn in reach and rn.val == 1


def test_delta_table_checks():
    assert check_delta("hop", Potential(-1, 0, 0), 1) == []
    assert check_delta("hop", Potential(0, 0, 0), 1)
    assert check_delta("fwd.ok", Potential(1, 63 * 3, 6), 3) == []
    assert check_delta("fwd.ok", Potential(1, 63 * 3 + 1, 6), 3)
    assert check_delta("flag.first.fail", Potential(0, -1, 0), 1) == []
    assert check_delta("ci.status.inprog", Potential(0, 0, 0), 1)
    assert all(len(row) == 3 for row in DELTA_TABLE.values())
