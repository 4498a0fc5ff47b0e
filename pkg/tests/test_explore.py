from math import factorial

from nbdll.explore import Bounds, CellWorld, explore
from nbdll.memory import CAS, READ, WRITE


def reader(n):
    def prog(cells):
        for _ in range(n):
            yield (READ, cells["x"], None, None, "r", None)
        return n

    return prog


def racer(tag):
    def prog(cells):
        ok = yield (CAS, cells["x"], "v", tag, "c", None)
        return ok

    return prog


def incrementer(cells):
    v = yield (READ, cells["x"], None, None, "r", None)
    yield (WRITE, cells["x"], v + 1, None, "w", None)


def multinomial(*ks):
    out = factorial(sum(ks))
    for k in ks:
        out //= factorial(k)
    return out


def test_stateless_visits_every_interleaving_once():
    for ks in [(2, 2), (2, 1, 1), (3, 2)]:
        rep = explore(lambda ks=ks: CellWorld({"x": 0}, [reader(k) for k in ks]), stateful=False)
        assert rep.ok
        assert rep.schedules == multinomial(*ks)


def test_stateful_merges_commuting_reads():
    rep = explore(lambda: CellWorld({"x": 0}, [reader(2), reader(2)]))
    assert rep.ok
    assert rep.terminals == 1
    assert rep.states == 9  # (i, j) progress pairs


def test_cas_race_has_exactly_one_winner():
    for stateful in (True, False):
        rep = explore(lambda: CellWorld({"x": "v"}, [racer("w1"), racer("w2")]), stateful=stateful)
        assert rep.ok
        results = [tuple(o["results"]) for o in map(eval_outcome, rep.outcomes)]
        assert results and all(sorted(r) == [False, True] for r in results)


def eval_outcome(key):
    import json

    return json.loads(key)


def test_lost_update_is_found_and_replayable():
    def check(w):
        if all(th.done for th in w.threads) and w.cells["x"].value != 2:
            return ["lost update"]
        return []

    factory = lambda: CellWorld({"x": 0}, [incrementer, incrementer], check)  # noqa: E731
    rep = explore(factory, stateful=False)
    assert rep.status == "violation"
    v = rep.violations[0]
    w = factory()
    for t in v.schedule:
        w.step(t, observe=False)
    assert w.cells["x"].value == 1
    assert len(v.trace) == len(v.schedule) == 4


def test_outcomes_agree_between_modes():
    mk = lambda: CellWorld({"x": 0}, [incrementer, incrementer, reader(1)])  # noqa: E731
    a = explore(mk, stateful=True)
    b = explore(mk, stateful=False)
    assert set(a.outcomes) == set(b.outcomes)
    assert b.schedules == multinomial(2, 2, 1)


def test_preemption_bound_zero_runs_threads_back_to_back():
    rep = explore(lambda: CellWorld({"x": 0}, [reader(2), reader(2), reader(1)]), Bounds(max_preemptions=0), stateful=False)
    assert rep.schedules == 6


def test_bound_exhaustion_is_not_a_violation():
    rep = explore(lambda: CellWorld({"x": 0}, [reader(3), reader(3)]), Bounds(max_states=4))
    assert rep.status == "bound-exhausted" and not rep.violations
    rep = explore(lambda: CellWorld({"x": 0}, [reader(2), reader(2)]), Bounds(max_schedules=6), stateful=False)
    assert rep.status == "ok" and rep.schedules == 6
    rep = explore(lambda: CellWorld({"x": 0}, [reader(2), reader(2)]), Bounds(max_schedules=5), stateful=False)
    assert rep.status == "bound-exhausted"


def test_report_json_round_trips():
    import json

    rep = explore(lambda: CellWorld({"x": "v"}, [racer("a"), racer("b")]))
    d = json.loads(rep.dumps())
    assert d["status"] == "ok" and d["terminals"] == rep.terminals
