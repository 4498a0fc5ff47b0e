import json
import random

import pytest

from nbdll.explore import Bounds
from nbdll.scenarios import CATALOG, SCENARIOS, model_outcomes, random_schedule, replay_on_atomic, run_scenario

SMALL = ["delete_vs_moveLeft", "insert_vs_moveRight", "disjoint_inserts", "create_vs_delete", "reset_vs_delete"]


def responses(outcomes):
    return {json.dumps(json.loads(o)["responses"]) for o in outcomes}


def test_catalog_shape():
    assert len(CATALOG) >= 12
    for sc in CATALOG:
        assert 2 <= len(sc.programs) <= 3
        assert all(len(p) <= 2 for p in sc.programs)
        assert len(sc.initial) <= 4


def test_model_outcomes_for_same_gap_race():
    got = responses(model_outcomes(SCENARIOS["insert_insert_same_gap"]))
    bad = {"marker": "invalidCursor"}
    assert got == {json.dumps([[True], [bad]]), json.dumps([[bad], [True]])}


@pytest.mark.parametrize("name", SMALL)
def test_small_scenarios_pass(name):
    r = run_scenario(SCENARIOS[name])
    assert r.ok, r.report.violations[:1]
    assert r.report.terminals > 0


@pytest.mark.parametrize("name", SMALL[:3])
def test_preemption_bounded_outcomes_are_a_subset(name):
    sc = SCENARIOS[name]
    full = run_scenario(sc)
    bounded = run_scenario(sc, Bounds(max_preemptions=1), stateful=False)
    assert bounded.report.ok
    assert set(bounded.report.outcomes) <= set(full.report.outcomes)


def test_state_bound_reported():
    r = run_scenario(SCENARIOS["delete_vs_moveLeft"], Bounds(max_states=10))
    assert r.report.status == "bound-exhausted" and not r.ok


@pytest.mark.parametrize("name", ["insert_insert_same_gap", "delete_delete_same_item", "delete_vs_moveLeft", "three_thread_same_item_mix"])
def test_atomic_replay_matches_deterministic_run(name):
    sc = SCENARIOS[name]
    rng = random.Random(name)
    for _ in range(15):
        schedule, outcome, msgs = random_schedule(sc, rng)
        assert not msgs
        assert replay_on_atomic(sc, schedule) == outcome


def test_broken_helping_is_caught(monkeypatch):
    """A variant that ignores failed flag CASes must not pass the suite."""
    from nbdll import core
    from nbdll.memory import CAS, READ, WRITE

    def careless_help(self, info, own=False):
        for i in range(3):
            yield (CAS, info.nodes[i].info, info.old_info[i], info, "help.flag", (info, i))
        y = info.nodes[1]
        if info.rmv:
            yield (WRITE, y.state, core.MARKED, None, "help.state", info)
        else:
            yield (WRITE, y.copy, info.new_prv, None, "help.copy", info)
            yield (WRITE, y.state, core.COPIED, None, "help.state", info)
        yield (CAS, info.nodes[0].nxt, y, info.new_nxt, "help.fwd", info)
        yield (CAS, info.nodes[2].prv, y, info.new_prv, "help.bwd", info)
        yield (WRITE, info.status, core.COMMITTED, None, "help.commit", info)
        st = yield (READ, info.status, None, None, "help.ret.own" if own else "help.ret", info)
        return st is core.COMMITTED

    monkeypatch.setattr(core.ListHandle, "gen_help", careless_help)
    r = run_scenario(SCENARIOS["delete_delete_same_item"], Bounds(max_states=50_000))
    assert not r.ok
    assert r.report.violations
