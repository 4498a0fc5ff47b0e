"""
Every interleaving of a same-gap insert race
============================================

The deterministic backend runs the list one shared access at a time. The
explorer visits every interleaving of two insertBefore calls made through
cursors on the same item, checks invariants and the potential function at
each step, and checks each final history for linearizability.
"""

import json

from nbdll.lincheck import check_linearizable, record_stress_history
from nbdll.scenarios import SCENARIOS, run_scenario

sc = SCENARIOS["insert_insert_same_gap"]
print("initial list", sc.initial, "programs", sc.programs)

res = run_scenario(sc)
rep = res.report
print(f"{rep.states} states, {rep.transitions} transitions, {rep.terminals} terminal states")
print("status:", rep.status, "| outcomes match the model:", res.outcomes_match)
for key, n in sorted(rep.outcomes.items()):
    print(f"  {n:4d} x {json.loads(key)}")
print("largest units per bound term:", round(res.stats.max_ratio, 3))

# the same checker on a history recorded from real threads
h = record_stress_history(seed=1)
print(len(h.events), "events recorded;", check_linearizable(h).status)
