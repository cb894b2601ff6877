"""Build the two training curricula: congestion stages and sub-action stages.

Run:  python3 demos/03_curricula.py
"""
from tubeground.core import QueryRecord, SubActionPhrase
from tubeground.curriculum import CongestionRecord, cgs_stage_assignment, satcl_stage_assignment

# Spatial curriculum: crowded-in-time videos first.
records = [CongestionRecord("busy", 4, 1.0), CongestionRecord("mixed", 3, 0.75),
           CongestionRecord("some", 3, 0.5), CongestionRecord("sparse", 2, 0.1)]
plan = cgs_stage_assignment(records)
for k, members in plan.stages:
    print(f"spatial stage {k}: {members}")

# Temporal curriculum: short action phrases before long ones.
actions = ["puts down the pistol", "turns", "raises his hand", "talks"]
subs = {
    k: tuple(SubActionPhrase("The man " + " and ".join(actions[s:s + k]), tuple(range(s + 1, s + k + 1)))
             for s in range(len(actions) - k + 1))
    for k in range(1, len(actions) + 1)
}
query = QueryRecord("clip", "The man puts down the pistol, then turns and raises his hand and talks", "The man", subs)
plan = satcl_stage_assignment([query])
print()
for (k, members), added in zip(plan.stages, plan.additional_counts()):
    print(f"temporal stage {k}: {len(members)} phrases ({added} new)")
for phrase in subs[2]:
    print("  2-action phrase:", phrase.text)
