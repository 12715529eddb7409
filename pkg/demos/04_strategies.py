"""
Deviating strategies
====================

Descriptors, the selfish-signing planner and a conflicting signer.
"""
from compliance_lab import ExecutionConfig, Family, ProtocolSpec, parse_descriptor, run_execution
from compliance_lab.strategies import HONEST, SELFISH_SIGN, conflict, plan_selfish, plan_selfish_d_le_3

# descriptors round-trip through their short string form
for text in ("Honest", "ConflictT(3)", "AbstainSchedule(1-10 20)", "SelfishSign"):
    d = parse_descriptor(text)
    print(f"{text!r:30} -> {d}")

# planner output: (slot to fork from, depth) for a leadership bit string
schedule = "0110110001111"
print("full planner   ", plan_selfish(schedule).pairs)
print("depth <= 3     ", plan_selfish_d_le_3(schedule).pairs)

# a leader signing three siblings per led slot
cfg = ExecutionConfig((0.5, 0.5), ProtocolSpec(Family.SLPoS), 10)
trace = run_execution(cfg, (conflict(3), HONEST), seed=4)
per_slot = {}
for b in trace.blocks:
    if b.creator == 0:
        per_slot[b.slot] = per_slot.get(b.slot, 0) + 1
print("blocks signed by party 0 per led slot:", per_slot)

# selfish signing needs a predictable schedule
cfg = ExecutionConfig((0.3, 0.7), ProtocolSpec(Family.SLPoS, predictable=True), 28)
trace = run_execution(cfg, (SELFISH_SIGN, HONEST), seed=5)
print("attacker schedule", trace.schedule.bits(0))
print("attacker forks at", plan_selfish(trace.schedule.bits(0)).pairs)
