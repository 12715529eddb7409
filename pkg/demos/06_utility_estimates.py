"""
Monte Carlo utilities and paired differences
============================================

Estimate each party's utility over replicas and compare two profiles
under common random numbers.
"""
from compliance_lab import ExecutionConfig, Family, ProtocolSpec
from compliance_lab.analysis.montecarlo import estimate_utility, paired_difference
from compliance_lab.economics import FixedPerBlock
from compliance_lab.strategies import ABSTAIN_ALWAYS, HONEST, conflict

cfg = ExecutionConfig((0.4, 0.6), ProtocolSpec(Family.SLPoS), 50,
                      scheme=FixedPerBlock(2.0), utility="Profit", query_cost=1.0)

honest = estimate_utility(cfg, (HONEST, HONEST), runs=200, seed=11)
print("honest profit per party", honest.utility.round(3), "+/-", honest.utility_ci.round(3))

for dev in (conflict(2), ABSTAIN_ALWAYS):
    rep = estimate_utility(cfg, (dev, HONEST), runs=200, seed=11)
    diff, se = paired_difference(rep, honest, 0)
    print(f"{str(dev):14} gain for party 0: {diff:+.3f} (se {se:.3f})")

# other utility kinds reuse the same samples
print("reward utility", estimate_utility(cfg, (HONEST, HONEST), "Reward", 200, 11).utility.round(3))
