"""
Exploring the cone of the honest profile
========================================

Under a lossy network a leader gains by signing several sibling blocks,
so best-response dynamics leave the honest profile.
"""
from compliance_lab import ExecutionConfig, Family, ProtocolSpec
from compliance_lab.analysis.bounds import lossy_conflict_bound
from compliance_lab.analysis.reachability import explore_cone
from compliance_lab.economics import FixedPerBlock
from compliance_lab.execution import lossy

d, R, C, N = 0.5, 100.0, 1.0, 30
cfg = ExecutionConfig((1.0,), ProtocolSpec(Family.SLPoS), N, lossy(d),
                      scheme=FixedPerBlock(R), utility="Reward", query_cost=C)
b = lossy_conflict_bound(d, R, C, N)
eps = 0.9 * (d - d ** b.t_star) * R * N
print(f"profit-optimal t = {b.t_star}, testing eps = {eps:.1f}")

res = explore_cone(cfg, ["Honest", "ConflictT(2)", "ConflictT(4)", "ConflictT(8)"], eps, runs=100, seed=7)
for profile, entry in res.profiles.items():
    print([str(p) for p in profile], "reached via", [[str(x) for x in q] for q in entry.path])
for kind, (verdict, path) in res.verdicts.items():
    print(kind.value, verdict)
