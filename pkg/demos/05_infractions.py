"""
Infraction predicates
=====================

Evaluate conflicting, abstaining and selfish behaviour on sampled traces.
"""
from compliance_lab import ExecutionConfig, Family, InfractionKind, ProtocolSpec, eval_infraction, run_execution
from compliance_lab.infractions import is_compliant_strategy
from compliance_lab.strategies import ABSTAIN_ALWAYS, HONEST, SELFISH_SIGN, conflict

cfg = ExecutionConfig((0.3, 0.7), ProtocolSpec(Family.SLPoS, predictable=True), 70)
kinds = (InfractionKind.Conf, InfractionKind.Abs, InfractionKind.BC, InfractionKind.Self)

for d in (HONEST, conflict(2), ABSTAIN_ALWAYS, SELFISH_SIGN):
    trace = run_execution(cfg, (d, HONEST), seed=6)
    flags = {k.value: eval_infraction(k, trace, 0) for k in kinds}
    print(f"{str(d):14}", flags)

# sampling-based compliance: a strategy passes only if no sampled trace infracts
v = is_compliant_strategy(conflict(2), "Conf", cfg, sample_count=20, seed=1)
print("ConflictT(2) conf-compliant on samples:", v.compliant, "after", v.samples, "runs")
