"""
One execution, slot by slot
===========================

Run two parties under single-leader proof of stake, then look at what the
observer saw, which blocks it kept and who gets credited.
"""
import json

from compliance_lab import ExecutionConfig, ProtocolSpec, Family, observer_output, run_execution
from compliance_lab.execution import lossy
from compliance_lab.strategies import HONEST

cfg = ExecutionConfig((0.4, 0.6), ProtocolSpec(Family.SLPoS), n_slots=12)
trace = run_execution(cfg, (HONEST, HONEST), seed=1)

# leaders come from a schedule drawn with the execution seed
print("party 0 leads:", trace.schedule.bits(0))
print("party 1 leads:", trace.schedule.bits(1))

out = observer_output(trace)
print("observer chain length", out.length, "blocks per party", out.counts)

# the trace serialises to one JSON object per slot, plus a header line
first = trace.to_jsonl().splitlines()[:3]
for line in first:
    print(json.loads(line))

# same seed, lossy network: dropped blocks never reach anyone, so the
# chain is shorter and honest leaders re-sign the missing heights
cfg_lossy = ExecutionConfig((0.4, 0.6), ProtocolSpec(Family.SLPoS), n_slots=12, router=lossy(0.5))
trace_lossy = run_execution(cfg_lossy, (HONEST, HONEST), seed=1)
print("lossy chain length", observer_output(trace_lossy).length, "of", len(trace_lossy.blocks), "blocks")
