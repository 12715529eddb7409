"""
Leader election and proof-of-work success rates
===============================================

Closed forms next to quick Monte Carlo checks.
"""
import numpy as np

from compliance_lab.protocols import (Family, ProtocolSpec, draw_leader_schedule, p_multi_leader,
                                      p_unique_success)

rng = np.random.default_rng(3)

# single leader: each slot has exactly one leader, drawn by stake
sched = draw_leader_schedule(ProtocolSpec(Family.SLPoS), (0.2, 0.3, 0.5), rng, 10_000)
counts = np.bincount([s[0] for s in sched.per_slot], minlength=3)
print("SL-PoS leadership shares", counts / counts.sum())

# multi leader: each party leads independently with its own probability
phi = (0.1, 0.2, 0.3)
sched = draw_leader_schedule(ProtocolSpec(Family.MLPoS, phi=phi), (0.2, 0.3, 0.5), rng, 20_000)
multi = np.mean([len(s) > 1 for s in sched.per_slot])
print(f"P(two or more leaders): closed form {p_multi_leader(phi):.4f}, sampled {multi:.4f}")

# proof of work: chance that only this party finds a block in a slot
mu, q, delta = 0.3, 10, 0.01
print(f"P(unique success) for mu={mu}: {p_unique_success(mu, q, delta):.5f}")
