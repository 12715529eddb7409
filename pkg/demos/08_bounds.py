"""
Closed-form bounds
==================

The calculators behind the simulation checks, evaluated on a few inputs.
"""
from fractions import Fraction

from compliance_lab.analysis.bounds import (bitcoin_reward_gain_bound, confirmation_window, lossy_conflict_bound,
                                            race_conflict_bound, selfish_discard_rate, selfish_signing_gain,
                                            sl_pos_abstain_gain)

print("discard rate per 7-slot window")
for mu in (0.1, 0.2, 0.3, 0.4, 0.5):
    print(f"  mu={mu}: {selfish_discard_rate(mu):.5f}  selfish gain (R=2, C=1) {selfish_signing_gain(mu, 2, 1):.5f}")

print("bitcoin reward gain bound, N=2000 q=10 delta=0.005:", bitcoin_reward_gain_bound(2000, 1, 10, 0.005))
print("lossy conflict, d=0.5 R=100 C=1:", lossy_conflict_bound(0.5, 100, 1, 50))
print("random-order race, p_l=0.09:", race_conflict_bound(0.09, 100, 1, 1).t_star)

# exact arithmetic with fractions
exact = sl_pos_abstain_gain(Fraction(2, 5), 20, 1, 10)
print(f"abstain gain, mu=2/5 N=20 C=1 R=10: {exact} = {float(exact):.12f}")
print("blocks to wait for a 1000-coin transaction:", confirmation_window(1000, 0.75, 5, 5))
