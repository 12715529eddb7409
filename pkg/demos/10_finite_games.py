"""
Nash equilibria and trivial cones in small games
================================================

Strategy 0 plays the honest role. The honest profile is an eps-Nash
equilibrium exactly when best-response dynamics cannot leave it.
"""
import numpy as np

from compliance_lab.analysis.games import (coordination_game, cone, is_eps_nash, nash_iff_trivial_cone,
                                           prisoners_dilemma, random_game)

for name, g in (("coordination", coordination_game()), ("prisoner's dilemma", prisoners_dilemma())):
    for eps in (0.0, 2.5):
        root = (0,) * g.n_players
        print(f"{name:20} eps={eps}: nash={is_eps_nash(g, root, eps)} cone={sorted(cone(g, eps))}")

rng = np.random.default_rng(0)
bad = sum(not nash_iff_trivial_cone(random_game(rng), float(rng.choice([0, 1, 3]))) for _ in range(1000))
print("counterexamples in 1000 random games:", bad)
