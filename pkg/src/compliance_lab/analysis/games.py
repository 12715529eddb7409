"""Explicit finite games: epsilon-Nash checks and exact cones.

Strategy 0 of every player plays the role of the honest protocol.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FiniteGame:
    payoffs: np.ndarray  # shape (players, s_1, ..., s_players)

    @property
    def n_players(self) -> int:
        return self.payoffs.shape[0]

    @property
    def sizes(self) -> tuple[int, ...]:
        return self.payoffs.shape[1:]

    def u(self, player: int, profile) -> float:
        return float(self.payoffs[(player, *profile)])

    def deviations(self, profile, player: int):
        for s in range(self.sizes[player]):
            yield s, tuple(profile[:player]) + (s,) + tuple(profile[player + 1:])


def random_game(rng: np.random.Generator, max_players: int = 3, max_strategies: int = 4,
                integer: bool = True) -> FiniteGame:
    players = int(rng.integers(2, max_players + 1))
    sizes = tuple(int(s) for s in rng.integers(2, max_strategies + 1, size=players))
    if integer:
        pay = rng.integers(0, 6, size=(players, *sizes)).astype(float)
    else:
        pay = rng.random((players, *sizes))
    return FiniteGame(pay)


def is_eps_nash(game: FiniteGame, profile, eps: float) -> bool:
    for i in range(game.n_players):
        base = game.u(i, profile)
        if any(game.u(i, q) > base + eps for _, q in game.deviations(profile, i)):
            return False
    return True


def direct_successors(game: FiniteGame, profile, eps: float) -> list[tuple]:
    """Profiles directly eps-reachable from `profile` (any best response counts)."""
    out = []
    for i in range(game.n_players):
        vals = [(game.u(i, q), s, q) for s, q in game.deviations(profile, i)]
        best = max(v for v, _, _ in vals)
        base = game.u(i, profile)
        for v, s, q in vals:
            if s != profile[i] and v == best and v > base + eps:
                out.append(q)
    return out


def cone(game: FiniteGame, eps: float) -> set[tuple]:
    root = (0,) * game.n_players
    seen = {root}
    queue = deque([root])
    while queue:
        p = queue.popleft()
        for q in direct_successors(game, p, eps):
            if q not in seen:
                seen.add(q)
                queue.append(q)
    return seen


def nash_iff_trivial_cone(game: FiniteGame, eps: float) -> bool:
    """The honest profile is an eps-Nash equilibrium iff its cone is just itself."""
    root = (0,) * game.n_players
    return is_eps_nash(game, root, eps) == (cone(game, eps) == {root})


def coordination_game() -> FiniteGame:
    a = np.array([[2.0, 0.0], [0.0, 1.0]])
    return FiniteGame(np.stack([a, a]))


def prisoners_dilemma() -> FiniteGame:
    # strategy 0 cooperates (the "honest" play) and is strictly dominated
    row = np.array([[3.0, 0.0], [5.0, 1.0]])
    return FiniteGame(np.stack([row, row.T]))
