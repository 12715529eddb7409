"""Protocol families: honest behaviour and slot-leader schedules."""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass

import numpy as np

from .errors import FamilyMismatch, MalformedConfig


class Family(enum.Enum):
    BitcoinPoW = "BitcoinPoW"
    SLPoS = "SLPoS"
    MLPoS = "MLPoS"

    @property
    def is_pos(self) -> bool:
        return self is not Family.BitcoinPoW


@dataclass(frozen=True)
class ProtocolSpec:
    """Protocol parameters.

    `q` and `delta` only matter for PoW; `phi` (per-party election
    probability) only for multi-leader PoS. `epoch_length=None` means the
    whole execution is one epoch.
    """
    family: Family
    q: int = 0
    delta: float = 0.0
    epoch_length: int | None = None
    phi: tuple[float, ...] = ()
    predictable: bool = False

    def validate(self, n_parties: int, n_slots: int) -> None:
        if self.family is Family.BitcoinPoW:
            if self.q < 1:
                raise MalformedConfig("PoW needs q >= 1", "protocol.q")
            if not 0.0 <= self.delta <= 1.0:
                raise MalformedConfig("delta must be a probability", "protocol.delta")
        if self.family is Family.MLPoS:
            if len(self.phi) != n_parties:
                raise MalformedConfig("one election probability per party", "protocol.phi")
            if any(not 0.0 <= p <= 1.0 for p in self.phi):
                raise MalformedConfig("election probabilities must lie in [0,1]", "protocol.phi")
        if self.epoch_length is not None:
            if self.epoch_length < 1 or n_slots % self.epoch_length:
                raise MalformedConfig("slot count must be a whole number of epochs",
                                      "protocol.epoch_length")


def phi_from_power(powers, rate: float) -> tuple[float, ...]:
    """Election probabilities proportional to power, capped at 1."""
    return tuple(min(1.0, float(m) * rate) for m in powers)


def pow_budgets(powers, q: int) -> tuple[int, ...]:
    """Per-slot query budgets mu_P * q. Each must come out integral."""
    out = []
    for i, m in enumerate(powers):
        b = float(m) * q
        r = round(b)
        if abs(b - r) > 1e-9:
            raise MalformedConfig(f"power {m} times q={q} is not an integer budget",
                                  f"parties[{i}].power")
        out.append(int(r))
    if sum(out) != q:
        raise MalformedConfig("budgets must sum to q", "protocol.q")
    return tuple(out)


@dataclass(frozen=True)
class LeaderSchedule:
    per_slot: tuple[tuple[int, ...], ...]  # index r-1 holds the leaders of slot r
    n_parties: int
    epoch_length: int
    stake_snapshot: tuple[tuple[float, ...], ...] = ()

    @property
    def n_slots(self) -> int:
        return len(self.per_slot)

    def leaders(self, slot: int) -> tuple[int, ...]:
        return self.per_slot[slot - 1]

    def is_leader(self, party: int, slot: int) -> bool:
        return party in self.per_slot[slot - 1]

    def bits(self, party: int) -> str:
        return "".join("1" if party in s else "0" for s in self.per_slot)

    def epoch_bounds(self, slot: int) -> tuple[int, int]:
        start = (slot - 1) // self.epoch_length * self.epoch_length + 1
        return start, min(start + self.epoch_length - 1, self.n_slots)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["slot", "leader_ids"])
        for r, ls in enumerate(self.per_slot, start=1):
            w.writerow([r, " ".join(map(str, ls))])
        return buf.getvalue()


def draw_leader_schedule(spec: ProtocolSpec, powers, rng: np.random.Generator,
                         n_slots: int) -> LeaderSchedule:
    """Ideal, unbiasable leader election for every slot of the execution."""
    n = len(powers)
    ep = spec.epoch_length or n_slots
    if spec.family is Family.SLPoS:
        p = np.asarray(powers, dtype=float)
        draws = rng.choice(n, size=n_slots, p=p / p.sum())
        per_slot = tuple((int(i),) for i in draws)
    elif spec.family is Family.MLPoS:
        coins = rng.random((n_slots, n)) < np.asarray(spec.phi, dtype=float)
        per_slot = tuple(tuple(int(i) for i in np.flatnonzero(row)) for row in coins)
    else:
        raise FamilyMismatch("leader schedules exist only for PoS families")
    snap = tuple(tuple(float(m) for m in powers) for _ in range(math.ceil(n_slots / ep)))
    return LeaderSchedule(per_slot, n, ep, snap)


def p_multi_leader(spec_or_phi) -> float:
    """Probability that two or more parties lead the same slot."""
    if isinstance(spec_or_phi, ProtocolSpec):
        if spec_or_phi.family is not Family.MLPoS:
            raise FamilyMismatch("p_multi_leader needs a multi-leader PoS spec")
        phi = spec_or_phi.phi
    else:
        phi = tuple(spec_or_phi)
    # running distribution of the leader count truncated at two; no
    # subtraction, so a lone party gives exactly zero
    none, one, many = 1.0, 0.0, 0.0
    for p in phi:
        none, one, many = none * (1 - p), one * (1 - p) + none * p, many + one * p
    return many


def p_co_leader(phi, party: int) -> float:
    """Probability that some other party also leads, given `party` leads."""
    return 1.0 - math.prod(1.0 - p for j, p in enumerate(phi) if j != party)


def p_unique_success(mu: float, q: int, delta: float) -> float:
    """Probability that a PoW party with power mu is the only successful one in a slot."""
    return (1.0 - delta) ** ((1.0 - mu) * q) - (1.0 - delta) ** q


def honest_step(family: Family, ctx) -> list:
    """Honest protocol action for one party in one slot.

    PoW spends the whole budget and chains every success on top of the
    previous one. PoS leaders sign one block on the adopted tip; others idle.
    """
    made = []
    if family is Family.BitcoinPoW:
        hits = ctx.query_many(ctx.budget)
        parent = ctx.view.tip_block
        for tok in hits:
            parent = ctx.build(parent, tok)
            made.append(parent)
    elif ctx.is_leader:
        tok = ctx.query()
        made.append(ctx.build(ctx.view.tip_block, tok))
    for b in made:
        ctx.diffuse(b)
    return made
