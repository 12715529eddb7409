"""Reward schemes, cost accounting and utility functions."""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from .errors import MalformedConfig, MissingEstimate, SchemeInvariantViolated
from .infractions import InfractionKind, eval_infraction
from .ledger import observer_output
from .strategies import Kind


@dataclass(frozen=True)
class ResourceProportional:
    """Total reward R split by xi(mu_P), paid whenever the execution produced a block.

    `xi=None` means the identity (each party gets its power share).
    """
    R_total: float
    xi: tuple[float, ...] | None = None

    def shares(self, powers) -> np.ndarray:
        xi = np.asarray(powers if self.xi is None else self.xi, dtype=float)
        if len(xi) != len(powers):
            raise SchemeInvariantViolated("one xi value per party")
        if abs(xi.sum() - 1.0) > 1e-9 or (xi < 0).any():
            raise SchemeInvariantViolated(f"xi values must be a distribution, got sum {xi.sum()}")
        return xi

    def rewards(self, trace, counts) -> np.ndarray:
        xi = self.shares(trace.config.powers)
        if not trace.blocks:
            return np.zeros(len(xi))
        return xi * self.R_total

    def to_json(self):
        return {"kind": "ResourceProportional", "R_total": self.R_total,
                "xi": None if self.xi is None else list(self.xi)}


@dataclass(frozen=True)
class FixedPerBlock:
    R: float

    def rewards(self, trace, counts) -> np.ndarray:
        return np.asarray(counts, dtype=float) * self.R

    def to_json(self):
        return {"kind": "FixedPerBlock", "R": self.R}


@dataclass(frozen=True)
class BlockProportional:
    """R_omega split in proportion to each party's share of the observer chain."""
    R_omega: float

    def rewards(self, trace, counts) -> np.ndarray:
        c = np.asarray(counts, dtype=float)
        total = c.sum()
        return np.zeros_like(c) if total == 0 else c / total * self.R_omega

    def to_json(self):
        return {"kind": "BlockProportional", "R_omega": self.R_omega}


@dataclass(frozen=True)
class PenaltyFixedPerBlock:
    """Fixed per-block reward plus a returned deposit, both forfeited on a conflict."""
    R: float
    deposit: float | tuple[float, ...] = 0.0

    def rewards(self, trace, counts) -> np.ndarray:
        n = len(counts)
        g = np.broadcast_to(np.asarray(self.deposit, dtype=float), (n,))
        out = np.asarray(counts, dtype=float) * self.R + g
        for i in range(n):
            if eval_infraction(InfractionKind.Conf, trace, i):
                out[i] = 0.0
        return out

    def to_json(self):
        dep = self.deposit if isinstance(self.deposit, (int, float)) else list(self.deposit)
        return {"kind": "PenaltyFixedPerBlock", "R": self.R, "deposit": dep}


def scheme_from_json(obj) -> object:
    kinds = {"ResourceProportional": ResourceProportional, "FixedPerBlock": FixedPerBlock,
             "BlockProportional": BlockProportional, "PenaltyFixedPerBlock": PenaltyFixedPerBlock}
    if not isinstance(obj, dict) or obj.get("kind") not in kinds:
        raise MalformedConfig(f"unknown reward scheme {obj!r}", "scheme.kind")
    args = {k: v for k, v in obj.items() if k != "kind"}
    if isinstance(args.get("xi"), list):
        args["xi"] = tuple(args["xi"])
    if isinstance(args.get("deposit"), list):
        args["deposit"] = tuple(args["deposit"])
    try:
        return kinds[obj["kind"]](**args)
    except TypeError as exc:
        raise MalformedConfig(str(exc), "scheme") from exc


def compute_rewards(scheme, trace, counts=None) -> np.ndarray:
    if counts is None:
        counts = observer_output(trace).counts
    return scheme.rewards(trace, counts)


def compute_cost(trace, query_cost: float) -> np.ndarray:
    return trace.queries.sum(axis=0).astype(float) * query_cost


class UtilityKind(enum.Enum):
    Reward = "Reward"
    Profit = "Profit"
    RelativeProfit = "RelativeProfit"
    ExternReward = "ExternReward"
    ExternProfit = "ExternProfit"


@dataclass(frozen=True)
class ExternalityModel:
    """Exchange rates per profile class and infraction-only external rewards.

    Profile class is 'honest' when every party plays an honest-equivalent
    strategy and 'deviant' otherwise, unless `by_profile` names the profile
    label explicitly. External reward b for (party, strategy label) is paid
    only in traces where that party commits one of `infractions`.
    """
    exchange_rate: dict = field(default_factory=lambda: {"honest": 1.0, "deviant": 1.0})
    external_reward: dict = field(default_factory=dict)
    by_profile: dict = field(default_factory=dict)
    infractions: tuple = (InfractionKind.Conf, InfractionKind.Abs, InfractionKind.Self)

    def rate(self, profile) -> float:
        label = profile_label(profile)
        if label in self.by_profile:
            return float(self.by_profile[label])
        honest = all(d.kind is Kind.Honest or (d.kind is Kind.ConflictT and d.t == 1) for d in profile)
        key = "honest" if honest else "deviant"
        if key not in self.exchange_rate:
            raise MissingEstimate(f"no exchange rate for profile class {key!r}")
        return float(self.exchange_rate[key])

    def external(self, trace, party: int) -> float:
        b = float(self.external_reward.get((party, str(trace.profile[party])), 0.0))
        if b and any(eval_infraction(k, trace, party) for k in self.infractions):
            return b
        return 0.0


def profile_label(profile) -> str:
    return "[" + ", ".join(str(d) for d in profile) + "]"


@dataclass
class Estimates:
    """Expected per-party quantities feeding a utility function."""
    reward: np.ndarray
    cost: np.ndarray | None = None
    total_reward: float | None = None
    exchange_rate: float | None = None
    external: np.ndarray | None = None


def utility(kind: UtilityKind | str, est: Estimates) -> np.ndarray:
    kind = UtilityKind(kind) if isinstance(kind, str) else kind
    r = np.asarray(est.reward, dtype=float)
    if kind is UtilityKind.Reward:
        return r
    if est.cost is None:
        raise MissingEstimate("cost estimate needed")
    c = np.asarray(est.cost, dtype=float)
    if kind is UtilityKind.Profit:
        return r - c
    if kind is UtilityKind.RelativeProfit:
        total = r.sum() if est.total_reward is None else est.total_reward
        return np.zeros_like(r) if total == 0 else (r - c) / total
    if est.exchange_rate is None:
        raise MissingEstimate("exchange rate needed")
    b = np.zeros_like(r) if est.external is None else np.asarray(est.external, dtype=float)
    out = r * est.exchange_rate + b
    return out if kind is UtilityKind.ExternReward else out - c


def utility_gradient(kind: UtilityKind, means: np.ndarray, x: float = 1.0) -> tuple[float, np.ndarray]:
    """Value and gradient of a utility as a function of mean features.

    Features are (reward, cost, external, total reward) of one party.
    """
    r, c, b, tot = means
    if kind is UtilityKind.Reward:
        return r, np.array([1.0, 0, 0, 0])
    if kind is UtilityKind.Profit:
        return r - c, np.array([1.0, -1.0, 0, 0])
    if kind is UtilityKind.ExternReward:
        return x * r + b, np.array([x, 0, 1.0, 0])
    if kind is UtilityKind.ExternProfit:
        return x * r + b - c, np.array([x, -1.0, 1.0, 0])
    if tot == 0:
        return 0.0, np.zeros(4)
    return (r - c) / tot, np.array([1 / tot, -1 / tot, 0, -(r - c) / tot ** 2])
