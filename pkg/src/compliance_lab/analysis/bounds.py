"""Closed-form compliance bounds and helper formulas.

Negligible terms are taken as exactly zero throughout.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import DomainError

_FLOOR_SLACK = 1e-9  # absorbs float noise like sqrt(9.000000000000002)


def _prob(name: str, x: float) -> None:
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"{name} must lie in [0,1], got {x}")


def reward_proportional_slack(alpha: float, xi_mu, R_total: float) -> float:
    """Compliance slack of resource-proportional rewards under Reward utility."""
    _prob("alpha", alpha)
    return alpha * max(xi_mu) * R_total


@dataclass(frozen=True)
class AbstainBound:
    eps_max: float
    precondition_ok: bool
    violations: tuple[int, ...]  # parties with C_i <= beta_i * xi_i * R * q


def abstain_profit_slack(C, beta, alpha: float, xi_mu, R_total: float, q: float = 1.0) -> AbstainBound:
    """Largest eps for which always-abstaining still beats honest profit.

    Per party: C_i - (beta_i - alpha) * xi(mu_i) * R, maximised over parties.
    """
    C, beta, xi = (np.atleast_1d(np.asarray(v, dtype=float)) for v in (C, beta, xi_mu))
    _prob("alpha", alpha)
    for b in beta:
        _prob("beta", b)
    vals = C - (beta - alpha) * xi * R_total
    bad = tuple(int(i) for i in np.flatnonzero(~(C > beta * xi * R_total * q)))
    return AbstainBound(float(vals.max()), not bad, bad)


def sl_pos_abstain_gain(mu: float, N: int, C: float, R: float) -> float:
    """Abstaining gain of the largest party in identity-xi SL-PoS: mu*N*C - mu^(N+1)*R.

    Works on Fractions as well as floats, so exact inputs give an exact result.
    """
    _prob("mu", float(mu))
    return mu * N * C - mu ** (N + 1) * R


def bitcoin_reward_gain_bound(N: int, R: float, q: int, delta: float) -> float:
    """Upper bound on any Bitcoin deviation's reward gain: N R q^2 delta^2 / 2."""
    if delta * q >= 1:
        warnings.warn(f"delta*q = {delta * q} >= 1; the bound assumes delta*q < 1", stacklevel=2)
    return N * R * q * q * delta * delta / 2


def conflict_reward_gain(d: float, R: float, s_P: float, t: int) -> float:
    """Expected extra reward from signing t conflicting blocks per led slot under drop rate d."""
    return (d - d ** t) * R * s_P


def conflict_profit_gain(d: float, R: float, C: float, s_P: float, t: int) -> float:
    return ((d - d ** t) * R - (t - 1) * C) * s_P


@dataclass(frozen=True)
class ConflictBound:
    t_star: int
    eps_reward: float
    eps_profit: float
    ratio: float | None = None
    warning: str | None = None


def lossy_conflict_bound(d: float, R: float, C: float, s_P: float, ratio_threshold: float = 10.0) -> ConflictBound:
    """Single-leader PoS behind a lossy router.

    t* maximises the profit gain of t conflicting blocks; eps_reward is the
    supremum d*R*s_P of the reward gain as t grows.
    """
    if not 0.0 < d < 1.0:
        raise DomainError(f"drop probability must lie in (0,1), got {d}")
    if R <= 0 or C <= 0:
        raise DomainError("R and C must be positive")
    ratio = (1 - d) * R / C
    warning = None
    if ratio < ratio_threshold:
        warning = f"(1-d)R/C = {ratio:.3g} is below {ratio_threshold:g}; the optimum formula may be loose"
    t = math.floor(math.log(C / (R * math.log(1 / d))) / math.log(d) + _FLOOR_SLACK)
    t = max(t, 1)
    return ConflictBound(t, d * R * s_P, conflict_profit_gain(d, R, C, s_P, t), ratio, warning)


def race_profit_gain(p_l: float, R: float, C: float, s_P: float, t: int) -> float:
    return ((t - 1) / (2 * (t + 1)) * p_l * R - (t - 1) * C) * s_P


def race_conflict_bound(p_l: float, R: float, C: float, s_P: float) -> ConflictBound:
    """Multi-leader PoS with random delivery order."""
    _prob("p_l", p_l)
    if R <= 0 or C <= 0:
        raise DomainError("R and C must be positive")
    t = max(math.floor(math.sqrt(p_l * R / C) + _FLOOR_SLACK) - 1, 1)
    return ConflictBound(t, p_l / 2 * R * s_P, race_profit_gain(p_l, R, C, s_P, t))


def selfish_discard_rate(mu: float) -> float:
    """Expected blocks discarded per 7 slots by depth <= 3 selfish signing, closed form."""
    a, b = mu, 1 - mu
    return 5 * b * a ** 2 + 6 * b ** 2 * a ** 3 + 3 * b ** 2 * a ** 4 + 3 * b ** 3 * a ** 4


def selfish_signing_gain(mu: float, R: float, C: float) -> float:
    """Relative-profit gain of selfish signing in predictable SL-PoS."""
    if not 0.0 < mu < 1.0:
        raise DomainError(f"mu must lie in (0,1), got {mu}")
    if R <= 0 or C > R:
        raise DomainError("needs R > 0 and C <= R")
    return mu / (7 / selfish_discard_rate(mu) - 1) * (R - C) / R


def externality_slack(rho, x_honest: float, x_dev, b_dev) -> float:
    """max(max over parties and deviations of rho*(x_S - x_honest) + b_S, 0).

    `rho` is per party; `x_dev` and `b_dev` broadcast to (parties, deviations).
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    x = np.asarray(x_dev, dtype=float)
    b = np.asarray(b_dev, dtype=float)
    x, b = np.broadcast_arrays(np.atleast_2d(x), np.atleast_2d(b))
    if x.shape[0] == 1 and len(rho) > 1:
        x = np.repeat(x, len(rho), axis=0)
        b = np.repeat(b, len(rho), axis=0)
    vals = rho[:, None] * (x - x_honest) + b
    return max(float(vals.max()), 0.0)


@dataclass(frozen=True)
class PenaltyBound:
    eps_max: float
    deposit_needed: float


def penalty_slack(rho, x_honest: float, b_dev) -> PenaltyBound:
    """Penalty setting: the deviator forfeits rewards and deposit but keeps b.

    Also reports the deposit g that brings the bound to zero,
    g >= (b - rho*x)/x.
    """
    rho = np.atleast_1d(np.asarray(rho, dtype=float))
    b = np.atleast_2d(np.asarray(b_dev, dtype=float))
    if b.shape[0] == 1 and len(rho) > 1:
        b = np.repeat(b, len(rho), axis=0)
    vals = b - (rho * x_honest)[:, None]
    eps = max(float(vals.max()), 0.0)
    if x_honest <= 0:
        raise DomainError("exchange rate must be positive")
    return PenaltyBound(eps, eps / x_honest)


def confirmation_window(v_tx: float, x: float, d: float, R: float) -> int:
    """Smallest integer k with k > v / ((2x - 1)/x * (d + R)).

    x is the honest share of participation and must exceed one half.
    """
    if not 0.5 < x <= 1.0:
        raise DomainError(f"participation share must lie in (0.5, 1], got {x}")
    if d + R <= 0:
        raise DomainError("deposit plus reward per slot must be positive")
    v, xf, df, rf = (Fraction(t) for t in (v_tx, x, d, R))
    bound = v * xf / ((2 * xf - 1) * (df + rf))
    return math.floor(bound) + 1
