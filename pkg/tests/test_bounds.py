import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compliance_lab.analysis.bounds import (abstain_profit_slack, bitcoin_reward_gain_bound, confirmation_window,
                                            conflict_profit_gain, externality_slack, lossy_conflict_bound,
                                            penalty_slack, race_conflict_bound, race_profit_gain,
                                            reward_proportional_slack, selfish_discard_rate, selfish_signing_gain,
                                            sl_pos_abstain_gain)
from compliance_lab.errors import DomainError

# published evaluation of the discard-rate polynomial, 5 decimal places
PUBLISHED_DISCARD_RATES = {0.05: 0.01258, 0.1: 0.05032, 0.15: 0.11228, 0.2: 0.19624, 0.25: 0.29864,
                           0.3: 0.41462, 0.35: 0.53819, 0.4: 0.66247, 0.45: 0.77994, 0.5: 0.88281}


def _oracle_discard_rate(mu):
    a, b = mu, 1 - mu
    return 5 * b * a ** 2 + 6 * b ** 2 * a ** 3 + 3 * b ** 2 * a ** 4 + 3 * b ** 3 * a ** 4


@pytest.mark.parametrize("mu", sorted(PUBLISHED_DISCARD_RATES))
def test_discard_rate_oracle(mu):
    assert selfish_discard_rate(mu) == pytest.approx(_oracle_discard_rate(mu), rel=1e-12)
    # published digits are truncated, not rounded
    assert math.floor(selfish_discard_rate(mu) * 1e5) / 1e5 == pytest.approx(PUBLISHED_DISCARD_RATES[mu], abs=1e-9)
    assert selfish_discard_rate(0.0) == 0.0


def test_reward_proportional_slack():
    assert reward_proportional_slack(0.0, [0.3, 0.7], 100) == 0.0
    assert reward_proportional_slack(0.01, [0.3, 0.7], 100) == pytest.approx(0.7)
    assert reward_proportional_slack(1.0, [1.0], 42.0) == 42.0
    with pytest.raises(DomainError):
        reward_proportional_slack(1.5, [1.0], 1.0)


def test_abstain_profit_slack():
    b = abstain_profit_slack([3.0, 5.0], [0.2, 0.2], 0.2, [0.5, 0.5], 10.0)
    assert b.eps_max == 5.0
    mu, N, C, R = 0.4, 100, 1.0, 10.0
    assert sl_pos_abstain_gain(mu, N, C, R) == pytest.approx(mu * N * C - mu ** (N + 1) * R, rel=1e-15)
    per_party = abstain_profit_slack([1.0], [mu ** N], 0.0, [mu], R)
    assert per_party.eps_max == pytest.approx(1.0 - 0.4 ** 101 * 10)
    bad = abstain_profit_slack([0.1], [1.0], 0.0, [0.5], 10.0)
    assert not bad.precondition_ok and bad.violations == (0,)
    with pytest.raises(DomainError):
        abstain_profit_slack([1.0], [1.5], 0.0, [0.5], 1.0)


def test_bitcoin_reward_gain_bound():
    assert bitcoin_reward_gain_bound(100, 1, 10, 0.0) == 0.0
    assert bitcoin_reward_gain_bound(10_000, 1, 10, 1e-3) == pytest.approx(0.5)
    assert bitcoin_reward_gain_bound(1_000, 2, 5, 0.02) == pytest.approx(10.0)
    assert bitcoin_reward_gain_bound(2_000, 1, 10, 0.005) == pytest.approx(2.5)
    with pytest.warns(UserWarning):
        bitcoin_reward_gain_bound(10, 1, 10, 0.2)


def test_lossy_conflict_bound():
    b = lossy_conflict_bound(0.5, 100, 1, 1)
    assert b.t_star == 6
    assert b.eps_reward == pytest.approx(50.0)
    assert b.eps_profit == pytest.approx((0.5 - 0.5 ** 6) * 100 - 5)
    assert b.warning is None
    assert lossy_conflict_bound(1e-9, 100, 1, 1).eps_reward == pytest.approx(0.0, abs=1e-6)
    assert lossy_conflict_bound(0.5, 10, 1, 1).warning is not None
    assert conflict_profit_gain(0.5, 100, 1, 1, 1) == 0.0
    with pytest.raises(DomainError):
        lossy_conflict_bound(1.0, 100, 1, 1)


def test_lossy_conflict_optimum_is_integer_argmax():
    for d, R, C in [(0.5, 100, 1), (0.2, 50, 1), (0.7, 1000, 3)]:
        b = lossy_conflict_bound(d, R, C, 1)
        best = max(range(1, 200), key=lambda t: conflict_profit_gain(d, R, C, 1, t))
        assert abs(b.t_star - best) <= 1


def test_race_conflict_bound():
    b = race_conflict_bound(0.09, 100, 1, 1)
    assert b.t_star == 2
    assert b.eps_reward == pytest.approx(4.5)
    assert b.eps_profit == pytest.approx(race_profit_gain(0.09, 100, 1, 1, 2))
    assert race_conflict_bound(0.0, 100, 1, 1).eps_reward == 0.0
    one = race_conflict_bound(0.01, 100, 1, 1)
    assert one.t_star == 1 and one.eps_profit == 0.0


def test_selfish_signing_gain():
    assert selfish_signing_gain(0.5, 2, 1) == pytest.approx(0.03608, abs=5e-6)
    assert selfish_signing_gain(0.5, 2, 2) == 0.0
    d = selfish_discard_rate(0.2)
    assert selfish_signing_gain(0.2, 2, 1) == pytest.approx(0.2 / (7 / d - 1) * 0.5)
    assert selfish_signing_gain(0.2, 2, 1) == pytest.approx(0.002881, abs=5e-6)
    with pytest.raises(DomainError):
        selfish_signing_gain(0.3, 1, 2)


def test_externality_and_penalty_slack():
    assert externality_slack([100], 1.0, [1.0], [0.0]) == 0.0
    assert externality_slack([100], 1.0, [0.9], [20.0]) == pytest.approx(10.0)
    assert externality_slack([100], 1.0, [0.5], [0.0]) == 0.0
    assert penalty_slack([100], 1.0, [0.0]).eps_max == 0.0
    p = penalty_slack([100], 1.0, [1000.0])
    assert p.eps_max == 900.0 and p.deposit_needed == 900.0
    assert penalty_slack([100], 1.0, [50.0]).eps_max == 0.0


def test_confirmation_window():
    assert confirmation_window(1000, 0.75, 5, 5) == 151
    assert confirmation_window(1000, 1.0, 5, 5) == 1000 // 10 + 1
    assert confirmation_window(0, 0.8, 5, 5) == 1
    with pytest.raises(DomainError):
        confirmation_window(1000, 0.5, 5, 5)


@settings(max_examples=200)
@given(st.floats(0.0, 1e6), st.floats(0.51, 1.0), st.floats(0.1, 100), st.floats(0.1, 100))
def test_confirmation_window_is_smallest_strict(v, x, d, R):
    k = confirmation_window(v, x, d, R)
    bound = v / ((2 * x - 1) / x * (d + R))
    assert k > bound - 1e-6 * max(1.0, bound)
    assert k - 1 <= bound + 1e-6 * max(1.0, bound)


@settings(max_examples=200)
@given(st.floats(0.0, 1.0))
def test_discard_rate_bounds(mu):
    assert 0.0 <= selfish_discard_rate(mu) <= 7.0


def test_no_warnings_in_normal_use():
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        bitcoin_reward_gain_bound(2000, 1, 10, 0.005)
