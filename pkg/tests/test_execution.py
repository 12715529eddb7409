import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compliance_lab.errors import MalformedConfig, StrategyArityMismatch
from compliance_lab.execution import (SYNCHRONOUS, UNIFORM, ExecutionConfig, Oracle, RouterKind, RouterSpec,
                                      derive_seed, lossy, route_deliver, run_execution)
from compliance_lab.ledger import OBSERVER, observer_output
from compliance_lab.protocols import Family, ProtocolSpec
from compliance_lab.strategies import ABSTAIN_ALWAYS, HONEST, conflict

from conftest import pos_config, pow_config


def test_powers_must_sum_to_one():
    with pytest.raises(MalformedConfig) as exc:
        ExecutionConfig((0.5, 0.6), ProtocolSpec(Family.SLPoS), 10)
    assert exc.value.field == "parties"


def test_pow_budgets_must_be_integral():
    with pytest.raises(MalformedConfig):
        pow_config(powers=(0.25, 0.75), q=10)


def test_router_validation():
    with pytest.raises(MalformedConfig):
        RouterSpec(RouterKind.Lossy, 1.5)
    assert lossy(0.2).drop_probability == 0.2


def test_profile_arity_checked(sl_pos):
    with pytest.raises(StrategyArityMismatch):
        run_execution(sl_pos, (HONEST,), 0)


def test_same_seed_same_trace(bitcoin):
    a = run_execution(bitcoin, (HONEST, HONEST), 11)
    b = run_execution(bitcoin, (HONEST, HONEST), 11)
    c = run_execution(bitcoin, (HONEST, HONEST), 12)
    assert a.to_jsonl() == b.to_jsonl()
    assert a.to_jsonl() != c.to_jsonl()


def test_trace_is_read_only(sl_pos):
    t = run_execution(sl_pos, (HONEST, HONEST), 0)
    with pytest.raises(ValueError):
        t.queries[0, 0] = 5


def test_synchronous_views_agree_with_observer(sl_pos):
    t = run_execution(sl_pos, (HONEST, HONEST), 4)
    out = observer_output(t)
    assert out.length == sl_pos.n_slots  # one leader per slot, nothing lost
    assert sum(out.counts) == sl_pos.n_slots
    # views are built only from deliveries: parties miss the last slot's block
    last = t.blocks[-1].hash
    for v in t.views:
        assert last not in v.block_ids()
    assert last in t.observer_ids
    assert set(t.deliveries[sl_pos.n_slots + 1]) == {OBSERVER}


def test_every_block_is_valid(bitcoin):
    from compliance_lab.ledger import validate_block
    t = run_execution(bitcoin, (HONEST, HONEST), 2)
    assert t.blocks
    assert all(validate_block(b, t.oracle) for b in t.blocks)


def test_oracle_outcome_independent_of_interleaving(bitcoin):
    # coins are fixed per (slot, party, ordinal), so query order does not matter
    o1, o2 = Oracle(bitcoin, 9, None), Oracle(bitcoin, 9, None)
    r = 3
    a = [o1.query(r, 0).success for _ in range(3)] + [o1.query(r, 1).success for _ in range(7)]
    b_party1 = [o2.query(r, 1).success for _ in range(7)]
    b_party0 = [o2.query(r, 0).success for _ in range(3)]
    assert a == b_party0 + b_party1


def test_oracle_budget_enforced(bitcoin):
    from compliance_lab.errors import BudgetExhausted
    o = Oracle(bitcoin, 0, None)
    o.query_many(1, 0, 3)
    with pytest.raises(BudgetExhausted):
        o.query(1, 0)


def test_lossy_router_all_or_nothing():
    msgs = [("m%d" % k, 0) for k in range(50)]
    out = route_deliver(lossy(0.5), msgs, np.random.default_rng(0), 4)
    assert all(lst == out[0] for lst in out)
    assert 0 < len(out[0]) < 50


def test_uniform_router_permutes_per_recipient():
    msgs = [(k, 0) for k in range(6)]
    out = route_deliver(UNIFORM, msgs, np.random.default_rng(1), 5)
    assert all(sorted(lst) == list(range(6)) for lst in out)
    assert len({lst for lst in out}) > 1


def test_synchronous_router_keeps_diffusion_order():
    msgs = [(k, k % 2) for k in range(5)]
    out = route_deliver(SYNCHRONOUS, msgs, np.random.default_rng(0), 3)
    assert out == [tuple(range(5))] * 3


def test_lossy_drop_rate_matches_d():
    cfg = pos_config(powers=(1.0,), n_slots=400, router=lossy(0.3))
    t = run_execution(cfg, (HONEST,), 5)
    assert observer_output(t).length == pytest.approx(280, abs=40)


def test_router_coins_shared_across_profiles():
    # the honest party's first message has the same drop coin whatever the
    # other party sends, so its delivered blocks do not change
    cfg = pos_config(powers=(0.5, 0.5), n_slots=60, router=lossy(0.5))
    a = run_execution(cfg, (HONEST, HONEST), 3)
    b = run_execution(cfg, (HONEST, conflict(3)), 3)
    assert a.schedule.per_slot == b.schedule.per_slot
    lead0 = [r for r in range(1, 61) if a.schedule.is_leader(0, r)]
    got_a = [any(x.creator == 0 and x.slot == r for x in a.observer_view.tree.blocks.values()) for r in lead0]
    got_b = [any(x.creator == 0 and x.slot == r for x in b.observer_view.tree.blocks.values()) for r in lead0]
    assert got_a == got_b


def test_abstainer_makes_no_queries(bitcoin):
    t = run_execution(bitcoin, (ABSTAIN_ALWAYS, HONEST), 0)
    assert t.queries[:, 0].sum() == 0
    assert (t.queries[:, 1] == 7).all()


def test_trace_jsonl_layout(sl_pos):
    import json
    t = run_execution(sl_pos, (HONEST, HONEST), 0)
    lines = [json.loads(x) for x in t.to_jsonl().splitlines()]
    assert lines[0]["type"] == "header"
    assert [x["slot"] for x in lines[1:]] == list(range(1, sl_pos.n_slots + 2))
    assert "blocks" not in lines[-1]


def test_derive_seed_distinct():
    seeds = {derive_seed(7, j) for j in range(1000)}
    assert len(seeds) == 1000
    assert derive_seed(7, 0) == derive_seed(7, 0)


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([Family.SLPoS, Family.BitcoinPoW]))
def test_honest_synchronous_chain_contains_every_block_in_order(seed, family):
    # under synchrony with PoS, or PoW with one party, nothing is ever orphaned
    cfg = pos_config(powers=(1.0,), n_slots=25) if family is Family.SLPoS else \
        pow_config(powers=(1.0,), q=4, delta=0.3, n_slots=25)
    t = run_execution(cfg, (HONEST,), seed)
    chain = observer_output(t).chain[1:]
    assert [b.hash for b in chain] == [b.hash for b in t.blocks]
