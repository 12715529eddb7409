import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compliance_lab.execution import lossy, run_execution
from compliance_lab.infractions import InfractionKind, eval_infraction, is_compliant_strategy, witness_jsonl
from compliance_lab.strategies import (ABSTAIN_ALWAYS, HONEST, PREFER_OWN_TIP, SELFISH_SIGN, abstain_schedule,
                                       conflict)

from conftest import pos_config, pow_config

K = InfractionKind


def _flags(trace, party):
    return {k: eval_infraction(k, trace, party) for k in (K.Conf, K.Abs, K.BC, K.Self)}


def test_conflict_trace_flags_conf(sl_pos):
    t = run_execution(sl_pos, (conflict(2), HONEST), 0)
    f = _flags(t, 0)
    assert f[K.Conf] == 1 and f[K.BC] == 1 and f[K.Abs] == 0
    assert _flags(t, 1) == {K.Conf: 0, K.Abs: 0, K.BC: 0, K.Self: 0}


def test_abstain_flags_abs_not_conf(sl_pos):
    t = run_execution(sl_pos, (ABSTAIN_ALWAYS, HONEST), 0)
    f = _flags(t, 0)
    assert f[K.Abs] == 1 and f[K.Conf] == 0 and f[K.BC] == 1


def test_pos_abstain_only_counts_led_slots():
    cfg = pos_config(powers=(0.5, 0.5), n_slots=20)
    t = run_execution(cfg, (HONEST, HONEST), 1)
    idle = [r for r in range(1, 21) if not t.schedule.is_leader(0, r)]
    t2 = run_execution(cfg, (abstain_schedule(idle), HONEST), 1)
    assert eval_infraction(K.Abs, t2, 0) == 0


def test_pow_abstain_any_slot(bitcoin):
    t = run_execution(bitcoin, (abstain_schedule([7]), HONEST), 0)
    assert eval_infraction(K.Abs, t, 0) == 1


def test_selfish_flags_self():
    cfg = pos_config(powers=(0.5, 0.5), n_slots=60, predictable=True)
    t = run_execution(cfg, (SELFISH_SIGN, HONEST), 0)
    assert eval_infraction(K.Self, t, 0) == 1
    assert eval_infraction(K.Conf, t, 0) == 0


def test_trivial_predicates(sl_pos):
    t = run_execution(sl_pos, (conflict(2), HONEST), 0)
    assert eval_infraction(K.AlwaysZero, t, 0) == 0
    assert eval_infraction(K.AllHonest, t, 0) == 1
    assert eval_infraction("AllHonest", t, 1) == 0


def test_compliance_sampling(sl_pos):
    v = is_compliant_strategy(conflict(2), "Conf", sl_pos, 100)
    assert not v.compliant and v.label == "InfractionFound"
    assert eval_infraction(K.Conf, v.witness, 0) == 1
    assert '"type":"infraction"' in witness_jsonl(v.witness, K.Conf, 0)
    v = is_compliant_strategy(ABSTAIN_ALWAYS, "Conf", sl_pos, 20)
    assert v.compliant and v.label == "CompliantOnSample" and v.samples == 20
    with pytest.raises(ValueError):
        is_compliant_strategy(HONEST, "Conf", sl_pos, 0)


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from(["sync-pos", "lossy-pos", "sync-pow", "lossy-pow"]))
def test_honest_never_infracts(seed, setup):
    # honest behaviour maps to 0 under every predicate, whatever the network
    router = lossy(0.4) if setup.startswith("lossy") else None
    if setup.endswith("pos"):
        cfg = pos_config(powers=(0.5, 0.5), n_slots=40, **({"router": router} if router else {}))
    else:
        cfg = pow_config(powers=(0.5, 0.5), q=4, delta=0.2, n_slots=40, **({"router": router} if router else {}))
    t = run_execution(cfg, (HONEST, HONEST), seed)
    for p in (0, 1):
        assert all(v == 0 for v in _flags(t, p).values())


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 2**32), st.sampled_from([conflict(2), ABSTAIN_ALWAYS, PREFER_OWN_TIP,
                                               abstain_schedule([1, 5, 9])]))
def test_bc_is_conf_or_abs(seed, desc):
    cfg = pow_config(powers=(0.5, 0.5), q=4, delta=0.2, n_slots=30)
    t = run_execution(cfg, (desc, HONEST), seed)
    assert eval_infraction(K.BC, t, 0) == (eval_infraction(K.Conf, t, 0) | eval_infraction(K.Abs, t, 0))
