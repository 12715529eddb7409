import pytest

from compliance_lab.economics import FixedPerBlock
from compliance_lab.execution import SYNCHRONOUS, ExecutionConfig
from compliance_lab.protocols import Family, ProtocolSpec


def pos_config(powers=(0.4, 0.6), n_slots=30, router=SYNCHRONOUS, family=Family.SLPoS, R=1.0,
               utility="Reward", query_cost=0.0, predictable=False, phi=(), scheme=None):
    return ExecutionConfig(tuple(powers), ProtocolSpec(family, 0, 0.0, None, tuple(phi), predictable),
                           n_slots, router, scheme=scheme or FixedPerBlock(R), utility=utility,
                           query_cost=query_cost)


def pow_config(powers=(0.3, 0.7), q=10, delta=0.05, n_slots=50, router=SYNCHRONOUS, R=1.0,
               utility="Reward", query_cost=0.0):
    return ExecutionConfig(tuple(powers), ProtocolSpec(Family.BitcoinPoW, q, delta), n_slots, router,
                           scheme=FixedPerBlock(R), utility=utility, query_cost=query_cost)


@pytest.fixture
def sl_pos():
    return pos_config()


@pytest.fixture
def bitcoin():
    return pow_config()


# acceptance lines collected by test_acceptance.py and echoed at the end of the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
