"""Simulator and analysis toolkit for compliance of blockchain protocols.

Parties run honest or deviating strategies over slotted executions; the
analysis layer estimates utilities, explores best-response cones and
evaluates closed-form compliance bounds.
"""
__version__ = "0.1.0"

from .errors import ComplianceLabError  # noqa: E402
from .execution import ExecutionConfig, RouterSpec, Trace, run_execution  # noqa: E402
from .infractions import InfractionKind, eval_infraction  # noqa: E402
from .ledger import ChainRule, observer_output, select_chain  # noqa: E402
from .protocols import Family, ProtocolSpec  # noqa: E402
from .strategies import StrategyDescriptor, parse_descriptor  # noqa: E402

__all__ = [
    "ChainRule", "ComplianceLabError", "ExecutionConfig", "Family", "InfractionKind", "ProtocolSpec",
    "RouterSpec", "StrategyDescriptor", "Trace", "eval_infraction", "observer_output", "parse_descriptor",
    "run_execution", "select_chain", "__version__",
]
