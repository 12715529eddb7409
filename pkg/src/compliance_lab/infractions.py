"""Trace-level infraction predicates and sampled compliance checks."""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass

import numpy as np

from .strategies import HONEST, Kind, StrategyDescriptor, parse_descriptor


class InfractionKind(enum.Enum):
    Conf = "Conf"
    Abs = "Abs"
    BC = "BC"
    Self = "Self"
    AlwaysZero = "AlwaysZero"
    AllHonest = "AllHonest"


def _conflicting(trace, party: int) -> bool:
    # same height alone is not enough: an honest party whose block was lost
    # in transit legitimately re-signs that height in a later slot
    seen = set()
    for b in trace.blocks:
        if b.creator == party:
            key = (b.slot, b.index)
            if key in seen:
                return True
            seen.add(key)
    return False


def _abstained(trace, party: int) -> bool:
    # duty marks slots where the protocol expects a query: every slot for PoW,
    # led slots for PoS
    return bool(np.any(trace.duty[:, party] & (trace.queries[:, party] == 0)))


def _selfish(trace, party: int) -> bool:
    gaps = trace.parent_gap
    return any(b.creator == party and gaps.get(b.hash, 0) >= 1 for b in trace.blocks)


def _honest_equivalent(d: StrategyDescriptor) -> bool:
    return d.kind is Kind.Honest or (d.kind is Kind.ConflictT and d.t == 1)


def eval_infraction(kind: InfractionKind | str, trace, party: int) -> int:
    kind = InfractionKind(kind) if isinstance(kind, str) else kind
    if kind is InfractionKind.Conf:
        return int(_conflicting(trace, party))
    if kind is InfractionKind.Abs:
        return int(_abstained(trace, party))
    if kind is InfractionKind.BC:
        return int(_conflicting(trace, party) or _abstained(trace, party))
    if kind is InfractionKind.Self:
        return int(_selfish(trace, party))
    if kind is InfractionKind.AlwaysZero:
        return 0
    return int(not _honest_equivalent(trace.profile[party]))


@dataclass
class ComplianceVerdict:
    compliant: bool
    samples: int
    witness: object = None  # Trace
    witness_seed: int | None = None

    @property
    def label(self) -> str:
        return "CompliantOnSample" if self.compliant else "InfractionFound"


def witness_jsonl(trace, kind: InfractionKind, party: int) -> str:
    note = {"type": "infraction", "kind": kind.value, "party": party}
    return trace.to_jsonl() + json.dumps(note, separators=(",", ":")) + "\n"


def is_compliant_strategy(descriptor, kind: InfractionKind | str, config, sample_count: int,
                          seed: int = 0, party: int = 0) -> ComplianceVerdict:
    """Sample executions where `party` plays `descriptor` against honest peers.

    A compliant verdict only covers the sampled traces.
    """
    from .execution import derive_seed, run_execution

    if sample_count < 1:
        raise ValueError("sample_count must be >= 1")
    kind = InfractionKind(kind) if isinstance(kind, str) else kind
    descriptor = parse_descriptor(descriptor)
    profile = [HONEST] * config.n_parties
    profile[party] = descriptor
    for j in range(sample_count):
        s = derive_seed(seed, j)
        trace = run_execution(config, profile, s)
        if eval_infraction(kind, trace, party):
            return ComplianceVerdict(False, j + 1, trace, s)
    return ComplianceVerdict(True, sample_count)
