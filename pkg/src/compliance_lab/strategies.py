"""Strategy descriptors, selfish-signing planners and per-execution strategy runtimes."""
from __future__ import annotations

import enum
import json
import re
from dataclasses import dataclass

import numpy as np

from .errors import LengthMismatch, MalformedConfig, PreconditionViolated
from .protocols import Family, honest_step


class Kind(enum.IntEnum):
    # the integer value is the descriptor ordinal used for deterministic tie-breaks
    Honest = 0
    AbstainAlways = 1
    AbstainSchedule = 2
    ConflictT = 3
    SelfishSign = 4
    SelfishSignDepthLE3 = 5
    PreferOwnTip = 6
    Composite = 7


@dataclass(frozen=True)
class StrategyDescriptor:
    kind: Kind
    t: int = 1
    slots: frozenset = frozenset()
    parts: tuple = ()  # Composite: ((first_slot, descriptor), ...)

    def __post_init__(self):
        if self.kind is Kind.ConflictT and self.t < 1:
            raise MalformedConfig("ConflictT needs t >= 1", "strategy.t")
        if self.kind is Kind.AbstainSchedule and any(s < 1 for s in self.slots):
            raise MalformedConfig("abstain slots are 1-indexed", "strategy.slots")

    def __str__(self) -> str:
        if self.kind is Kind.ConflictT:
            return f"ConflictT({self.t})"
        if self.kind is Kind.AbstainSchedule:
            return f"AbstainSchedule({_ranges(sorted(self.slots))})"
        if self.kind is Kind.Composite:
            return "Composite(" + ",".join(f"{s}:{d}" for s, d in self.parts) + ")"
        return self.kind.name

    def sort_key(self) -> tuple:
        return (int(self.kind), self.t, tuple(sorted(self.slots)),
                tuple((s, d.sort_key()) for s, d in self.parts))

    def to_json(self):
        out = {"kind": self.kind.name}
        if self.kind is Kind.ConflictT:
            out["t"] = self.t
        if self.kind is Kind.AbstainSchedule:
            out["slots"] = sorted(self.slots)
        if self.kind is Kind.Composite:
            out["parts"] = [[s, d.to_json()] for s, d in self.parts]
        return out

    def validate_for(self, n_slots: int) -> None:
        if self.kind is Kind.AbstainSchedule and any(s > n_slots for s in self.slots):
            raise MalformedConfig(f"abstain slots must lie in [1, {n_slots}]", "strategy.slots")
        for _, d in self.parts:
            d.validate_for(n_slots)


def _ranges(xs) -> str:
    out, i = [], 0
    while i < len(xs):
        j = i
        while j + 1 < len(xs) and xs[j + 1] == xs[j] + 1:
            j += 1
        out.append(str(xs[i]) if i == j else f"{xs[i]}-{xs[j]}")
        i = j + 1
    return " ".join(out)


HONEST = StrategyDescriptor(Kind.Honest)
ABSTAIN_ALWAYS = StrategyDescriptor(Kind.AbstainAlways)
SELFISH_SIGN = StrategyDescriptor(Kind.SelfishSign)
SELFISH_SIGN_D3 = StrategyDescriptor(Kind.SelfishSignDepthLE3)
PREFER_OWN_TIP = StrategyDescriptor(Kind.PreferOwnTip)


def conflict(t: int) -> StrategyDescriptor:
    return StrategyDescriptor(Kind.ConflictT, t=t)


def abstain_schedule(slots) -> StrategyDescriptor:
    return StrategyDescriptor(Kind.AbstainSchedule, slots=frozenset(int(s) for s in slots))


def composite(*parts) -> StrategyDescriptor:
    """Switch strategies at given slots: composite((1, HONEST), (50, conflict(2)))."""
    parts = tuple(sorted(((int(s), d) for s, d in parts), key=lambda p: p[0]))
    if not parts or parts[0][0] != 1:
        raise MalformedConfig("the first composite part must start at slot 1", "strategy.parts")
    return StrategyDescriptor(Kind.Composite, parts=parts)


_SHORT = re.compile(r"^(\w+)(?:\((.*)\))?$")


def parse_descriptor(spec) -> StrategyDescriptor:
    """Accept 'Honest', 'ConflictT(3)', 'AbstainSchedule(1-5 9)' or a JSON object."""
    if isinstance(spec, StrategyDescriptor):
        return spec
    if isinstance(spec, dict):
        try:
            kind = Kind[spec["kind"]]
        except KeyError as exc:
            raise MalformedConfig(f"unknown strategy {spec!r}", "strategy.kind") from exc
        unknown = set(spec) - {"kind", "t", "slots", "parts"}
        if unknown:
            raise MalformedConfig(f"unknown keys {sorted(unknown)}", "strategy")
        if kind is Kind.ConflictT:
            return conflict(int(spec.get("t", 1)))
        if kind is Kind.AbstainSchedule:
            return abstain_schedule(spec.get("slots", ()))
        if kind is Kind.Composite:
            return composite(*((s, parse_descriptor(d)) for s, d in spec.get("parts", ())))
        return StrategyDescriptor(kind)
    m = _SHORT.match(str(spec).strip())
    if not m or m.group(1) not in Kind.__members__:
        raise MalformedConfig(f"unknown strategy {spec!r}", "strategy")
    kind, arg = Kind[m.group(1)], m.group(2)
    if kind is Kind.ConflictT:
        return conflict(int(arg))
    if kind is Kind.AbstainSchedule:
        slots = []
        for tok in (arg or "").replace(",", " ").split():
            a, _, b = tok.partition("-")
            slots.extend(range(int(a), int(b or a) + 1))
        return abstain_schedule(slots)
    if kind is Kind.Composite:
        return parse_descriptor(json.loads(arg))
    return StrategyDescriptor(kind)


# --- selfish-signing planners -------------------------------------------------

@dataclass(frozen=True)
class SelfishPlan:
    pairs: tuple[tuple[int, int], ...]  # (first slot of the window, depth), 1-indexed

    def to_json(self) -> str:
        return json.dumps([list(p) for p in self.pairs])

    @property
    def discarded(self) -> int:
        return sum(d for _, d in self.pairs)


def _check_bits(bits: str, n: int | None) -> str:
    bits = "".join(str(b) for b in bits) if not isinstance(bits, str) else bits
    if set(bits) - {"0", "1"}:
        raise LengthMismatch("schedule must be a 0/1 string")
    if n is not None and len(bits) != n:
        raise LengthMismatch(f"schedule has {len(bits)} slots, expected {n}")
    return bits


def plan_selfish(bits: str, n_slots: int | None = None) -> SelfishPlan:
    """Maximum-depth selfish-signing windows for a known leader schedule.

    Scan left to right. At a led slot r count the further consecutive leads
    k and the non-led slots l right before r; if both are positive, fork at
    depth min(k, l) and resume after the window.
    """
    s = _check_bits(bits, n_slots)
    n = len(s)
    pairs = []
    r = 1
    while r <= n:
        if s[r - 1] == "0":
            r += 1
            continue
        k = 0
        while r + k < n and s[r + k] == "1":
            k += 1
        ell = 0
        while r - 1 - ell >= 1 and s[r - 2 - ell] == "0":
            ell += 1
        if k == 0 or ell == 0:
            r += 1
            continue
        d = min(k, ell)
        pairs.append((r, d))
        r += d + 1
    return SelfishPlan(tuple(pairs))


def _window_events(w: str) -> list[tuple[int, int]]:
    """Depth <= 3 events inside one 7-slot window as (offset of fork slot, depth), 0-based."""
    if w == "0001111":
        return [(3, 3)]
    for i in range(3):
        if w[i:i + 5] == "00111":
            return [(i + 2, 2)]
    return [(i + 1, 1) for i in range(5) if w[i:i + 3] == "011"]


_WINDOW_DISCARDS = np.array([sum(d for _, d in _window_events(format(v, "07b")))
                             for v in range(128)], dtype=np.int64)


def plan_selfish_d_le_3(bits: str) -> SelfishPlan:
    """Depth <= 3 selfish signing on independent 7-slot windows.

    Each window is checked deepest pattern first: a full '0001111' is one
    depth-3 fork, otherwise a '00111' is one depth-2 fork, otherwise every
    '011' is a depth-1 fork. Schedules are zero-padded to a multiple of 7.
    """
    s = _check_bits(bits, None)
    if len(s) % 7:
        s += "0" * (7 - len(s) % 7)
    pairs = []
    for base in range(0, len(s), 7):
        for off, d in _window_events(s[base:base + 7]):
            pairs.append((base + off + 1, d))
    return SelfishPlan(tuple(pairs))


def window_discards(windows: np.ndarray) -> np.ndarray:
    """Blocks discarded by the depth <= 3 planner for 7-bit windows given as ints 0..127.

    Bit 6 of the integer is the first slot of the window.
    """
    return _WINDOW_DISCARDS[np.asarray(windows, dtype=np.int64)]


# --- runtimes -------------------------------------------------------------------

class Runtime:
    """Per-execution state of one party's strategy."""

    def __init__(self, descriptor: StrategyDescriptor, party: int, family: Family):
        self.descriptor = descriptor
        self.party = party
        self.family = family

    def step(self, ctx) -> list:
        raise NotImplementedError


class HonestRuntime(Runtime):
    def step(self, ctx):
        return honest_step(self.family, ctx)


class AbstainRuntime(Runtime):
    def __init__(self, descriptor, party, family):
        super().__init__(descriptor, party, family)
        self.always = descriptor.kind is Kind.AbstainAlways
        self.slots = descriptor.slots

    def step(self, ctx):
        if self.always or ctx.slot in self.slots:
            return []
        return honest_step(self.family, ctx)


class ConflictRuntime(Runtime):
    """Leaders sign t sibling blocks that differ only by a payload nonce.

    Under PoW the first t successes of a slot become siblings and any
    further success chains on the first sibling.
    """

    def step(self, ctx):
        t = self.descriptor.t
        tip = ctx.view.tip_block
        made = []
        if self.family is Family.BitcoinPoW:
            hits = ctx.query_many(ctx.budget)
            for k, tok in enumerate(hits[:t]):
                made.append(ctx.build(tip, tok, b"n%d" % k))
            parent = made[0] if made else tip
            for tok in hits[t:]:
                parent = ctx.build(parent, tok)
                made.append(parent)
        elif ctx.is_leader:
            for k in range(t):
                tok = ctx.query()
                made.append(ctx.build(tip, tok, b"n%d" % k if t > 1 else b""))
        for b in made:
            ctx.diffuse(b)
        return made


class PreferOwnTipRuntime(Runtime):
    """Publishes immediately, but at equal height keeps building on its own block."""

    def __init__(self, descriptor, party, family):
        super().__init__(descriptor, party, family)
        self.own_by_height: dict[int, str] = {}

    def _parent(self, view):
        tip = view.tip_block
        if tip.creator == self.party:
            return tip
        own = self.own_by_height.get(tip.index)
        if own is not None and own in view.tree.blocks:
            return view.tree.blocks[own]
        return tip

    def step(self, ctx):
        made = []
        if self.family is Family.BitcoinPoW:
            hits = ctx.query_many(ctx.budget)
            if hits:
                parent = self._parent(ctx.view)
                for tok in hits:
                    parent = ctx.build(parent, tok)
                    made.append(parent)
        elif ctx.is_leader:
            tok = ctx.query()
            made.append(ctx.build(self._parent(ctx.view), tok))
        for b in made:
            self.own_by_height[b.index] = b.hash
            ctx.diffuse(b)
        return made


class SelfishRuntime(Runtime):
    """Follows a selfish-signing plan and behaves honestly outside its windows."""

    def __init__(self, descriptor, party, family, schedule=None, predictable=True):
        super().__init__(descriptor, party, family)
        if not family.is_pos:
            raise MalformedConfig("selfish signing needs a PoS leader schedule", "strategy")
        self.schedule = schedule
        self.predictable = predictable
        self.planner = plan_selfish_d_le_3 if descriptor.kind is Kind.SelfishSignDepthLE3 else plan_selfish
        self.starts: dict[int, int] = {}
        self.continues: set[int] = set()
        self._planned_until = 0
        self.fork_tip = None
        if schedule is not None and predictable:
            self._add_plan(schedule.bits(party), 0)
            self._planned_until = schedule.n_slots

    def _add_plan(self, bits: str, offset: int) -> None:
        plan = self.planner(bits)
        for r, d in plan.pairs:
            r += offset
            if self.schedule is not None and r + d > self.schedule.n_slots:
                continue
            self.starts[r] = d
            self.continues.update(range(r + 1, r + d + 1))

    def _plan_epoch(self, slot: int) -> None:
        lo, hi = self.schedule.epoch_bounds(slot)
        self._add_plan(self.schedule.bits(self.party)[lo - 1:hi], lo - 1)
        self._planned_until = hi

    def step(self, ctx):
        r = ctx.slot
        if self.schedule is not None and r > self._planned_until:
            self._plan_epoch(r)
        if r in self.starts:
            try:
                block = execute_selfish_fork(ctx, (r, self.starts[r]))
            except PreconditionViolated:
                # lost messages broke the planned window: drop it, act honestly
                self.fork_tip = None
                return honest_step(self.family, ctx)
            self.fork_tip = block
            return [block]
        if r in self.continues and self.fork_tip is not None:
            tok = ctx.query()
            block = ctx.build(self.fork_tip, tok)
            ctx.diffuse(block)
            self.fork_tip = block
            return [block]
        return honest_step(self.family, ctx)


def execute_selfish_fork(ctx, window: tuple[int, int]):
    """First block of a selfish-signing window: sign on the block d below the tip.

    The d blocks above the fork point must belong to other parties and come
    from the d slots right before the window; otherwise the plan no longer
    matches the live chain. Later slots of the window chain on this block.
    """
    r, d = window
    if d < 1:
        raise PreconditionViolated("selfish signing needs depth >= 1")
    if not ctx.is_leader:
        raise PreconditionViolated(f"party {ctx.party} does not lead slot {r}")
    view = ctx.view
    b = view.tip_block
    for _ in range(d):
        if b.parent is None or b.creator == ctx.party or not r - d <= b.slot < r:
            raise PreconditionViolated(f"window {window} does not match the adopted chain")
        b = view.tree.blocks[b.parent]
    tok = ctx.query()
    block = ctx.build(b, tok)
    ctx.diffuse(block)
    return block


def make_runtime(descriptor: StrategyDescriptor, party: int, family: Family,
                 schedule=None, predictable: bool = False) -> Runtime:
    k = descriptor.kind
    if k is Kind.Honest or (k is Kind.ConflictT and descriptor.t == 1):
        return HonestRuntime(descriptor, party, family)
    if k in (Kind.AbstainAlways, Kind.AbstainSchedule):
        return AbstainRuntime(descriptor, party, family)
    if k is Kind.ConflictT:
        return ConflictRuntime(descriptor, party, family)
    if k is Kind.PreferOwnTip:
        return PreferOwnTipRuntime(descriptor, party, family)
    if k in (Kind.SelfishSign, Kind.SelfishSignDepthLE3):
        return SelfishRuntime(descriptor, party, family, schedule, predictable)
    if k is Kind.Composite:
        return CompositeRuntime(descriptor, party, family, schedule, predictable)
    raise MalformedConfig(f"no runtime for {descriptor}", "strategy")


class CompositeRuntime(Runtime):
    def __init__(self, descriptor, party, family, schedule=None, predictable=False):
        super().__init__(descriptor, party, family)
        self.starts = [s for s, _ in descriptor.parts]
        self.subs = [make_runtime(d, party, family, schedule, predictable) for _, d in descriptor.parts]

    def step(self, ctx):
        i = 0
        while i + 1 < len(self.starts) and self.starts[i + 1] <= ctx.slot:
            i += 1
        return self.subs[i].step(ctx)


def strategy_step(runtime: Runtime, ctx) -> list:
    """Run one slot of a strategy; returns the blocks it diffused."""
    return runtime.step(ctx)
