"""Slot-by-slot execution engine: oracle, routers, diffusion and the observer."""
from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from .errors import BudgetExhausted, MalformedConfig, StrategyArityMismatch
from .ledger import OBSERVER, Block, ChainRule, ChainView, DEFAULT_CHECKPOINT_DEPTH, make_block
from .protocols import Family, LeaderSchedule, ProtocolSpec, draw_leader_schedule, pow_budgets
from .strategies import StrategyDescriptor, make_runtime, parse_descriptor

# disjoint sub-streams of the per-execution counter-based generator
STREAM_ORACLE = 1
STREAM_ROUTER = 2
STREAM_SCHEDULE = 3
STREAM_ROUTER_OVERFLOW = 4

ROUTER_SLOTS_PER_SENDER = 16  # router coins drawn per sender per slot before overflow


def stream(seed: int, sub: int, extra: int = 0) -> np.random.Generator:
    """Philox generator keyed by (seed, sub-stream, extra); distinct keys never overlap."""
    key = (int(seed) & (2**64 - 1)) | ((sub & 0xFFFF) << 64) | ((extra & (2**40 - 1)) << 80)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class Party:
    id: int
    power: float


class RouterKind(enum.Enum):
    Synchronous = "Synchronous"
    Lossy = "Lossy"
    Uniform = "Uniform"


@dataclass(frozen=True)
class RouterSpec:
    kind: RouterKind = RouterKind.Synchronous
    drop_probability: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.drop_probability <= 1.0:
            raise MalformedConfig("drop probability must lie in [0,1]", "router.drop_probability")
        if self.kind is not RouterKind.Lossy and self.drop_probability:
            raise MalformedConfig("only the lossy router drops messages", "router.drop_probability")


SYNCHRONOUS = RouterSpec()


def lossy(d: float) -> RouterSpec:
    return RouterSpec(RouterKind.Lossy, d)


UNIFORM = RouterSpec(RouterKind.Uniform)


@dataclass(frozen=True)
class ExecutionConfig:
    """Everything needed to run one execution except the strategy profile and seed.

    `scheme`, `utility` and `query_cost` are carried for the analysis layer;
    the engine itself ignores them.
    """
    powers: tuple[float, ...]
    protocol: ProtocolSpec
    n_slots: int
    router: RouterSpec = SYNCHRONOUS
    chain_rule: ChainRule = ChainRule.LongestChain
    checkpoint_depth: int = DEFAULT_CHECKPOINT_DEPTH
    scheme: Any = None
    utility: str = "Profit"
    query_cost: float = 0.0

    def __post_init__(self):
        powers = tuple(float(p) for p in self.powers)
        object.__setattr__(self, "powers", powers)
        if len(powers) < 1:
            raise MalformedConfig("need at least one party", "parties")
        if any(p < 0 or not math.isfinite(p) for p in powers):
            raise MalformedConfig("powers must be non-negative", "parties")
        if abs(math.fsum(powers) - 1.0) > 1e-12:
            raise MalformedConfig(f"powers sum to {math.fsum(powers)!r}, not 1", "parties")
        if self.n_slots < 1:
            raise MalformedConfig("need at least one slot", "slots")
        self.protocol.validate(len(powers), self.n_slots)
        if self.protocol.family is Family.BitcoinPoW:
            pow_budgets(powers, self.protocol.q)

    @property
    def n_parties(self) -> int:
        return len(self.powers)

    @property
    def parties(self) -> tuple[Party, ...]:
        return tuple(Party(i, p) for i, p in enumerate(self.powers))

    def budgets(self) -> tuple[int, ...]:
        if self.protocol.family is Family.BitcoinPoW:
            return pow_budgets(self.powers, self.protocol.q)
        return tuple(0 for _ in self.powers)

    def to_json(self) -> dict:
        p = self.protocol
        out = {
            "parties": list(self.powers),
            "protocol": {"family": p.family.value, "q": p.q, "delta": p.delta,
                         "epoch_length": p.epoch_length, "phi": list(p.phi),
                         "predictable": p.predictable},
            "slots": self.n_slots,
            "router": {"kind": self.router.kind.value, "drop_probability": self.router.drop_probability},
            "chain_rule": self.chain_rule.value,
            "checkpoint_depth": self.checkpoint_depth,
            "utility": self.utility,
            "query_cost": self.query_cost,
        }
        if self.scheme is not None:
            out["scheme"] = self.scheme.to_json()
        return out

    def digest(self) -> str:
        blob = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


@dataclass(frozen=True)
class QueryResult:
    token: int
    success: bool


class Oracle:
    """Stateless random oracle for one execution.

    PoW coins for every (slot, party, query ordinal) are fixed when the
    execution starts, so a query's outcome never depends on how queries are
    interleaved. For PoS a query is a signing request that succeeds iff the
    caller leads the slot.
    """

    def __init__(self, config: ExecutionConfig, seed: int, schedule: LeaderSchedule | None):
        self.family = config.protocol.family
        self.schedule = schedule
        self.budgets = config.budgets()
        self.counts = [0] * config.n_parties
        self.made: dict[tuple[int, int], int] = {}
        if self.family is Family.BitcoinPoW:
            width = max(self.budgets) if self.budgets else 0
            u = stream(seed, STREAM_ORACLE).random((config.n_slots, config.n_parties, max(width, 1)))
            self.success = u < config.protocol.delta
            self._any = self.success.any(axis=2).tolist()

    def start_slot(self) -> None:
        self.counts = [0] * len(self.counts)

    def query(self, slot: int, party: int) -> QueryResult:
        k = self.counts[party]
        if self.family is Family.BitcoinPoW:
            if k >= self.budgets[party]:
                raise BudgetExhausted(f"party {party} exceeded {self.budgets[party]} queries in slot {slot}")
            ok = bool(self.success[slot - 1, party, k])
        else:
            ok = self.schedule.is_leader(party, slot)
        self.counts[party] = k + 1
        self.made[(slot, party)] = k + 1
        return QueryResult(k, ok)

    def query_many(self, slot: int, party: int, count: int) -> list[int]:
        """Make `count` PoW queries at once; returns the tokens of the successful ones."""
        k = self.counts[party]
        if k + count > self.budgets[party]:
            raise BudgetExhausted(f"party {party} exceeded {self.budgets[party]} queries in slot {slot}")
        self.counts[party] = k + count
        if count:
            self.made[(slot, party)] = k + count
        if count == 0 or not self._any[slot - 1][party]:
            return []
        return [k + int(j) for j in np.flatnonzero(self.success[slot - 1, party, k:k + count])]

    def token_valid(self, party: int, slot: int, token: int) -> bool:
        if token < 0 or token >= self.made.get((slot, party), 0):
            return False
        if self.family is Family.BitcoinPoW:
            return bool(self.success[slot - 1, party, token])
        return self.schedule.is_leader(party, slot)


def oracle_query(oracle: Oracle, party: int, slot: int) -> QueryResult:
    return oracle.query(slot, party)


class PartyContext:
    """What a strategy sees and can do during one slot."""

    __slots__ = ("party", "family", "budget", "view", "oracle", "schedule", "slot",
                 "is_leader", "_out", "_fresh", "_gaps")

    def __init__(self, party, family, budget, view, oracle, schedule, out, gaps):
        self.party = party
        self.family = family
        self.budget = budget
        self.view = view
        self.oracle = oracle
        self.schedule = schedule
        self.slot = 0
        self.is_leader = False
        self._out = out
        self._fresh = set()
        self._gaps = gaps

    def query(self) -> int:
        """One oracle query; returns its token (check validity via build)."""
        return self.oracle.query(self.slot, self.party).token

    def query_many(self, count: int) -> list[int]:
        if self.family is Family.BitcoinPoW:
            return self.oracle.query_many(self.slot, self.party, count)
        return [t for t in (self.oracle.query(self.slot, self.party) for _ in range(count)) if t.success]

    def build(self, parent: Block, token: int, nonce: bytes = b"") -> Block:
        if not self.oracle.token_valid(self.party, self.slot, token):
            raise ValueError(f"token {token} of party {self.party} in slot {self.slot} is not valid")
        block = make_block(self.party, self.slot, parent, token, nonce)
        if parent.hash in self._fresh:
            self._gaps[block.hash] = -1
        else:
            self._gaps[block.hash] = self.view.tip_height - parent.index
        self._fresh.add(block.hash)
        return block

    def diffuse(self, block: Block) -> None:
        self._out.append((block, self.party))


def _deliver(router: RouterSpec, messages, drop_u, order_u, n_recipients: int):
    """Shared routing core: per-recipient ordered message lists.

    `drop_u[m]` is the drop coin of message m; `order_u[j][m]` its sort key
    for recipient j (uniform router only).
    """
    if router.kind is RouterKind.Synchronous:
        lst = tuple(messages)
        return [lst] * n_recipients
    if router.kind is RouterKind.Lossy:
        d = router.drop_probability
        lst = tuple(m for m, u in zip(messages, drop_u) if u >= d)
        return [lst] * n_recipients
    out = []
    for j in range(n_recipients):
        keys = order_u[j]
        order = sorted(range(len(messages)), key=keys.__getitem__)
        out.append(tuple(messages[i] for i in order))
    return out


def route_deliver(router: RouterSpec, diffused: Sequence[tuple[Any, int]], rng: np.random.Generator,
                  n_recipients: int) -> list[tuple]:
    """Route one slot's diffused (message, sender) pairs to `n_recipients` recipients.

    Delivered lists hold messages only; sender ids are dropped.
    """
    msgs = [m for m, _ in diffused]
    if not msgs:
        return [()] * n_recipients
    drop_u = rng.random(len(msgs)) if router.kind is RouterKind.Lossy else None
    order_u = rng.random((n_recipients, len(msgs))).tolist() if router.kind is RouterKind.Uniform else None
    return _deliver(router, msgs, drop_u, order_u, n_recipients)


class _RouterCoins:
    """Router coins indexed by (slot, sender, per-sender message ordinal).

    A fixed block of coins is drawn for every slot in order, so two
    executions that differ only in how many messages one party sends still
    share the coins of the messages they have in common.
    """

    def __init__(self, router: RouterSpec, seed: int, n_parties: int):
        self.router = router
        self.seed = seed
        self.n = n_parties
        self.k = ROUTER_SLOTS_PER_SENDER
        self.gen = stream(seed, STREAM_ROUTER)
        self.rows = n_parties + 1 if router.kind is RouterKind.Uniform else 1

    def draw(self, slot: int, diffused):
        block = self.gen.random((self.rows, self.n * self.k))
        if not diffused:
            return None, None
        seen = [0] * self.n
        idx, extra = [], []
        for _, s in diffused:
            k = seen[s]
            seen[s] = k + 1
            if k < self.k:
                idx.append(s * self.k + k)
            else:
                idx.append(-1 - len(extra))
                extra.append((s, k))
        if extra:
            over = stream(self.seed, STREAM_ROUTER_OVERFLOW, slot).random((self.rows, len(extra)))
        cols = [block[:, i] if i >= 0 else over[:, -1 - i] for i in idx]
        mat = np.stack(cols, axis=1)
        if self.router.kind is RouterKind.Lossy:
            return mat[0].tolist(), None
        return None, mat.tolist()


@dataclass(frozen=True, eq=False)
class Trace:
    """Immutable record of one execution.

    `queries[r-1, i]` is the number of oracle queries of party i in slot r;
    `duty[r-1, i]` marks slots where the protocol requires party i to query.
    `deliveries[r]` maps recipient (party id, or -1 for the observer) to the
    ordered block hashes delivered at the start of slot r; slot N+1 is the
    observer-only activation.
    """
    seed: int
    config: ExecutionConfig
    profile: tuple[StrategyDescriptor, ...]
    queries: np.ndarray
    duty: np.ndarray
    blocks: tuple[Block, ...]
    parent_gap: dict
    deliveries: dict
    views: tuple[ChainView, ...]
    observer_view: ChainView
    schedule: LeaderSchedule | None
    oracle: Oracle

    @property
    def n_parties(self) -> int:
        return self.config.n_parties

    @property
    def n_slots(self) -> int:
        return self.config.n_slots

    @property
    def per_party_views(self) -> dict[int, frozenset]:
        return {i: v.block_ids() for i, v in enumerate(self.views)}

    @property
    def observer_ids(self) -> frozenset:
        return self.observer_view.block_ids()

    def to_jsonl(self) -> str:
        header = {"type": "header", "seed": self.seed, "config": self.config.digest(),
                  "parties": self.n_parties, "slots": self.n_slots,
                  "profile": [str(d) for d in self.profile]}
        lines = [json.dumps(header, separators=(",", ":"))]
        by_slot: dict[int, list[Block]] = {}
        for b in self.blocks:
            by_slot.setdefault(b.slot, []).append(b)
        for r in range(1, self.n_slots + 2):
            rec = {"slot": r}
            if r <= self.n_slots:
                rec["queries"] = [int(x) for x in self.queries[r - 1]]
                rec["blocks"] = [[b.hash, b.creator, b.parent, b.index, b.payload.hex()]
                                 for b in by_slot.get(r, ())]
            dl = self.deliveries.get(r, {})
            rec["deliveries"] = {("observer" if j == OBSERVER else str(j)): list(dl[j])
                                 for j in sorted(dl, key=lambda j: (j == OBSERVER, j))}
            lines.append(json.dumps(rec, separators=(",", ":")))
        return "\n".join(lines) + "\n"


def derive_seed(master: int, index: int) -> int:
    """Seed of replica `index` under master seed `master`."""
    return int(np.random.SeedSequence([int(master) & (2**64 - 1), index]).generate_state(1, np.uint64)[0])


def run_execution(config: ExecutionConfig, profile: Sequence, seed: int) -> Trace:
    """Run one execution of `config` under `profile` with `seed`; fully deterministic."""
    profile = tuple(parse_descriptor(d) for d in profile)
    n, N = config.n_parties, config.n_slots
    if len(profile) != n:
        raise StrategyArityMismatch(f"profile has {len(profile)} strategies for {n} parties")
    for d in profile:
        d.validate_for(N)
    family = config.protocol.family
    schedule = None
    if family.is_pos:
        schedule = draw_leader_schedule(config.protocol, config.powers, stream(seed, STREAM_SCHEDULE), N)
    oracle = Oracle(config, seed, schedule)
    views = tuple(ChainView(i, config.chain_rule, config.checkpoint_depth) for i in range(n))
    observer = ChainView(OBSERVER, config.chain_rule, config.checkpoint_depth)
    runtimes = [make_runtime(d, i, family, schedule, config.protocol.predictable)
                for i, d in enumerate(profile)]
    budgets = config.budgets()
    out: list[tuple[Block, int]] = []
    gaps: dict[str, int] = {}
    ctxs = [PartyContext(i, family, budgets[i], views[i], oracle, schedule, out, gaps) for i in range(n)]
    coins = None if config.router.kind is RouterKind.Synchronous else _RouterCoins(config.router, seed, n)
    recipients = list(views) + [observer]
    rec_ids = list(range(n)) + [OBSERVER]

    queries = np.zeros((N, n), dtype=np.int32)
    if family.is_pos:
        duty = np.zeros((N, n), dtype=bool)
        for r, ls in enumerate(schedule.per_slot):
            duty[r, list(ls)] = True
    else:
        duty = np.ones((N, n), dtype=bool)
    blocks: list[Block] = []
    deliveries: dict[int, dict] = {}
    inflight: list[tuple[Block, int]] = []
    sync = coins is None

    for r in range(1, N + 2):
        if not sync:
            drop_u, order_u = coins.draw(r, inflight)
        if inflight:
            if sync:
                lists = [tuple(b for b, _ in inflight)] * (n + 1)
            else:
                lists = _deliver(config.router, [b for b, _ in inflight], drop_u, order_u, n + 1)
            active = recipients if r <= N else [observer]
            ids = rec_ids if r <= N else [OBSERVER]
            record = deliveries[r] = {}
            for view, j in zip(active, ids):
                lst = lists[n] if j == OBSERVER else lists[j]
                record[j] = tuple(b.hash for b in lst)
                for b in lst:
                    view.receive(b)
        if r > N:
            break
        out.clear()
        oracle.start_slot()
        leaders = schedule.per_slot[r - 1] if schedule is not None else ()
        for i in range(n):
            ctx = ctxs[i]
            ctx.slot = r
            ctx.is_leader = i in leaders
            ctx._fresh.clear()
            runtimes[i].step(ctx)
        counts = oracle.counts
        if any(counts):
            queries[r - 1] = counts
        inflight = list(out)
        blocks.extend(b for b, _ in inflight)

    queries.setflags(write=False)
    duty.setflags(write=False)
    return Trace(seed, config, profile, queries, duty, tuple(blocks), gaps, deliveries,
                 views, observer, schedule, oracle)
