"""Blocks, hash trees, per-party chain views and chain selection."""
from __future__ import annotations

import csv
import enum
import hashlib
import io
from dataclasses import dataclass
from typing import Iterable

GENESIS_CREATOR = -1
OBSERVER = -1  # owner id used for the observer's view


def block_hash(creator: int, slot: int, parent: str, payload: bytes) -> str:
    h = hashlib.blake2b(digest_size=16)
    h.update(b"%d|%d|%s|" % (creator, slot, parent.encode()))
    h.update(payload)
    return h.hexdigest()


GENESIS_HASH = hashlib.blake2b(b"compliance-lab genesis", digest_size=16).hexdigest()


@dataclass(frozen=True, slots=True)
class Block:
    hash: str
    creator: int
    slot: int
    parent: str | None
    index: int
    payload: bytes = b""

    @property
    def token(self) -> int:
        """Ordinal of the oracle query that authorised this block (-1 for genesis)."""
        if self.parent is None:
            return -1
        return int(self.payload.split(b":", 1)[0])


GENESIS = Block(GENESIS_HASH, GENESIS_CREATOR, 0, None, 0, b"")


def make_block(creator: int, slot: int, parent: Block, token: int, nonce: bytes = b"") -> Block:
    """Build a child of `parent`. The oracle token is folded into the payload."""
    payload = b"%d:" % token + nonce
    return Block(block_hash(creator, slot, parent.hash, payload), creator, slot,
                 parent.hash, parent.index + 1, payload)


class BlockTree:
    """Single-parent hash tree rooted at genesis. Orphans are never admitted."""

    def __init__(self):
        self.blocks: dict[str, Block] = {GENESIS_HASH: GENESIS}
        self.children: dict[str, set[str]] = {GENESIS_HASH: set()}

    def __contains__(self, h: str) -> bool:
        return h in self.blocks

    def __len__(self) -> int:
        return len(self.blocks)

    def add(self, block: Block) -> bool:
        if block.hash in self.blocks:
            return False
        if block.parent not in self.blocks:
            raise KeyError(f"orphan block {block.hash}")
        self.blocks[block.hash] = block
        self.children[block.hash] = set()
        self.children[block.parent].add(block.hash)
        return True

    def ancestor_at(self, h: str, height: int) -> str:
        b = self.blocks[h]
        while b.index > height:
            b = self.blocks[b.parent]
        return b.hash

    def chain(self, tip: str) -> list[Block]:
        """Blocks from genesis to `tip`, inclusive."""
        out = []
        b = self.blocks[tip]
        while True:
            out.append(b)
            if b.parent is None:
                break
            b = self.blocks[b.parent]
        out.reverse()
        return out


class ChainRule(enum.Enum):
    LongestChain = "LongestChain"
    BoundedDepthLongest = "BoundedDepthLongest"


DEFAULT_CHECKPOINT_DEPTH = 36


class ChainView:
    """A party's local tree plus its adopted tip.

    Blocks whose parent is unknown wait in a pending pool and are admitted
    as soon as the parent shows up. Arrival order is the admission order and
    drives tie-breaking: among tips of equal height the first admitted wins,
    so the adopted tip only moves when a strictly higher block arrives.
    """

    def __init__(self, owner: int, rule: ChainRule = ChainRule.LongestChain,
                 checkpoint_depth: int = DEFAULT_CHECKPOINT_DEPTH):
        self.owner = owner
        self.rule = rule
        self.checkpoint_depth = checkpoint_depth
        self.tree = BlockTree()
        self.tip = GENESIS_HASH
        self.tip_height = 0
        self.arrival: dict[str, int] = {GENESIS_HASH: 0}
        self.log: list[str] = []
        self._pending: dict[str, list[Block]] = {}

    def _admits(self, block: Block) -> bool:
        if block.index <= self.tip_height:
            return False
        if self.rule is ChainRule.LongestChain or block.parent == self.tip:
            return True
        floor = self.tip_height - self.checkpoint_depth
        if floor <= 0:
            return True
        return self.tree.ancestor_at(block.hash, floor) == self.tree.ancestor_at(self.tip, floor)

    def receive(self, block: Block) -> None:
        tree = self.tree
        if block.hash in tree.blocks:
            return
        if block.parent not in tree.blocks:
            self._pending.setdefault(block.parent, []).append(block)
            return
        stack = [block]
        while stack:
            b = stack.pop()
            if b.hash in tree.blocks:
                continue
            tree.add(b)
            self.arrival[b.hash] = len(self.log) + 1
            self.log.append(b.hash)
            if self._admits(b):
                self.tip = b.hash
                self.tip_height = b.index
            waiting = self._pending.pop(b.hash, None)
            if waiting:
                stack.extend(reversed(waiting))

    def receive_all(self, blocks: Iterable[Block]) -> None:
        for b in blocks:
            self.receive(b)

    @property
    def tip_block(self) -> Block:
        return self.tree.blocks[self.tip]

    @property
    def pending_count(self) -> int:
        return sum(len(v) for v in self._pending.values())

    def block_ids(self) -> frozenset[str]:
        return frozenset(self.log)


def select_chain(view: ChainView, rule: ChainRule | None = None,
                 checkpoint_depth: int | None = None) -> str:
    """Recompute the adopted tip of `view` from its arrival log.

    LongestChain picks the deepest block, breaking ties by earliest arrival
    and then by lexicographic hash. BoundedDepthLongest replays arrivals and
    ignores any switch whose fork point lies more than `checkpoint_depth`
    blocks under the tip held at that moment.
    """
    rule = view.rule if rule is None else rule
    depth = view.checkpoint_depth if checkpoint_depth is None else checkpoint_depth
    blocks = view.tree.blocks
    if rule is ChainRule.LongestChain:
        return min([GENESIS_HASH, *view.log],
                   key=lambda h: (-blocks[h].index, view.arrival[h], h))
    replay = ChainView(view.owner, rule, depth)
    for h in view.log:
        replay.receive(blocks[h])
    return replay.tip


@dataclass
class ObserverOutput:
    chain: list[Block]
    counts: list[int]

    @property
    def length(self) -> int:
        return len(self.chain) - 1


def observer_output(trace) -> ObserverOutput:
    """Final chain of the observer and the number of its blocks per creator."""
    view = trace.observer_view
    chain = view.tree.chain(view.tip)
    counts = [0] * trace.n_parties
    for b in chain[1:]:
        counts[b.creator] += 1
    return ObserverOutput(chain, counts)


def unique_success_slots(trace) -> dict[int, list[Block]]:
    """Slots in which exactly one party produced blocks, with those blocks."""
    by_slot: dict[int, dict[int, list[Block]]] = {}
    for b in trace.blocks:
        by_slot.setdefault(b.slot, {}).setdefault(b.creator, []).append(b)
    return {r: next(iter(m.values())) for r, m in sorted(by_slot.items()) if len(m) == 1}


def unique_success_violations(trace) -> list[Block]:
    """Blocks of uniquely successful slots missing from the observer's chain.

    Always empty for all-honest synchronous proof-of-work executions.
    """
    on_chain = {b.hash for b in observer_output(trace).chain}
    return [b for blocks in unique_success_slots(trace).values() for b in blocks if b.hash not in on_chain]


def validate_block(block: Block, oracle) -> bool:
    """Validity predicate: the block was authorised by a successful oracle query.

    For PoW that means the referenced query succeeded; for PoS it means the
    creator leads the block's slot. Conflicting same-slot PoS blocks are each
    valid on their own; the conflict is an infraction, not a validity issue.
    """
    if block.parent is None:
        return block.hash == GENESIS_HASH
    try:
        token = block.token
    except ValueError:
        return False
    if block_hash(block.creator, block.slot, block.parent, block.payload) != block.hash:
        return False
    return oracle.token_valid(block.creator, block.slot, token)


def chain_to_csv(chain: list[Block]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["height", "hash", "creator", "slot"])
    for b in chain:
        w.writerow([b.index, b.hash, b.creator, b.slot])
    return buf.getvalue()
