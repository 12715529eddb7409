import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from compliance_lab.ledger import (GENESIS, GENESIS_HASH, BlockTree, ChainRule, ChainView, block_hash,
                                   chain_to_csv, make_block, select_chain)


def test_block_hash_binds_every_field():
    base = block_hash(0, 1, GENESIS_HASH, b"0:")
    assert base != block_hash(1, 1, GENESIS_HASH, b"0:")
    assert base != block_hash(0, 2, GENESIS_HASH, b"0:")
    assert base != block_hash(0, 1, GENESIS_HASH, b"1:")
    assert base == block_hash(0, 1, GENESIS_HASH, b"0:")


def test_make_block_heights_and_token():
    a = make_block(0, 1, GENESIS, 3)
    b = make_block(1, 2, a, 0, b"n1")
    assert (a.index, b.index) == (1, 2)
    assert a.parent == GENESIS_HASH and b.parent == a.hash
    assert a.token == 3 and b.token == 0
    assert GENESIS.token == -1


def test_tree_rejects_orphans_and_walks_ancestors():
    tree = BlockTree()
    a = make_block(0, 1, GENESIS, 0)
    b = make_block(0, 2, a, 0)
    with pytest.raises(Exception):
        tree.add(b)
    tree.add(a)
    tree.add(b)
    assert [x.hash for x in tree.chain(b.hash)] == [GENESIS_HASH, a.hash, b.hash]
    assert tree.ancestor_at(b.hash, 1) == a.hash
    assert tree.ancestor_at(b.hash, 0) == GENESIS_HASH


def test_view_first_arrival_wins_ties():
    a = make_block(0, 1, GENESIS, 0)
    b = make_block(1, 1, GENESIS, 0)
    v = ChainView(0)
    v.receive_all([b, a])
    assert v.tip == b.hash
    assert select_chain(v) == b.hash


def test_view_moves_only_on_strictly_higher():
    a = make_block(0, 1, GENESIS, 0)
    b = make_block(1, 1, GENESIS, 0)
    c = make_block(1, 2, b, 0)
    v = ChainView(0)
    v.receive_all([a, b])
    assert v.tip == a.hash
    v.receive(c)
    assert v.tip == c.hash


def test_pending_pool_admits_when_parent_arrives():
    a = make_block(0, 1, GENESIS, 0)
    b = make_block(0, 2, a, 0)
    v = ChainView(0)
    v.receive(b)
    assert v.tip == GENESIS_HASH and v.pending_count == 1
    v.receive(a)
    assert v.tip == b.hash and v.pending_count == 0


def _chain(creator, parent, n, slot0=1):
    out = []
    for k in range(n):
        parent = make_block(creator, slot0 + k, parent, 0)
        out.append(parent)
    return out


def test_bounded_depth_refuses_deep_reorg():
    main = _chain(0, GENESIS, 5)
    fork = _chain(1, GENESIS, 7, slot0=10)
    deep = ChainView(0, ChainRule.BoundedDepthLongest, checkpoint_depth=2)
    deep.receive_all(main + fork)
    assert deep.tip == main[-1].hash
    assert select_chain(deep) == main[-1].hash
    free = ChainView(0)
    free.receive_all(main + fork)
    assert free.tip == fork[-1].hash
    # the longest-chain replay of the same log switches
    assert select_chain(deep, ChainRule.LongestChain) == fork[-1].hash


def test_bounded_depth_allows_shallow_reorg():
    main = _chain(0, GENESIS, 5)
    fork = _chain(1, main[2], 4, slot0=10)
    v = ChainView(0, ChainRule.BoundedDepthLongest, checkpoint_depth=3)
    v.receive_all(main + fork)
    assert v.tip == fork[-1].hash


def test_chain_csv_columns():
    blocks = _chain(0, GENESIS, 2)
    text = chain_to_csv([GENESIS, *blocks])
    lines = text.strip().splitlines()
    assert lines[0] == "height,hash,creator,slot"
    assert lines[2].startswith(f"1,{blocks[0].hash},0,1")


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 2), st.integers(0, 30)), min_size=1, max_size=25),
       st.randoms(use_true_random=False))
def test_incremental_tip_matches_recomputation(spec, rnd):
    # random tree, delivered in a random order: the incremental tip equals
    # the from-scratch longest-chain choice
    blocks = [GENESIS]
    for k, (creator, pick) in enumerate(spec):
        parent = blocks[pick % len(blocks)]
        blocks.append(make_block(creator, k + 1, parent, 0))
    order = blocks[1:]
    rnd.shuffle(order)
    v = ChainView(0)
    v.receive_all(order)
    assert v.pending_count == 0
    assert v.tip == select_chain(v)
    assert v.tip_height == max(b.index for b in blocks)
