"""
Longest chain and first-arrival tie-breaking
============================================

Feed blocks to a local view by hand and watch the adopted tip move.
"""
from compliance_lab.ledger import GENESIS, ChainRule, ChainView, make_block, select_chain

view = ChainView(owner=0)
a1 = make_block(1, 1, GENESIS, token=0)
b1 = make_block(2, 1, GENESIS, token=0)
view.receive_all([a1, b1])
# equal height: the block that arrived first stays adopted
print("tip after a1, b1:", view.tip_block.creator)

b2 = make_block(2, 2, b1, token=1)
view.receive(b2)
print("tip after b2:", view.tip_block.creator, "height", view.tip_height)

# a block whose parent is unknown waits in the pending pool
a3 = make_block(1, 3, make_block(1, 2, a1, token=1), token=2)
view.receive(a3)
print("pending:", view.pending_count, "tip height still", view.tip_height)

# recomputing from the arrival log agrees with the incremental tip
assert select_chain(view) == view.tip

# bounded depth refuses reorganisations deeper than the checkpoint
bounded = ChainView(0, ChainRule.BoundedDepthLongest, checkpoint_depth=2)
main = [GENESIS]
for s in range(1, 6):
    main.append(make_block(1, s, main[-1], token=s))
fork = [GENESIS]
for s in range(1, 8):
    fork.append(make_block(2, s, fork[-1], token=s))
bounded.receive_all(main[1:] + fork[1:])
print("bounded-depth tip creator:", bounded.tip_block.creator, "height", bounded.tip_height)
