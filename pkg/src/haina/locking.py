"""Pointer locking: XOR the neighbor pointers of every block with a mask.

A locked block's previous/next pointers are useless without the mask,
so a stolen block cannot be used to walk the chain.  The current-hash
(content address) is left untouched so locked blocks stay retrievable
by content addressing.  XOR is its own inverse, so unlocking is the
same operation.
"""

from .chain import Block, Chain, LockState
from .errors import StateError, UsageError

MASK_SIZE = 32


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def check_mask(mask: bytes) -> bytes:
    if len(mask) != MASK_SIZE:
        raise UsageError(f"mask must be {MASK_SIZE} bytes, got {len(mask)}")
    if not any(mask):
        raise UsageError("mask must be nonzero")
    return bytes(mask)


def lock_chain(chain: Chain, mask: bytes) -> Chain:
    """Return a LOCKED copy of the chain with masked neighbor pointers."""
    check_mask(mask)
    if chain.state is not LockState.UNLOCKED:
        raise StateError("chain is already locked")
    blocks = tuple(
        Block(
            previous_hash=_xor(b.previous_hash, mask),
            current_hash=b.current_hash,
            next_hash=_xor(b.next_hash, mask),
            data=b.data,
            state=LockState.LOCKED,
        )
        for b in chain.blocks
    )
    return Chain(blocks=blocks, state=LockState.LOCKED, hash_alg=chain.hash_alg)


def unlock_chain(chain: Chain, mask: bytes) -> Chain:
    """Inverse of lock_chain (same XOR, flipped state)."""
    check_mask(mask)
    if chain.state is not LockState.LOCKED:
        raise StateError("chain is not locked")
    blocks = tuple(
        Block(
            previous_hash=_xor(b.previous_hash, mask),
            current_hash=b.current_hash,
            next_hash=_xor(b.next_hash, mask),
            data=b.data,
            state=LockState.UNLOCKED,
        )
        for b in chain.blocks
    )
    return Chain(blocks=blocks, state=LockState.UNLOCKED, hash_alg=chain.hash_alg)


def unlock_pointers(block: Block, mask: bytes):
    """Recover a locked block's neighbor content addresses without mutating it.

    Returns (previous, next).  A wrong mask simply yields digests that
    resolve nowhere; that is the security property, not an error.
    """
    if len(mask) != MASK_SIZE:
        raise UsageError(f"mask must be {MASK_SIZE} bytes, got {len(mask)}")
    return _xor(block.previous_hash, mask), _xor(block.next_hash, mask)


def unlock_block(block: Block, mask: bytes) -> Block:
    previous, nxt = unlock_pointers(block, mask)
    return Block(
        previous_hash=previous,
        current_hash=block.current_hash,
        next_hash=nxt,
        data=block.data,
        state=LockState.UNLOCKED,
    )
