"""Bi-directional circular hash-linked chain of blocks.

Each block has a pointer domain (previous/current/next 256-bit digests)
and a data domain (raw payload bytes).  In the unlocked state the
pointers of block i are the data-domain hashes of blocks i-1, i, i+1
(indices mod chain length), so the chain forms a verifiable circle.

Only the data domain is hashed: the content address of a block is
stable whether its neighbor pointers are locked or not.
"""

import struct
from dataclasses import dataclass
from enum import Enum

from . import hashing
from .errors import StateError, UsageError


class LockState(Enum):
    UNLOCKED = "unlocked"
    LOCKED = "locked"


@dataclass(frozen=True)
class Block:
    previous_hash: bytes
    current_hash: bytes
    next_hash: bytes
    data: bytes
    state: LockState = LockState.UNLOCKED

    def __post_init__(self):
        hashing.check_digest(self.previous_hash)
        hashing.check_digest(self.current_hash)
        hashing.check_digest(self.next_hash)
        if not self.data:
            raise UsageError("block data domain must be non-empty")


@dataclass(frozen=True)
class Chain:
    blocks: tuple
    state: LockState = LockState.UNLOCKED
    hash_alg: str = hashing.DEFAULT_ALGORITHM

    def __len__(self):
        return len(self.blocks)


@dataclass(frozen=True)
class Violation:
    """A single broken link: which block, which pointer field."""

    block_index: int  # 0-based
    field: str  # "previous" | "current" | "next"

    def __str__(self):
        return f"block {self.block_index}: {self.field}_hash does not match neighbor data"


def content_address(block: Block, hash_alg: str = hashing.DEFAULT_ALGORITHM) -> bytes:
    """Content address of a block: the hash of its data domain.

    Identical for locked and unlocked blocks.
    """
    return hashing.digest(block.data, hash_alg)


def build_chain(payloads, hash_alg: str = hashing.DEFAULT_ALGORITHM) -> Chain:
    """Build an unlocked circular chain over the given data-domain payloads.

    Block i points backward to H(payload[i-1]) and forward to
    H(payload[i+1]) with wrap-around, so a single payload yields a
    self-referential block.
    """
    payloads = [bytes(p) for p in payloads]
    if not payloads:
        raise UsageError("cannot build a chain from an empty payload list")
    if any(len(p) == 0 for p in payloads):
        raise UsageError("every data-domain payload must be non-empty")

    digests = [hashing.digest(p, hash_alg) for p in payloads]
    m = len(payloads)
    blocks = tuple(
        Block(
            previous_hash=digests[(i - 1) % m],
            current_hash=digests[i],
            next_hash=digests[(i + 1) % m],
            data=payloads[i],
        )
        for i in range(m)
    )
    return Chain(blocks=blocks, state=LockState.UNLOCKED, hash_alg=hash_alg)


def verify_chain(chain: Chain) -> list:
    """Recompute every data hash and report each pointer that disagrees.

    Returns an empty list for a valid chain.  Defined on unlocked
    pointers only.
    """
    if chain.state is not LockState.UNLOCKED:
        raise StateError("verify_chain is defined on unlocked chains only")
    m = len(chain.blocks)
    digests = [hashing.digest(b.data, chain.hash_alg) for b in chain.blocks]
    violations = []
    for i, block in enumerate(chain.blocks):
        if block.previous_hash != digests[(i - 1) % m]:
            violations.append(Violation(i, "previous"))
        if block.current_hash != digests[i]:
            violations.append(Violation(i, "current"))
        if block.next_hash != digests[(i + 1) % m]:
            violations.append(Violation(i, "next"))
    return violations


_LEN = struct.Struct(">Q")


def serialize_block(block: Block) -> bytes:
    """Bit-exact wire/disk form: prev(32) || cur(32) || next(32) || len(8 BE) || data."""
    return b"".join(
        (
            block.previous_hash,
            block.current_hash,
            block.next_hash,
            _LEN.pack(len(block.data)),
            block.data,
        )
    )


def deserialize_block(raw: bytes, state: LockState = LockState.LOCKED) -> Block:
    if len(raw) < 104:
        raise UsageError(f"serialized block too short: {len(raw)} bytes")
    (length,) = _LEN.unpack_from(raw, 96)
    if len(raw) != 104 + length:
        raise UsageError(f"serialized block length mismatch: header says {length}")
    return Block(
        previous_hash=raw[0:32],
        current_hash=raw[32:64],
        next_hash=raw[64:96],
        data=raw[104:],
        state=state,
    )
