"""Storage-right election: scoring, fairness check, storage verification.

A storage event walks the chain block by block.  The node holding the
current block (the beginner) polls every other roster member for free
space, scores each reply as k * free_gb / rtt_ms, and hands the
descending-sorted list to the user.  The user applies the fairness
check against its per-event tally and notifies the winner.
"""

from dataclasses import dataclass, field

from . import hashing
from .errors import CampaignError, IntegrityError, UsageError
from .frames import Frame, MsgType
from .nodefile import NodeFile, node_index


@dataclass
class PorConfig:
    k: float = 1.0  # value compression factor, 0 < k <= 1
    rate: float = 0.1  # per-event fairness threshold, fraction of blocks
    rate_increment: float = None  # escalation step; defaults to the initial rate
    timeout_ms: float = 1000.0
    max_store_retries: int = 3

    def __post_init__(self):
        if not 0 < self.k <= 1:
            raise UsageError("k must satisfy 0 < k <= 1")
        if not 0 < self.rate <= 1:
            raise UsageError("rate must satisfy 0 < rate <= 1")
        if self.rate_increment is None:
            self.rate_increment = self.rate


@dataclass(frozen=True)
class CandidateRecord:
    address: str
    freespace_gb: float
    rtt_ms: float
    value: float
    nf_index: int


@dataclass
class ProvisionalRecords:
    """Per-event tally of blocks stored by each node; destroyed afterwards."""

    total_blocks: int
    counts: dict = field(default_factory=dict)

    def count(self, address: str) -> int:
        return self.counts.get(address, 0)

    def record(self, address: str):
        if sum(self.counts.values()) >= self.total_blocks:
            raise UsageError("event already holds all its blocks")
        self.counts[address] = self.counts.get(address, 0) + 1

    def unrecord(self, address: str):
        self.counts[address] -= 1
        if self.counts[address] <= 0:
            del self.counts[address]


@dataclass(frozen=True)
class CampaignResult:
    candidates: tuple  # CandidateRecords, value-descending
    elapsed_ms: float


def judge(nc_gb: float, rtt_ms: float, k: float = 1.0) -> float:
    """Score a candidate: k * capacity / round-trip, with RTT clamped up to 1 ms."""
    if nc_gb < 0:
        raise UsageError("free capacity cannot be negative")
    if not 0 < k <= 1:
        raise UsageError("k must satisfy 0 < k <= 1")
    return k * nc_gb / max(rtt_ms, 1.0)


def pick_first_beginner(nf: NodeFile, draw: int) -> str:
    """Select the head node: 1-based index (draw mod N) + 1 into the roster."""
    if len(nf) == 0:
        raise UsageError("node file is empty")
    if draw < 0:
        raise UsageError("rng draw must be non-negative")
    return nf.addresses[draw % len(nf)]


BYTES_PER_GB = 10**9


def run_campaign(transport, beginner: str, next_block_size: int, nf: NodeFile, cfg: PorConfig) -> CampaignResult:
    """Poll every roster member except the beginner and rank the replies.

    A node appears in the result only if it answered within the timeout
    with enough free space; refusals and silence drop it for this round.
    Ties in value keep node-file order.
    """
    followers = [a for a in nf.addresses if a != beginner]
    if not followers:
        raise CampaignError("no follower to poll: node file has a single member")
    election = Frame(MsgType.ELECTION, {"size": str(next_block_size)})
    replies = transport.broadcast(beginner, followers, election, cfg.timeout_ms)

    candidates = []
    elapsed = 0.0
    missing = False
    for addr in followers:
        reply = replies.get(addr)
        if reply is None:
            missing = True
            continue
        frame, rtt = reply
        elapsed = max(elapsed, rtt)
        if frame.type is not MsgType.TAKEPART:
            continue
        freespace = int(frame.header.get("freespace", "0"))
        if freespace < next_block_size:
            continue
        nc_gb = freespace / BYTES_PER_GB
        candidates.append(
            CandidateRecord(
                address=addr,
                freespace_gb=nc_gb,
                rtt_ms=rtt,
                value=judge(nc_gb, rtt, cfg.k),
                nf_index=node_index(nf, addr),
            )
        )
    if missing:
        elapsed = max(elapsed, cfg.timeout_ms)
    candidates.sort(key=lambda c: (-c.value, c.nf_index))
    if not candidates:
        raise CampaignError(f"no candidate can hold a {next_block_size}-byte block")
    return CampaignResult(candidates=tuple(candidates), elapsed_ms=elapsed)


def check_rate(candidates, records: ProvisionalRecords, rate: float, rate_increment: float):
    """Fairness check over a value-sorted candidate list.

    Preference order: (a) best candidate holding nothing yet; (b) best
    candidate whose post-store share stays within `rate`; (c) fall back
    to the top candidate and escalate the threshold.

    Returns (chosen address, new rate, escalated flag).
    """
    if not candidates:
        raise CampaignError("no candidate to check")
    m = records.total_blocks
    for cand in candidates:
        if records.count(cand.address) == 0:
            return cand.address, rate, False
    for cand in candidates:
        if (records.count(cand.address) + 1) / m <= rate:
            return cand.address, rate, False
    return candidates[0].address, rate + rate_increment, True


def check_store(transport, origin: str, node: str, expected: bytes, timeout_ms: float = 1000.0) -> bool:
    """Ask a node for the digest of a block it claims to hold.

    True iff the node's recomputed digest matches the locally computed
    content address.  Unreachable nodes raise, they do not count as a
    mismatch.
    """
    expected = hashing.check_digest(expected)
    frame = Frame(MsgType.CHECK_STORE, {"address": expected.hex()})
    reply, _ = transport.request(origin, node, frame, timeout_ms)
    if reply.type is MsgType.ERROR:
        return False
    if reply.type is not MsgType.CHECK_STORE_REPLY:
        raise IntegrityError(f"unexpected reply {reply.type.name} to a storage check")
    return reply.header.get("digest", "") == expected.hex()
