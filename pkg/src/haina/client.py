"""User-side orchestration: upload placement and bidirectional recovery.

Upload runs the whole pre-processing pipeline, places block after
block through the election protocol, verifies each store, and emits
the meta file.  Download walks the stored chain from the header block
with a forward and a backward cursor at once, then reassembles and
decrypts the file.
"""

import random
import time
from dataclasses import dataclass, field

from . import hashing
from .chain import Block, build_chain, content_address, deserialize_block, serialize_block
from .crypto import (
    CipherConfig,
    decrypt_file,
    embed_key_shards,
    encrypt_file,
    extract_key_shards,
    generate_key,
    generate_mask,
    split_ciphertext,
)
from .errors import (
    CampaignError,
    IncompleteChainError,
    IntegrityError,
    NetworkError,
    UsageError,
)
from .frames import Frame, MsgType
from .locking import lock_chain, unlock_block
from .metafile import MetaFile, build_meta_file
from .node import decode_candidates
from .nodefile import NodeFile
from .por import PorConfig, ProvisionalRecords, check_rate, check_store, pick_first_beginner
from .resolve import resolve

USER_ADDRESS = "user:0"


@dataclass
class UploadReport:
    meta: MetaFile
    placements: list  # block index (0-based) -> node address
    decision_ms: list  # per-block campaign duration at the beginner
    transfer_ms: list  # per-block store round-trip minus the campaign
    stage_ms: dict  # wall-clock: encrypt, chain_build
    escalations: list  # (block index, new rate)
    block_sizes: list  # serialized block sizes


@dataclass
class FetchPlan:
    header_address: bytes
    mask: bytes
    n: int
    forward: bytes = None  # next address the forward cursor wants
    backward: bytes = None
    fetched: dict = field(default_factory=dict)  # address -> unlocked Block
    forward_alive: bool = True
    backward_alive: bool = True


@dataclass
class FetchResult:
    blocks: list  # chain order, starting at the header
    elapsed_ms: float
    rounds: int
    missing: list


@dataclass
class DownloadReport:
    data: bytes
    mode: str
    fetch_ms: float
    rounds: int
    stage_ms: dict


def _store_timeout(cfg: PorConfig) -> float:
    # a store round-trip nests the campaign, so it needs headroom
    return cfg.timeout_ms * 4


def _place_block(transport, node, block, next_size, elect, cfg):
    frame = Frame(
        MsgType.STORE_READY,
        {"next_size": str(next_size), "elect": "1" if elect else "0"},
        serialize_block(block),
    )
    reply, rtt = transport.request(USER_ADDRESS, node, frame, _store_timeout(cfg))
    if reply.type is not MsgType.STORE_ACK:
        reason = reply.header.get("reason", reply.type.name)
        raise NetworkError(f"store on {node} rejected: {reason}")
    campaign_ms = float(reply.header.get("campaign_ms", "0") or 0)
    candidates = None
    if elect:
        if "candidates" in reply.header:
            candidates = decode_candidates(reply.header["candidates"])
        else:
            raise CampaignError(
                reply.header.get("campaign_error", f"beginner {node} returned no candidates")
            )
    return candidates, campaign_ms, rtt


def upload(
    file: bytes,
    n: int,
    cfg: PorConfig,
    nf: NodeFile,
    transport,
    rng=None,
    seed: int = None,
    timestamp_ns: int = None,
    hash_alg: str = hashing.DEFAULT_ALGORITHM,
) -> UploadReport:
    """Encrypt, shard, chain, lock, and place a file on the cluster.

    With `seed` (or an explicit `rng`) the whole run is reproducible:
    key timestamp, mask, IV, and first-beginner draws all come from the
    injected randomness.
    """
    if not file:
        raise UsageError("cannot upload an empty file")
    if len(nf) < 2:
        raise UsageError("storage needs at least 2 nodes in the roster")
    if rng is None:
        rng = random.Random(seed)
        if seed is None:
            rng.seed(time.time_ns())
    if timestamp_ns is None:
        timestamp_ns = rng.getrandbits(64)

    t0 = time.perf_counter()
    key = generate_key(file, timestamp_ns, hash_alg)
    mask = generate_mask(rng)
    cipher_cfg = CipherConfig(iv=rng.randbytes(16))
    ef = encrypt_file(file, key, cipher_cfg)
    if n > len(ef):
        raise UsageError(
            f"block count {n} exceeds ciphertext length {len(ef)}; choose a smaller block count"
        )
    encrypt_ms = (time.perf_counter() - t0) * 1000.0

    t0 = time.perf_counter()
    domains = embed_key_shards(split_ciphertext(ef, n), key)
    if len({hashing.digest(d, hash_alg) for d in domains}) < n:
        # content addressing cannot tell identical data domains apart;
        # only degenerate slice sizes (a few bytes) can collide
        raise UsageError(
            f"block count {n} produces duplicate block contents for this file; "
            "choose a smaller block count"
        )
    chain = build_chain(domains, hash_alg)
    locked = lock_chain(chain, mask)
    chain_ms = (time.perf_counter() - t0) * 1000.0

    blocks = locked.blocks
    sizes = [len(serialize_block(b)) for b in blocks]
    records = ProvisionalRecords(total_blocks=n)
    placements = [None] * n
    decision_ms = [0.0] * n
    transfer_ms = [0.0] * n
    escalations = []
    rate = cfg.rate

    first_beginner = _pick_reachable_beginner(transport, nf, rng, cfg)
    current = first_beginner
    prev_candidates = None  # candidate list that elected the current node

    i = 0
    while i < n:
        block = blocks[i]
        next_size = sizes[(i + 1) % n]
        elect = i < n - 1
        retries = 0
        failed = set()
        while True:
            candidates, campaign_ms, rtt = _place_block(
                transport, current, block, next_size, elect, cfg
            )
            records.record(current)
            if check_store(transport, USER_ADDRESS, current, content_address(block, hash_alg), cfg.timeout_ms):
                break
            records.unrecord(current)
            failed.add(current)
            retries += 1
            if retries > cfg.max_store_retries:
                raise IntegrityError(
                    f"block {i + 1} failed storage verification on {current} after {retries} attempts"
                )
            current = _next_replacement(
                transport, nf, rng, cfg, records, rate, prev_candidates, failed, i
            )
            if i == 0:
                first_beginner = current
        placements[i] = current
        decision_ms[i] = campaign_ms
        transfer_ms[i] = rtt - campaign_ms
        if elect:
            chosen, rate, escalated = check_rate(candidates, records, rate, cfg.rate_increment)
            if escalated:
                escalations.append((i + 1, rate))
            prev_candidates = candidates
            current = chosen
        i += 1

    meta = build_meta_file(
        first_beginner=first_beginner,
        header_digest=content_address(blocks[0], hash_alg),
        mask=mask,
        block_count=n,
        cipher_cfg=cipher_cfg,
        file_length=len(file),
        hash_alg=hash_alg,
    )
    return UploadReport(
        meta=meta,
        placements=placements,
        decision_ms=decision_ms,
        transfer_ms=transfer_ms,
        stage_ms={"encrypt": encrypt_ms, "chain_build": chain_ms},
        escalations=escalations,
        block_sizes=sizes,
    )


def _pick_reachable_beginner(transport, nf, rng, cfg, excluded=()):
    last_error = None
    for _ in range((cfg.max_store_retries + 1) * max(len(nf), 1)):
        candidate = pick_first_beginner(nf, rng.getrandbits(32))
        if candidate in excluded:
            continue
        try:
            reply, _ = transport.request(USER_ADDRESS, candidate, Frame(MsgType.PING), cfg.timeout_ms)
            if reply.type is MsgType.PONG:
                return candidate
        except NetworkError as exc:
            last_error = exc
    raise NetworkError(f"no reachable first beginner found: {last_error}")


def _next_replacement(transport, nf, rng, cfg, records, rate, prev_candidates, failed, block_index):
    """After a failed storage check, pick the next node to try."""
    if block_index == 0 or not prev_candidates:
        return _pick_reachable_beginner(transport, nf, rng, cfg, excluded=failed)
    remaining = [c for c in prev_candidates if c.address not in failed]
    if not remaining:
        raise CampaignError(f"no remaining candidate for block {block_index + 1}")
    chosen, _, _ = check_rate(remaining, records, rate, cfg.rate_increment)
    return chosen


def _fetch_block(transport, address, nf, timeout_ms, direct_node=None):
    """Fetch one serialized block, resolving the holder first if needed.

    Returns (locked Block, modeled fetch time in ms).
    """
    elapsed = 0.0
    node = direct_node
    if node is None:
        node, resolve_ms = resolve(transport, USER_ADDRESS, address, nf, timeout_ms)
        elapsed += resolve_ms
    reply, rtt = transport.request(
        USER_ADDRESS, node, Frame(MsgType.GET_BLOCK, {"address": address.hex()}), timeout_ms
    )
    elapsed += rtt
    if reply.type is not MsgType.BLOCK_DATA:
        raise IncompleteChainError([address])
    return deserialize_block(reply.body), elapsed


def _advance(plan: FetchPlan, address: bytes, block: Block):
    unlocked = unlock_block(block, plan.mask)
    plan.fetched[address] = unlocked
    return unlocked


def _fetch_rounds(plan: FetchPlan, fetcher, bidirectional: bool) -> FetchResult:
    """Advance the cursor(s) round by round until the chain is held.

    Both cursors run concurrently in a round; the round costs the
    slower of the two fetches.  A cursor stops at an already-fetched
    address (the circle has closed) or at an unresolvable one.
    """
    elapsed = 0.0
    rounds = 0
    missing = []
    while len(plan.fetched) < plan.n:
        targets = []
        if plan.forward_alive and plan.forward not in plan.fetched:
            targets.append(("forward", plan.forward))
        if (
            bidirectional
            and plan.backward_alive
            and plan.backward not in plan.fetched
            and all(t[1] != plan.backward for t in targets)
        ):
            targets.append(("backward", plan.backward))
        if not targets:
            break
        round_ms = 0.0
        for direction, address in targets:
            try:
                block, ms = fetcher(address)
            except (IncompleteChainError, NetworkError):
                if address not in missing:
                    missing.append(address)
                if direction == "forward":
                    plan.forward_alive = False
                else:
                    plan.backward_alive = False
                continue
            round_ms = max(round_ms, ms)
            unlocked = _advance(plan, address, block)
            if direction == "forward":
                plan.forward = unlocked.next_hash
            else:
                plan.backward = unlocked.previous_hash
        elapsed += round_ms
        rounds += 1
    blocks, order_missing = _chain_order(plan)
    missing.extend(a for a in order_missing if a not in missing)
    return FetchResult(blocks=blocks, elapsed_ms=elapsed, rounds=rounds, missing=missing)


def _chain_order(plan: FetchPlan):
    """Order fetched blocks by walking next pointers from the header."""
    blocks = []
    missing = []
    address = plan.header_address
    for _ in range(plan.n):
        block = plan.fetched.get(address)
        if block is None:
            missing.append(address)
            break
        blocks.append(block)
        address = block.next_hash
    return blocks, missing


def _make_plan(meta: MetaFile, header_block: Block) -> FetchPlan:
    unlocked = unlock_block(header_block, meta.mask)
    plan = FetchPlan(
        header_address=meta.header_digest,
        mask=meta.mask,
        n=meta.block_count,
        forward=unlocked.next_hash,
        backward=unlocked.previous_hash,
    )
    plan.fetched[meta.header_digest] = unlocked
    return plan


def bdam_fetch(plan: FetchPlan, fetcher) -> FetchResult:
    """Concurrent forward and backward cursor fetch of the full chain."""
    return _fetch_rounds(plan, fetcher, bidirectional=True)


def unidirectional_fetch(plan: FetchPlan, fetcher) -> FetchResult:
    """Baseline: forward cursor only."""
    return _fetch_rounds(plan, fetcher, bidirectional=False)


def download(
    meta: MetaFile,
    nf: NodeFile,
    transport,
    mode: str = "bi",
    timeout_ms: float = 1000.0,
) -> DownloadReport:
    """Recover a file from the cluster using its meta file.

    `mode` is "bi" (both cursors) or "uni" (forward only); both produce
    identical bytes, only the fetch timing differs.
    """
    if mode not in ("bi", "uni"):
        raise UsageError(f"mode must be 'bi' or 'uni', not {mode!r}")

    # header block: ask the recorded first beginner, fall back to resolution
    header_ms = 0.0
    try:
        header_block, header_ms = _fetch_block(
            transport, meta.header_digest, nf, timeout_ms, direct_node=meta.first_beginner
        )
    except (NetworkError, IncompleteChainError):
        header_block, header_ms = _fetch_block(transport, meta.header_digest, nf, timeout_ms)

    plan = _make_plan(meta, header_block)

    def fetcher(address):
        return _fetch_block(transport, address, nf, timeout_ms)

    t0 = time.perf_counter()
    if mode == "bi":
        result = bdam_fetch(plan, fetcher)
    else:
        result = unidirectional_fetch(plan, fetcher)
    if len(result.blocks) < meta.block_count:
        raise IncompleteChainError(result.missing or [meta.header_digest])

    key, slices = extract_key_shards([b.data for b in result.blocks])
    ef = b"".join(slices)
    plaintext = decrypt_file(ef, key, meta.cipher_cfg)
    if len(plaintext) < meta.file_length:
        raise IntegrityError(
            f"recovered {len(plaintext)} bytes but the meta file records {meta.file_length}"
        )
    plaintext = plaintext[: meta.file_length]
    disassemble_ms = (time.perf_counter() - t0) * 1000.0

    return DownloadReport(
        data=plaintext,
        mode=mode,
        fetch_ms=header_ms + result.elapsed_ms,
        rounds=result.rounds,
        stage_ms={"header_fetch": header_ms, "disassemble_wall": disassemble_ms},
    )


def speedup(bi_ms: float, uni_ms: float) -> float:
    """Fractional time saved by the bidirectional fetch: 1 - bi/uni."""
    if uni_ms <= 0:
        raise UsageError("baseline time must be positive")
    return 1.0 - bi_ms / uni_ms
