"""Content-address resolution over the node roster."""

from .errors import IncompleteChainError
from .frames import Frame, MsgType
from .nodefile import NodeFile


def resolve(transport, origin: str, address: bytes, nf: NodeFile, timeout_ms: float = 1000.0):
    """Find a node holding the block with this content address.

    Queries every roster member concurrently; the fastest positive
    reply wins (deterministic under the simulated transport).  Returns
    (node address, elapsed ms to the winning reply).
    """
    if len(nf) == 0:
        raise IncompleteChainError([address])
    query = Frame(MsgType.HAS_BLOCK, {"address": address.hex()})
    replies = transport.broadcast(origin, nf.addresses, query, timeout_ms)
    best = None
    for node in nf.addresses:
        reply = replies.get(node)
        if reply is None:
            continue
        frame, rtt = reply
        if frame.type is MsgType.HAS_BLOCK_REPLY and frame.header.get("has") == "1":
            if best is None or rtt < best[1]:
                best = (node, rtt)
    if best is None:
        raise IncompleteChainError([address])
    return best
