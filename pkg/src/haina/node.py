"""Node-side service logic, shared by the simulated and real transports.

A node answers liveness pings, serves its roster and blocks, stores
incoming blocks, and (as the current beginner) runs the storage-right
campaign for the next block, returning the ranked candidates in its
store acknowledgement.
"""

import json
import socketserver
import threading

from .blockstore import BlockStore
from .errors import CampaignError, HainaError
from .frames import Frame, MsgType, error_frame
from .nodefile import NodeFile
from .por import CampaignResult, CandidateRecord, PorConfig, run_campaign


def encode_candidates(result: CampaignResult) -> str:
    return json.dumps(
        [
            {
                "address": c.address,
                "freespace_gb": c.freespace_gb,
                "rtt_ms": c.rtt_ms,
                "value": c.value,
                "nf_index": c.nf_index,
            }
            for c in result.candidates
        ],
        separators=(",", ":"),
    )


def decode_candidates(text: str):
    return tuple(CandidateRecord(**d) for d in json.loads(text))


class NodeService:
    """Protocol handler for one storage node.

    `corrupt_storage` makes the node byzantine for fault-injection
    tests: it acknowledges stores but keeps altered bytes.
    """

    def __init__(
        self,
        address: str,
        store: BlockStore,
        nf: NodeFile,
        por_cfg: PorConfig = None,
        transport=None,
        corrupt_storage: bool = False,
    ):
        self.address = address
        self.store = store
        self.nf = nf
        self.por_cfg = por_cfg or PorConfig()
        self.transport = transport
        self.corrupt_storage = corrupt_storage

    def handle(self, frame: Frame) -> Frame:
        try:
            handler = getattr(self, f"_on_{frame.type.name.lower()}", None)
            if handler is None:
                return error_frame(f"unsupported message type {frame.type.name}")
            return handler(frame)
        except HainaError as exc:
            return error_frame(str(exc))

    def _on_ping(self, frame):
        return Frame(MsgType.PONG, {"node": self.address})

    def _on_get_nf(self, frame):
        return Frame(
            MsgType.NF_DATA,
            {"digest": self.nf.digest.hex()},
            self.nf.canonical_bytes(),
        )

    def _on_store_ready(self, frame):
        raw = frame.body
        if self.corrupt_storage and len(raw) > 104:
            # flip one data-domain byte; the claimed store is fake
            raw = raw[:-1] + bytes([raw[-1] ^ 0xFF])
        address = self.store.put(raw)
        header = {"stored": address.hex()}
        next_size = int(frame.header.get("next_size", "0"))
        elect = frame.header.get("elect", "0") == "1"
        if elect:
            try:
                result = run_campaign(self.transport, self.address, next_size, self.nf, self.por_cfg)
                header["candidates"] = encode_candidates(result)
                header["campaign_ms"] = repr(result.elapsed_ms)
            except CampaignError as exc:
                header["campaign_error"] = str(exc)
        return Frame(MsgType.STORE_ACK, header)

    def _on_election(self, frame):
        size = int(frame.header.get("size", "0"))
        free = self.store.freespace
        if free >= size and size >= 0:
            return Frame(MsgType.TAKEPART, {"freespace": str(free)})
        return Frame(MsgType.REFUSE, {"freespace": str(free)})

    def _on_check_store(self, frame):
        address = bytes.fromhex(frame.header["address"])
        if not self.store.has(address):
            return error_frame(f"no block stored at {address.hex()}")
        return Frame(MsgType.CHECK_STORE_REPLY, {"digest": self.store.stored_digest(address).hex()})

    def _on_get_block(self, frame):
        address = bytes.fromhex(frame.header["address"])
        if not self.store.has(address):
            return error_frame(f"no block stored at {address.hex()}")
        return Frame(MsgType.BLOCK_DATA, {"address": address.hex()}, self.store.get(address))

    def _on_has_block(self, frame):
        address = bytes.fromhex(frame.header["address"])
        return Frame(MsgType.HAS_BLOCK_REPLY, {"has": "1" if self.store.has(address) else "0"})


class _FrameRequestHandler(socketserver.BaseRequestHandler):
    def handle(self):
        from .realnet import recv_frame, send_frame

        while True:
            try:
                frame = recv_frame(self.request)
            except (ConnectionError, OSError, HainaError):
                return
            if frame is None:
                return
            reply = self.server.service.handle(frame)
            try:
                send_frame(self.request, reply)
            except (ConnectionError, OSError):
                return


class NodeServer(socketserver.ThreadingTCPServer):
    """Real TCP server wrapping a NodeService."""

    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, listen, service: NodeService):
        self.service = service
        super().__init__(listen, _FrameRequestHandler)

    def serve_background(self):
        thread = threading.Thread(target=self.serve_forever, daemon=True)
        thread.start()
        return thread
