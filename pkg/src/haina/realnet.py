"""Socket transport: the same request/broadcast contract as the simulator.

One TCP connection per request; round-trips are measured with the
monotonic clock.  Broadcast fans requests out on threads and joins at
the timeout.
"""

import socket
import time
from concurrent.futures import ThreadPoolExecutor

from .errors import NetworkError, ParseError
from .frames import FRAME_OVERHEAD, HEADER_FMT, MAGIC, MAX_FRAME, Frame, decode_frame, encode_frame


def send_frame(sock, frame: Frame):
    sock.sendall(encode_frame(frame))


def _recv_exact(sock, n: int):
    buf = bytearray()
    while len(buf) < n:
        chunk = sock.recv(n - len(buf))
        if not chunk:
            return None
        buf.extend(chunk)
    return bytes(buf)


def recv_frame(sock):
    """Read one frame; returns None on clean EOF before any byte."""
    head = _recv_exact(sock, FRAME_OVERHEAD)
    if head is None:
        return None
    magic, _, header_len, body_len = HEADER_FMT.unpack(head)
    if magic != MAGIC:
        raise ParseError("frame", f"bad magic {magic!r}")
    total = header_len + body_len
    if FRAME_OVERHEAD + total > MAX_FRAME:
        raise ParseError("frame", "declared frame size exceeds cap")
    rest = _recv_exact(sock, total)
    if rest is None:
        raise ParseError("frame", "connection closed mid-frame")
    return decode_frame(head + rest)


def parse_address(address: str):
    host, _, port = address.rpartition(":")
    try:
        return host, int(port)
    except ValueError:
        raise ParseError("address", f"{address!r} is not host:port") from None


class RealNet:
    """Client-side transport over TCP sockets.

    The `origin` argument is accepted for interface parity with the
    simulator; real sockets always originate from the caller's host.
    """

    def request(self, origin: str, dst: str, frame: Frame, timeout_ms: float = 1000.0):
        host, port = parse_address(dst)
        t0 = time.monotonic()
        try:
            with socket.create_connection((host, port), timeout=timeout_ms / 1000.0) as sock:
                sock.settimeout(timeout_ms / 1000.0)
                send_frame(sock, frame)
                reply = recv_frame(sock)
        except (OSError, socket.timeout) as exc:
            raise NetworkError(f"request to {dst} failed: {exc}") from None
        if reply is None:
            raise NetworkError(f"{dst} closed the connection")
        rtt = (time.monotonic() - t0) * 1000.0
        return reply, rtt

    def broadcast(self, origin: str, dsts, frame: Frame, timeout_ms: float = 1000.0) -> dict:
        results = {}
        if not dsts:
            return results
        with ThreadPoolExecutor(max_workers=min(len(dsts), 32)) as pool:
            futures = {
                dst: pool.submit(self.request, origin, dst, frame, timeout_ms) for dst in dsts
            }
            for dst, future in futures.items():
                try:
                    results[dst] = future.result()
                except NetworkError:
                    results[dst] = None
        return results
