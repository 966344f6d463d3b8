"""Deterministic simulated network with virtual time.

Each message is delayed by the ordered-pair one-way latency plus
seeded jitter.  The whole simulation is single-threaded: concurrent
fan-out (election polls, resolver broadcasts) is modeled by charging
the maximum of the individual round-trips rather than their sum, so a
fixed seed reproduces every trace and timing bit-for-bit.
"""

import math
import random

from .errors import NetworkError, UsageError
from .frames import Frame

UNREACHABLE = math.inf


class LinkModel:
    """One-way latencies: uniform base or a full per-pair matrix, plus jitter.

    `matrix` maps (src, dst) -> ms and overrides the uniform base;
    a latency of `UNREACHABLE` models a partitioned link.
    """

    def __init__(self, latency_ms: float = 25.0, jitter_ms: float = 0.0, seed: int = 0, matrix=None):
        if latency_ms < 0 or jitter_ms < 0:
            raise UsageError("latency and jitter cannot be negative")
        self.latency_ms = latency_ms
        self.jitter_ms = jitter_ms
        self.matrix = dict(matrix) if matrix else {}
        self.seed = seed
        self._rng = random.Random(seed)

    def one_way(self, src: str, dst: str) -> float:
        base = self.matrix.get((src, dst), self.latency_ms)
        if base is UNREACHABLE or base == UNREACHABLE:
            return UNREACHABLE
        if self.jitter_ms:
            return base + self._rng.uniform(-self.jitter_ms, self.jitter_ms)
        return base


class SimNet:
    """Virtual-time transport connecting in-process node services."""

    def __init__(self, link: LinkModel, processing_ms: float = 0.0):
        self.link = link
        self.processing_ms = processing_ms
        self.services = {}
        self.clock = 0.0
        self.trace = []  # (virtual time, origin, dst, message type name)

    def add_node(self, address: str, service):
        self.services[address] = service
        if hasattr(service, "transport"):
            service.transport = self

    def remove_node(self, address: str):
        self.services.pop(address, None)

    def request(self, origin: str, dst: str, frame: Frame, timeout_ms: float = 1000.0):
        """Deliver one frame and return (reply, measured round-trip ms)."""
        t0 = self.clock
        service = self.services.get(dst)
        forward = self.link.one_way(origin, dst)
        if service is None or forward is UNREACHABLE:
            self.clock = t0 + timeout_ms
            raise NetworkError(f"{dst} unreachable from {origin}")
        self.trace.append((round(t0, 6), origin, dst, frame.type.name))
        self.clock = t0 + forward
        reply = service.handle(frame)
        self.clock += self.processing_ms
        backward = self.link.one_way(dst, origin)
        if backward is UNREACHABLE:
            self.clock = t0 + timeout_ms
            raise NetworkError(f"no return path from {dst} to {origin}")
        self.clock += backward
        rtt = self.clock - t0
        if rtt > timeout_ms:
            self.clock = t0 + timeout_ms
            raise NetworkError(f"request to {dst} timed out after {timeout_ms} ms")
        self.trace.append((round(self.clock, 6), dst, origin, reply.type.name))
        return reply, rtt

    def broadcast(self, origin: str, dsts, frame: Frame, timeout_ms: float = 1000.0) -> dict:
        """Fan a frame out to many nodes at once.

        All requests are in flight simultaneously, so virtual time
        advances by the slowest reply (or by the timeout if any target
        never answers), not by the sum.
        """
        t0 = self.clock
        results = {}
        elapsed = 0.0
        for dst in dsts:
            self.clock = t0
            try:
                reply, rtt = self.request(origin, dst, frame, timeout_ms)
                results[dst] = (reply, rtt)
                elapsed = max(elapsed, rtt)
            except NetworkError:
                results[dst] = None
                elapsed = timeout_ms
        self.clock = t0 + elapsed
        return results
