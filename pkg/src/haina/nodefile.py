"""The shared roster of storage-node addresses.

Canonical form: UTF-8, one host:port per line, lexicographically
sorted, trailing newline.  The digest of exactly those bytes is what
peers compare when synchronizing.
"""

from dataclasses import dataclass

from . import hashing
from .errors import IntegrityError, ParseError, UsageError


@dataclass(frozen=True)
class NodeFile:
    addresses: tuple
    hash_alg: str = hashing.DEFAULT_ALGORITHM

    def __len__(self):
        return len(self.addresses)

    def canonical_bytes(self) -> bytes:
        return "".join(a + "\n" for a in self.addresses).encode("utf-8")

    @property
    def digest(self) -> bytes:
        return hashing.digest(self.canonical_bytes(), self.hash_alg)


def make_node_file(addresses, hash_alg: str = hashing.DEFAULT_ALGORITHM) -> NodeFile:
    addrs = sorted(set(addresses))
    for a in addrs:
        if not isinstance(a, str) or ":" not in a:
            raise ParseError("node_file", f"address {a!r} is not host:port")
    return NodeFile(addresses=tuple(addrs), hash_alg=hash_alg)


def parse_node_file(raw: bytes, hash_alg: str = hashing.DEFAULT_ALGORITHM) -> NodeFile:
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise ParseError("node_file", "not valid UTF-8") from None
    lines = [line for line in text.split("\n") if line]
    return make_node_file(lines, hash_alg)


def update_node_file(local: NodeFile, remote_digest: bytes, fetch_remote) -> NodeFile:
    """Digest-compare-and-replace synchronization with one peer.

    `fetch_remote` is called only on digest mismatch and must return
    the remote roster's canonical bytes; the replacement is verified
    against the claimed digest before adoption.
    """
    if local.digest == remote_digest:
        return local
    raw = fetch_remote()
    if hashing.digest(raw, local.hash_alg) != remote_digest:
        raise IntegrityError("remote node file does not match its claimed digest")
    replacement = parse_node_file(raw, local.hash_alg)
    if replacement.canonical_bytes() != raw:
        raise IntegrityError("remote node file is not in canonical form")
    return replacement


def node_index(nf: NodeFile, address: str) -> int:
    """1-based index of an address in the roster."""
    try:
        return nf.addresses.index(address) + 1
    except ValueError:
        raise UsageError(f"address {address} not in node file") from None
