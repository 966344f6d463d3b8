"""256-bit digest helpers and the deployment hash-algorithm registry.

Every digest in one chain uses the same algorithm; the choice is recorded
in the meta file so recovery uses the matching function.
"""

import hashlib

from .errors import ParseError

DIGEST_SIZE = 32

# algorithm id -> constructor; all produce 32-byte digests
_ALGORITHMS = {
    "sha256": hashlib.sha256,
    "sha3_256": hashlib.sha3_256,
    "blake2s": hashlib.blake2s,
}

DEFAULT_ALGORITHM = "sha256"


def hasher(alg: str = DEFAULT_ALGORITHM):
    """Return the digest constructor for a registered algorithm id."""
    try:
        return _ALGORITHMS[alg]
    except KeyError:
        raise ParseError("hash_alg", f"unknown hash algorithm {alg!r}") from None


def digest(data: bytes, alg: str = DEFAULT_ALGORITHM) -> bytes:
    """256-bit digest of `data` under the named algorithm."""
    return hasher(alg)(data).digest()


def check_digest(value: bytes) -> bytes:
    if not isinstance(value, (bytes, bytearray)) or len(value) != DIGEST_SIZE:
        raise ValueError(f"digest must be exactly {DIGEST_SIZE} bytes, got {len(value)}")
    return bytes(value)


def hex_digest(value: bytes) -> str:
    """Canonical lowercase-hex rendering (64 chars)."""
    return check_digest(value).hex()


def parse_hex_digest(text: str, field: str = "digest") -> bytes:
    try:
        raw = bytes.fromhex(text)
    except (ValueError, TypeError):
        raise ParseError(field, "not valid hex") from None
    if len(raw) != DIGEST_SIZE:
        raise ParseError(field, f"expected {DIGEST_SIZE * 2} hex chars, got {len(text)}")
    return raw
