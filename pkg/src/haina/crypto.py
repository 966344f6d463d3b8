"""File encryption, ciphertext blocking, and key sharding.

The 256-bit file key is derived from the file content and a timestamp;
only its first 16 bytes drive the cipher (SM4 takes a 128-bit key), but
the full 32 bytes are sharded round-robin across the data blocks, each
shard prepended to its block's data domain.
"""

import secrets
import struct
from dataclasses import dataclass, field

from cryptography.exceptions import InvalidKey
from cryptography.hazmat.primitives import padding
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from . import hashing
from .errors import IntegrityError, UsageError

KEY_SIZE = 32  # sharded key bytes
CIPHER_KEY_SIZE = 16
CIPHER_BLOCK = 16

_CIPHERS = {"sm4": algorithms.SM4, "aes128": algorithms.AES128}


@dataclass(frozen=True)
class CipherConfig:
    cipher: str = "sm4"
    mode: str = "cbc"
    iv: bytes = field(default_factory=lambda: secrets.token_bytes(CIPHER_BLOCK))
    padding: str = "pkcs7"

    def __post_init__(self):
        if self.cipher not in _CIPHERS:
            raise UsageError(f"unsupported cipher {self.cipher!r}")
        if self.mode != "cbc":
            raise UsageError(f"unsupported cipher mode {self.mode!r}")
        if self.padding != "pkcs7":
            raise UsageError(f"unsupported padding scheme {self.padding!r}")
        if len(self.iv) != CIPHER_BLOCK:
            raise UsageError(f"iv must be {CIPHER_BLOCK} bytes, got {len(self.iv)}")


def generate_key(file: bytes, timestamp_ns: int, hash_alg: str = hashing.DEFAULT_ALGORITHM) -> bytes:
    """Derive the 32-byte file key: H(timestamp || H(file)).

    The timestamp is encoded as 8-byte big-endian unsigned nanoseconds,
    so repeated uploads of the same file get distinct keys.
    """
    if not file:
        raise UsageError("cannot derive a key for an empty file")
    if not 0 <= timestamp_ns < 1 << 64:
        raise UsageError("timestamp must fit an unsigned 64-bit value")
    inner = hashing.digest(file, hash_alg)
    return hashing.digest(struct.pack(">Q", timestamp_ns) + inner, hash_alg)


def generate_mask(rng=None) -> bytes:
    """Draw a uniformly random nonzero 32-byte pointer mask.

    `rng` may be a `random.Random` for reproducible tests; the default
    uses the OS entropy source.
    """
    draw = rng.randbytes if rng is not None else secrets.token_bytes
    while True:
        mask = draw(KEY_SIZE)
        if any(mask):
            return mask


def _cipher(key: bytes, cfg: CipherConfig) -> Cipher:
    algo = _CIPHERS[cfg.cipher](key[:CIPHER_KEY_SIZE])
    return Cipher(algo, modes.CBC(cfg.iv))


def encrypt_file(file: bytes, key: bytes, cfg: CipherConfig) -> bytes:
    if not file:
        raise UsageError("cannot encrypt an empty file")
    if len(key) != KEY_SIZE:
        raise UsageError(f"file key must be {KEY_SIZE} bytes")
    padder = padding.PKCS7(CIPHER_BLOCK * 8).padder()
    padded = padder.update(file) + padder.finalize()
    enc = _cipher(key, cfg).encryptor()
    return enc.update(padded) + enc.finalize()


def decrypt_file(ef: bytes, key: bytes, cfg: CipherConfig) -> bytes:
    if not ef or len(ef) % CIPHER_BLOCK:
        raise UsageError(f"ciphertext length must be a positive multiple of {CIPHER_BLOCK}")
    if len(key) != KEY_SIZE:
        raise UsageError(f"file key must be {KEY_SIZE} bytes")
    dec = _cipher(key, cfg).decryptor()
    padded = dec.update(ef) + dec.finalize()
    unpadder = padding.PKCS7(CIPHER_BLOCK * 8).unpadder()
    try:
        return unpadder.update(padded) + unpadder.finalize()
    except (ValueError, InvalidKey) as exc:
        raise IntegrityError(f"bad padding on decrypt (wrong key or corrupt data): {exc}") from None


def split_ciphertext(ef: bytes, n: int) -> list:
    """Divide the ciphertext into n contiguous non-empty slices.

    The first len(ef) mod n slices get the extra byte, so sizes differ
    by at most one and concatenation restores the input.
    """
    if n < 1:
        raise UsageError("block count must be at least 1")
    if n > len(ef):
        raise UsageError(
            f"block count {n} exceeds ciphertext length {len(ef)}; choose a smaller block count"
        )
    base, extra = divmod(len(ef), n)
    slices = []
    pos = 0
    for j in range(n):
        size = base + (1 if j < extra else 0)
        slices.append(ef[pos : pos + size])
        pos += size
    return slices


def shard_sizes(key_len: int, n: int) -> list:
    """Bytes of key that land in each of the n blocks under round-robin sharding.

    Key byte i goes to block (i mod n) + 1 (1-based), so the first
    key_len mod n blocks get the extra byte.
    """
    base, extra = divmod(key_len, n)
    return [base + (1 if j < extra else 0) for j in range(n)]


def embed_key_shards(slices, key: bytes) -> list:
    """Prepend each block's key shard to its ciphertext slice."""
    if len(key) != KEY_SIZE:
        raise UsageError(f"file key must be {KEY_SIZE} bytes")
    n = len(slices)
    if n < 1:
        raise UsageError("need at least one slice")
    shards = [bytearray() for _ in range(n)]
    for i, byte in enumerate(key):
        shards[i % n].append(byte)
    return [bytes(shards[j]) + bytes(slices[j]) for j in range(n)]


def extract_key_shards(domains):
    """Inverse of embed_key_shards: recover (key, ciphertext slices)."""
    n = len(domains)
    if n < 1:
        raise UsageError("need at least one data domain")
    sizes = shard_sizes(KEY_SIZE, n)
    shards = []
    slices = []
    for j, domain in enumerate(domains):
        if len(domain) < sizes[j]:
            raise IntegrityError(
                f"data domain {j + 1} shorter than its {sizes[j]}-byte key shard"
            )
        shards.append(domain[: sizes[j]])
        slices.append(domain[sizes[j] :])
    key = bytearray(KEY_SIZE)
    cursors = [0] * n
    for i in range(KEY_SIZE):
        j = i % n
        key[i] = shards[j][cursors[j]]
        cursors[j] += 1
    return bytes(key), slices
