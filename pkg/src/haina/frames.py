"""Length-prefixed binary wire frames.

Layout (bit-exact): magic "HAIN" (4) || type tag (1) || header length
(4, big-endian) || body length (8, big-endian) || header || body.
The header is UTF-8 "key: value" lines; block payloads travel only in
the binary body.  A whole frame is capped at 64 MiB.
"""

import struct
from dataclasses import dataclass, field
from enum import IntEnum

from .errors import ParseError

MAGIC = b"HAIN"
HEADER_FMT = struct.Struct(">4sBIQ")  # magic, type, header len, body len
FRAME_OVERHEAD = HEADER_FMT.size  # 17 bytes
MAX_FRAME = 64 * 1024 * 1024


class MsgType(IntEnum):
    PING = 1
    PONG = 2
    GET_NF = 3
    NF_DATA = 4
    STORE_READY = 5
    STORE_ACK = 6
    ELECTION = 7
    TAKEPART = 8
    REFUSE = 9
    SORTED_RESULT = 10
    NEW_BEGINNER = 11
    CHECK_STORE = 12
    CHECK_STORE_REPLY = 13
    GET_BLOCK = 14
    BLOCK_DATA = 15
    HAS_BLOCK = 16
    HAS_BLOCK_REPLY = 17
    ERROR = 18


@dataclass(frozen=True)
class Frame:
    type: MsgType
    header: dict = field(default_factory=dict)
    body: bytes = b""


def _encode_header(header: dict) -> bytes:
    lines = []
    for key, value in header.items():
        key = str(key)
        value = str(value)
        if ":" in key or "\n" in key or "\r" in key:
            raise ParseError("header", f"illegal character in header key {key!r}")
        if "\n" in value or "\r" in value:
            raise ParseError("header", f"newline in header value for {key!r}")
        lines.append(f"{key}: {value}\n")
    return "".join(lines).encode("utf-8")


def _decode_header(raw: bytes) -> dict:
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        raise ParseError("header", "header is not valid UTF-8") from None
    header = {}
    for line in text.split("\n"):
        if not line:
            continue
        key, sep, value = line.partition(": ")
        if not sep or not key:
            raise ParseError("header", f"malformed header line {line!r}")
        header[key] = value
    return header


def encode_frame(frame: Frame) -> bytes:
    header = _encode_header(frame.header)
    total = FRAME_OVERHEAD + len(header) + len(frame.body)
    if total > MAX_FRAME:
        raise ParseError("frame", f"frame of {total} bytes exceeds the {MAX_FRAME} cap")
    return HEADER_FMT.pack(MAGIC, int(frame.type), len(header), len(frame.body)) + header + frame.body


def decode_frame(raw: bytes) -> Frame:
    if len(raw) < FRAME_OVERHEAD:
        raise ParseError("frame", f"truncated frame: {len(raw)} bytes")
    magic, type_tag, header_len, body_len = HEADER_FMT.unpack_from(raw)
    if magic != MAGIC:
        raise ParseError("frame", f"bad magic {magic!r}")
    total = FRAME_OVERHEAD + header_len + body_len
    if total > MAX_FRAME:
        raise ParseError("frame", f"declared frame size {total} exceeds the {MAX_FRAME} cap")
    if len(raw) != total:
        raise ParseError("frame", f"frame length {len(raw)} != declared {total}")
    try:
        msg_type = MsgType(type_tag)
    except ValueError:
        raise ParseError("frame", f"unknown message type tag {type_tag}") from None
    header = _decode_header(raw[FRAME_OVERHEAD : FRAME_OVERHEAD + header_len])
    body = raw[FRAME_OVERHEAD + header_len :]
    return Frame(type=msg_type, header=header, body=body)


def error_frame(reason: str) -> Frame:
    return Frame(MsgType.ERROR, {"reason": reason})
