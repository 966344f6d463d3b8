import json
import random

import pytest

from haina.crypto import CipherConfig
from haina.errors import ParseError
from haina.metafile import build_meta_file, parse_meta_file, serialize_meta_file


def _meta(**overrides):
    rng = random.Random(9)
    fields = dict(
        first_beginner="10.0.0.7:9000",
        header_digest=rng.randbytes(32),
        mask=rng.randbytes(32),
        block_count=20,
        cipher_cfg=CipherConfig(iv=rng.randbytes(16)),
        file_length=1234,
    )
    fields.update(overrides)
    return build_meta_file(**fields)


def test_roundtrip_identity():
    meta = _meta()
    assert parse_meta_file(serialize_meta_file(meta)) == meta


def test_document_is_json_with_hex_fields():
    doc = json.loads(serialize_meta_file(_meta()).decode())
    assert len(doc["header_digest"]) == 64
    assert len(doc["mask"]) == 64
    assert doc["header_digest"] == doc["header_digest"].lower()
    assert doc["hash_alg"] == "sha256"


def test_zero_mask_rejected_on_build_and_parse():
    with pytest.raises(ParseError, match="mask"):
        _meta(mask=b"\x00" * 32)
    doc = json.loads(serialize_meta_file(_meta()).decode())
    doc["mask"] = "00" * 32
    with pytest.raises(ParseError, match="mask"):
        parse_meta_file(json.dumps(doc).encode())


@pytest.mark.parametrize("field", ["header_digest", "mask", "first_beginner", "block_count", "iv"])
def test_missing_field_named(field):
    doc = json.loads(serialize_meta_file(_meta()).decode())
    del doc[field]
    with pytest.raises(ParseError, match=field):
        parse_meta_file(json.dumps(doc).encode())


def test_unknown_field_rejected():
    doc = json.loads(serialize_meta_file(_meta()).decode())
    doc["surprise"] = 1
    with pytest.raises(ParseError, match="surprise"):
        parse_meta_file(json.dumps(doc).encode())


def test_malformed_hex_rejected():
    doc = json.loads(serialize_meta_file(_meta()).decode())
    doc["header_digest"] = "zz" * 32
    with pytest.raises(ParseError, match="header_digest"):
        parse_meta_file(json.dumps(doc).encode())


def test_unsupported_version_rejected():
    doc = json.loads(serialize_meta_file(_meta()).decode())
    doc["version"] = 99
    with pytest.raises(ParseError, match="version"):
        parse_meta_file(json.dumps(doc).encode())


def test_not_json_rejected():
    with pytest.raises(ParseError):
        parse_meta_file(b"\xff\xfe not json")
