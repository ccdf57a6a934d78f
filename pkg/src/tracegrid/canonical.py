"""Canonical serialization: one byte representation per value.

Every wire body, journal line and stored description uses this encoding, so
byte comparison doubles as structural comparison.
"""
from __future__ import annotations

import hashlib
import json

# prevDigest of the first record in any journal
GENESIS_DIGEST = "0" * 64


def dumps(value) -> bytes:
    """Encode a jsonable value canonically: sorted keys, no whitespace, UTF-8."""
    return json.dumps(
        value, sort_keys=True, separators=(",", ":"), ensure_ascii=False
    ).encode("utf-8")


def loads(data: bytes | str):
    return json.loads(data)


def digest(data: bytes) -> str:
    """Hex SHA-256 of raw bytes (content addressing and chain links)."""
    return hashlib.sha256(data).hexdigest()


def digest_of(value) -> str:
    return digest(dumps(value))
