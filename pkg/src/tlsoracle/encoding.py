"""Length-prefixed byte encodings shared by protocol messages.

Every multi-party message in this package serializes to length-prefixed
big-endian byte strings so transcripts can be persisted and replayed
byte-exactly. The framing is deliberately dumb: u32 length + payload.
"""

from __future__ import annotations

import struct


def encode_int(value: int) -> bytes:
    """Encode a non-negative integer as a u32-length-prefixed big-endian string."""
    if value < 0:
        raise ValueError("negative integers are not encodable")
    raw = value.to_bytes((value.bit_length() + 7) // 8 or 1, "big")
    return struct.pack(">I", len(raw)) + raw


def encode_bytes(raw: bytes) -> bytes:
    return struct.pack(">I", len(raw)) + raw


class ByteReader:
    """Sequential reader over one encoded buffer; errors on truncation."""

    def __init__(self, data: bytes):
        self._data = data
        self._pos = 0

    def take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise ValueError("truncated message")
        out = self._data[self._pos : self._pos + n]
        self._pos += n
        return out

    def read_bytes(self) -> bytes:
        (n,) = struct.unpack(">I", self.take(4))
        return self.take(n)

    def read_int(self) -> int:
        return int.from_bytes(self.read_bytes(), "big")

    def read_u8(self) -> int:
        return self.take(1)[0]

    def read_u32(self) -> int:
        (n,) = struct.unpack(">I", self.take(4))
        return n

    @property
    def exhausted(self) -> bool:
        return self._pos == len(self._data)

    def expect_end(self) -> None:
        if not self.exhausted:
            raise ValueError("trailing bytes after message")
