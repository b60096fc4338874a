"""Bit-exact TLS 1.2 record-layer cryptography for the two fixed suites.

CBC-HMAC (AES-128-CBC with HMAC-SHA256, MAC-then-encrypt, explicit IV) and
AES-128-GCM (4-byte implicit salt + 8-byte explicit nonce, 13-byte additional
data). Chaining, padding, counter mode, and GHASH are written out block by
block because the selective-opening proofs need that structure; only the raw
AES block permutation comes from the cryptography library.

Pure functions; per-direction sequence numbers and nonce bookkeeping belong
to the session layer.
"""

from __future__ import annotations

import hmac as std_hmac
import struct
from dataclasses import dataclass
from enum import IntEnum

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .gf128 import block_to_int, ghash
from .rng import Rng, rand_bytes

TLS12_VERSION = b"\x03\x03"
MAX_PAYLOAD = 1 << 14

CBC_IV_LEN = 16
GCM_EXPLICIT_LEN = 8
GCM_SALT_LEN = 4
GCM_TAG_LEN = 16
MAC_LEN = 32
FULL_PAD_BLOCK = bytes([0x0F]) * 16


class ContentType(IntEnum):
    CHANGE_CIPHER_SPEC = 20
    ALERT = 21
    HANDSHAKE = 22
    APPLICATION_DATA = 23


class CipherSuite(IntEnum):
    ECDHE_RSA_AES128_CBC_SHA256 = 0xC027
    ECDHE_RSA_AES128_GCM_SHA256 = 0xC02F


class RecordError(Exception):
    pass


class OversizeRecordError(RecordError):
    pass


class BadPaddingError(RecordError):
    pass


class BadMacError(RecordError):
    pass


class BadTagError(RecordError):
    pass


@dataclass(frozen=True)
class PlainRecord:
    content_type: int
    version: bytes
    seq: int
    payload: bytes

    def __post_init__(self) -> None:
        if len(self.payload) > MAX_PAYLOAD:
            raise OversizeRecordError("payload exceeds the TLS fragment cap")
        if len(self.version) != 2:
            raise ValueError("version is 2 bytes")


@dataclass(frozen=True)
class CipherRecord:
    """One protected record: 5-byte header fields, the explicit IV or nonce,
    the ciphertext body, and (GCM) the trailing tag."""

    content_type: int
    version: bytes
    explicit: bytes
    body: bytes
    tag: bytes = b""

    @property
    def header(self) -> bytes:
        length = len(self.explicit) + len(self.body) + len(self.tag)
        return bytes([self.content_type]) + self.version + struct.pack(">H", length)

    def to_wire(self) -> bytes:
        return self.header + self.explicit + self.body + self.tag

    @classmethod
    def parse(cls, wire: bytes, suite: CipherSuite) -> "CipherRecord":
        if len(wire) < 5:
            raise RecordError("short record")
        content_type = wire[0]
        version = wire[1:3]
        (length,) = struct.unpack(">H", wire[3:5])
        rest = wire[5:]
        if len(rest) != length:
            raise RecordError("record length mismatch")
        if suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
            if length < CBC_IV_LEN + 48:
                raise RecordError("record too short for the suite")
            return cls(content_type, version, rest[:CBC_IV_LEN], rest[CBC_IV_LEN:])
        if length < GCM_EXPLICIT_LEN + GCM_TAG_LEN:
            raise RecordError("record too short for the suite")
        return cls(
            content_type,
            version,
            rest[:GCM_EXPLICIT_LEN],
            rest[GCM_EXPLICIT_LEN:-GCM_TAG_LEN],
            rest[-GCM_TAG_LEN:],
        )


@dataclass(frozen=True)
class GcmAdditionalData:
    seq: int
    content_type: int
    version: bytes
    length: int

    def to_bytes(self) -> bytes:
        return (
            struct.pack(">Q", self.seq)
            + bytes([self.content_type])
            + self.version
            + struct.pack(">H", self.length)
        )


def mac_input(seq: int, content_type: int, version: bytes, payload: bytes) -> bytes:
    """The 13-byte pseudo-header ∥ payload that HMAC covers."""
    return (
        struct.pack(">Q", seq)
        + bytes([content_type])
        + version
        + struct.pack(">H", len(payload))
        + payload
    )


# -- AES primitives -----------------------------------------------------------


def aes_block(key: bytes, block: bytes) -> bytes:
    """The raw AES permutation on one 16-byte block."""
    if len(block) != 16:
        raise ValueError("block must be 16 bytes")
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


def aes_block_decrypt(key: bytes, block: bytes) -> bytes:
    if len(block) != 16:
        raise ValueError("block must be 16 bytes")
    dec = Cipher(algorithms.AES(key), modes.ECB()).decryptor()
    return dec.update(block) + dec.finalize()


def cbc_encrypt(key: bytes, iv: bytes, plaintext: bytes) -> bytes:
    if len(plaintext) % 16:
        raise ValueError("plaintext must be block aligned")
    out = bytearray()
    prev = iv
    for i in range(0, len(plaintext), 16):
        prev = aes_block(key, bytes(a ^ b for a, b in zip(plaintext[i : i + 16], prev)))
        out += prev
    return bytes(out)


def cbc_decrypt(key: bytes, iv: bytes, ciphertext: bytes) -> bytes:
    if len(ciphertext) % 16:
        raise ValueError("ciphertext must be block aligned")
    out = bytearray()
    prev = iv
    for i in range(0, len(ciphertext), 16):
        block = ciphertext[i : i + 16]
        out += bytes(a ^ b for a, b in zip(aes_block_decrypt(key, block), prev))
        prev = block
    return bytes(out)


def inc32(counter_block: bytes) -> bytes:
    """32-bit big-endian increment of the last 4 bytes of a counter block."""
    (low,) = struct.unpack(">I", counter_block[-4:])
    return counter_block[:-4] + struct.pack(">I", (low + 1) & 0xFFFFFFFF)


def gcm_j0(salt: bytes, explicit: bytes) -> bytes:
    if len(salt) != GCM_SALT_LEN or len(explicit) != GCM_EXPLICIT_LEN:
        raise ValueError("nonce parts must be 4 + 8 bytes")
    return salt + explicit + b"\x00\x00\x00\x01"


def gcm_counter_blocks(j0: bytes, n_blocks: int) -> list[bytes]:
    """The keystream counters J0+1 .. J0+n (J0 itself is reserved for the tag)."""
    out = []
    counter = j0
    for _ in range(n_blocks):
        counter = inc32(counter)
        out.append(counter)
    return out


# -- CBC-HMAC suite -----------------------------------------------------------


def assemble_cbc_record(
    k_enc: bytes, record: PlainRecord, tag: bytes, rng: Rng
) -> CipherRecord:
    """Encrypt payload ∥ tag ∥ full padding block under a fresh random IV.

    The payload must already sit on a 16-byte boundary so the HMAC tag plus
    one full padding block occupy exactly the 3 trailing AES blocks the
    opening proofs address. The tag is supplied by the caller: locally
    computed in the single-party path, dealer-assisted in the split path.
    """
    if len(record.payload) % 16:
        raise ValueError("payload must be padded to a 16-byte boundary by the caller")
    if len(tag) != MAC_LEN:
        raise ValueError("tag must be 32 bytes")
    plaintext = record.payload + tag + FULL_PAD_BLOCK
    iv = rand_bytes(rng, CBC_IV_LEN)
    return CipherRecord(
        record.content_type, record.version, iv, cbc_encrypt(k_enc, iv, plaintext)
    )


def seal_cbc_hmac(k_enc: bytes, k_mac: bytes, record: PlainRecord, rng: Rng) -> CipherRecord:
    """MAC-then-encrypt with both keys in hand."""
    tag = std_hmac.new(
        k_mac, mac_input(record.seq, record.content_type, record.version, record.payload), "sha256"
    ).digest()
    return assemble_cbc_record(k_enc, record, tag, rng)


def strip_cbc_layers(k_enc: bytes, record: CipherRecord) -> tuple[bytes, bytes]:
    """Decrypt and depad, returning (payload, tag) without checking the MAC.

    Accepts any valid TLS padding, so records produced by an external stack
    (which pads minimally) open too. The split record path uses this to
    recover response payloads whose MAC check is deferred until the server
    MAC key is reassembled after share release.
    """
    if len(record.body) % 16 or len(record.body) < 48:
        raise BadPaddingError("ciphertext not block aligned or too short")
    plaintext = cbc_decrypt(k_enc, record.explicit, record.body)
    pad_len = plaintext[-1]
    if pad_len + 1 + MAC_LEN > len(plaintext):
        raise BadPaddingError("padding length exceeds record")
    if plaintext[-(pad_len + 1) :] != bytes([pad_len]) * (pad_len + 1):
        raise BadPaddingError("inconsistent padding bytes")
    payload = plaintext[: -(pad_len + 1 + MAC_LEN)]
    tag = plaintext[len(payload) : len(payload) + MAC_LEN]
    if len(payload) > MAX_PAYLOAD:
        raise OversizeRecordError("payload exceeds the TLS fragment cap")
    return payload, tag


def open_cbc_hmac(k_enc: bytes, k_mac: bytes, record: CipherRecord, seq: int) -> PlainRecord:
    """Inverse of seal, with the MAC checked inline."""
    payload, tag = strip_cbc_layers(k_enc, record)
    expect = std_hmac.new(
        k_mac, mac_input(seq, record.content_type, record.version, payload), "sha256"
    ).digest()
    if not std_hmac.compare_digest(tag, expect):
        raise BadMacError("record MAC mismatch")
    return PlainRecord(record.content_type, record.version, seq, payload)


# -- GCM suite ----------------------------------------------------------------


def gcm_tag(key: bytes, j0: bytes, aad: bytes, ciphertext: bytes) -> bytes:
    h = block_to_int(aes_block(key, b"\x00" * 16))
    masked = ghash(h, aad, ciphertext)
    e_j0 = aes_block(key, j0)
    return bytes(a ^ b for a, b in zip(e_j0, masked))


def gcm_keystream(key: bytes, j0: bytes, length: int) -> bytes:
    n_blocks = (length + 15) // 16
    stream = b"".join(aes_block(key, c) for c in gcm_counter_blocks(j0, n_blocks))
    return stream[:length]


def seal_gcm(key: bytes, salt: bytes, record: PlainRecord, explicit: bytes) -> CipherRecord:
    j0 = gcm_j0(salt, explicit)
    keystream = gcm_keystream(key, j0, len(record.payload))
    ciphertext = bytes(a ^ b for a, b in zip(record.payload, keystream))
    aad = GcmAdditionalData(
        record.seq, record.content_type, record.version, len(record.payload)
    ).to_bytes()
    tag = gcm_tag(key, j0, aad, ciphertext)
    return CipherRecord(record.content_type, record.version, explicit, ciphertext, tag)


def open_gcm(key: bytes, salt: bytes, record: CipherRecord, seq: int) -> PlainRecord:
    if len(record.tag) != GCM_TAG_LEN:
        raise BadTagError("tag must be 16 bytes")
    if len(record.body) > MAX_PAYLOAD:
        raise OversizeRecordError("payload exceeds the TLS fragment cap")
    j0 = gcm_j0(salt, record.explicit)
    aad = GcmAdditionalData(seq, record.content_type, record.version, len(record.body)).to_bytes()
    expect = gcm_tag(key, j0, aad, record.body)
    if not std_hmac.compare_digest(record.tag, expect):
        raise BadTagError("record tag mismatch")
    keystream = gcm_keystream(key, j0, len(record.body))
    payload = bytes(a ^ b for a, b in zip(record.body, keystream))
    return PlainRecord(record.content_type, record.version, seq, payload)
