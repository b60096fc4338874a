"""SHA-256 with an exposed compression function and midstates.

The two-party MAC protocol and the redaction proofs work at the granularity of
single SHA-256 compression calls: the prover computes inner hashes from a
keyed midstate it holds, and redaction proofs reveal midstates s_{i-1}, s_i
around a hidden block. hashlib exposes none of that, so the block function
lives here (FIPS 180-4); tests pin it against hashlib on both sides.

States are 32-byte big-endian encodings of the eight working variables.
"""

from __future__ import annotations

import struct

BLOCK_SIZE = 64
STATE_SIZE = 32

_K = (
    0x428A2F98, 0x71374491, 0xB5C0FBCF, 0xE9B5DBA5, 0x3956C25B, 0x59F111F1, 0x923F82A4, 0xAB1C5ED5,
    0xD807AA98, 0x12835B01, 0x243185BE, 0x550C7DC3, 0x72BE5D74, 0x80DEB1FE, 0x9BDC06A7, 0xC19BF174,
    0xE49B69C1, 0xEFBE4786, 0x0FC19DC6, 0x240CA1CC, 0x2DE92C6F, 0x4A7484AA, 0x5CB0A9DC, 0x76F988DA,
    0x983E5152, 0xA831C66D, 0xB00327C8, 0xBF597FC7, 0xC6E00BF3, 0xD5A79147, 0x06CA6351, 0x14292967,
    0x27B70A85, 0x2E1B2138, 0x4D2C6DFC, 0x53380D13, 0x650A7354, 0x766A0ABB, 0x81C2C92E, 0x92722C85,
    0xA2BFE8A1, 0xA81A664B, 0xC24B8B70, 0xC76C51A3, 0xD192E819, 0xD6990624, 0xF40E3585, 0x106AA070,
    0x19A4C116, 0x1E376C08, 0x2748774C, 0x34B0BCB5, 0x391C0CB3, 0x4ED8AA4A, 0x5B9CCA4F, 0x682E6FF3,
    0x748F82EE, 0x78A5636F, 0x84C87814, 0x8CC70208, 0x90BEFFFA, 0xA4506CEB, 0xBEF9A3F7, 0xC67178F2,
)

SHA256_IV = struct.pack(
    ">8I",
    0x6A09E667, 0xBB67AE85, 0x3C6EF372, 0xA54FF53A, 0x510E527F, 0x9B05688C, 0x1F83D9AB, 0x5BE0CD19,
)

_MASK = 0xFFFFFFFF


def _rotr(v: int, n: int) -> int:
    return ((v >> n) | (v << (32 - n))) & _MASK


def compress(state: bytes, block: bytes) -> bytes:
    """One application of the SHA-256 block function f(state, block)."""
    if len(state) != STATE_SIZE:
        raise ValueError("state must be 32 bytes")
    if len(block) != BLOCK_SIZE:
        raise ValueError("block must be 64 bytes")
    w = list(struct.unpack(">16I", block))
    for t in range(16, 64):
        s0 = _rotr(w[t - 15], 7) ^ _rotr(w[t - 15], 18) ^ (w[t - 15] >> 3)
        s1 = _rotr(w[t - 2], 17) ^ _rotr(w[t - 2], 19) ^ (w[t - 2] >> 10)
        w.append((w[t - 16] + s0 + w[t - 7] + s1) & _MASK)

    a, b, c, d, e, f, g, h = struct.unpack(">8I", state)
    for t in range(64):
        big_s1 = _rotr(e, 6) ^ _rotr(e, 11) ^ _rotr(e, 25)
        ch = (e & f) ^ (~e & g)
        t1 = (h + big_s1 + ch + _K[t] + w[t]) & _MASK
        big_s0 = _rotr(a, 2) ^ _rotr(a, 13) ^ _rotr(a, 22)
        maj = (a & b) ^ (a & c) ^ (b & c)
        t2 = (big_s0 + maj) & _MASK
        h, g, f, e, d, c, b, a = g, f, e, (d + t1) & _MASK, c, b, a, (t1 + t2) & _MASK

    mixed = struct.unpack(">8I", state)
    out = (
        (a + mixed[0]) & _MASK, (b + mixed[1]) & _MASK, (c + mixed[2]) & _MASK, (d + mixed[3]) & _MASK,
        (e + mixed[4]) & _MASK, (f + mixed[5]) & _MASK, (g + mixed[6]) & _MASK, (h + mixed[7]) & _MASK,
    )
    return struct.pack(">8I", *out)


def md_padding(total_len: int) -> bytes:
    """Merkle-Damgard padding for a message of total_len bytes (including any
    already-compressed prefix, e.g. a 64-byte key block)."""
    pad = b"\x80" + b"\x00" * ((55 - total_len) % 64)
    return pad + struct.pack(">Q", total_len * 8)


def compress_chain(state: bytes, data: bytes) -> bytes:
    """Fold whole 64-byte blocks of data into the state."""
    if len(data) % BLOCK_SIZE:
        raise ValueError("data must be a multiple of the block size")
    for i in range(0, len(data), BLOCK_SIZE):
        state = compress(state, data[i : i + BLOCK_SIZE])
    return state


def digest_from_midstate(state: bytes, tail: bytes, processed_len: int) -> bytes:
    """Finish a hash whose first processed_len bytes already produced state."""
    if processed_len % BLOCK_SIZE:
        raise ValueError("midstates only exist at block boundaries")
    return compress_chain(state, tail + md_padding(processed_len + len(tail)))


def sha256(data: bytes) -> bytes:
    return digest_from_midstate(SHA256_IV, data, 0)


def message_blocks(data: bytes, processed_len: int) -> list[bytes]:
    """The padded 64-byte block sequence digest_from_midstate would compress.

    Redaction proofs address these blocks by 1-based index; the final block
    carries the Merkle-Damgard padding for the public total length.
    """
    padded = data + md_padding(processed_len + len(data))
    return [padded[i : i + BLOCK_SIZE] for i in range(0, len(padded), BLOCK_SIZE)]
