"""GF(2^128) arithmetic in the GCM bit convention.

Blocks map to field elements MSB-first: the most significant bit of the
integer is the coefficient of x^0, and reduction uses the GCM polynomial
x^128 + x^7 + x^2 + x + 1, folded in via the 0xE1... constant. Table-free
shift/XOR; performance is a non-goal.
"""

from __future__ import annotations

_R = 0xE1000000000000000000000000000000
_MASK = (1 << 128) - 1


def gf128_mul(x: int, y: int) -> int:
    z = 0
    v = x
    for i in range(127, -1, -1):
        if (y >> i) & 1:
            z ^= v
        if v & 1:
            v = (v >> 1) ^ _R
        else:
            v >>= 1
    return z & _MASK


def gf128_pow(h: int, e: int) -> int:
    acc = 1 << 127  # the field's multiplicative identity in GCM convention
    base = h
    while e:
        if e & 1:
            acc = gf128_mul(acc, base)
        base = gf128_mul(base, base)
        e >>= 1
    return acc


def block_to_int(block: bytes) -> int:
    if len(block) != 16:
        raise ValueError("field elements are 16-byte blocks")
    return int.from_bytes(block, "big")


def int_to_block(v: int) -> bytes:
    return (v & _MASK).to_bytes(16, "big")


def ghash_horner(h: int, blocks: list[int]) -> int:
    """Evaluate X_1·h^m ⊕ X_2·h^(m-1) ⊕ ... ⊕ X_m·h, Horner style."""
    acc = 0
    for block in blocks:
        acc = gf128_mul(acc ^ block, h)
    return acc


def ghash_blocks(data: bytes) -> list[int]:
    """Split into 16-byte field elements, zero-padding the trailing block."""
    padded = data + b"\x00" * ((16 - len(data) % 16) % 16)
    return [block_to_int(padded[i : i + 16]) for i in range(0, len(padded), 16)]


def ghash_block_sequence(aad: bytes, ciphertext: bytes) -> list[int]:
    """The exact field-element sequence GHASH consumes: padded AAD blocks,
    padded ciphertext blocks, then the 64-bit bit-lengths block. Shared by
    the local GHASH below and the split evaluation over power shares, so the
    two paths can never disagree on block decomposition."""
    length_block = ((len(aad) * 8) << 64 | (len(ciphertext) * 8)).to_bytes(16, "big")
    return ghash_blocks(aad) + ghash_blocks(ciphertext) + [block_to_int(length_block)]


def ghash_power_sum(blocks: list[int], power_table: list[int]) -> int:
    """Σ X_i · t[m-i] for 1-based i, where t[j] is (a share of) h^(j+1).

    With the full power table this equals GHASH; with one party's additive
    share table it yields that party's share of the digest.
    """
    m = len(blocks)
    if m > len(power_table):
        raise ValueError("power table too short for this block count")
    acc = 0
    for i, block in enumerate(blocks):
        acc ^= gf128_mul(block, power_table[m - 1 - i])
    return acc


def ghash(h: int, aad: bytes, ciphertext: bytes) -> bytes:
    return int_to_block(ghash_horner(h, ghash_block_sequence(aad, ciphertext)))
