"""Independent reference implementations used as test oracles.

Everything here is deliberately built on OTHER code paths than the package:
`cryptography` high-level constructions, hashlib/hmac, or direct big-integer
arithmetic. Package code must never import from this module.
"""

from __future__ import annotations

import hashlib
import struct

from cryptography.hazmat.primitives import hashes, hmac as c_hmac, padding as c_padding
from cryptography.hazmat.primitives.asymmetric import ec as c_ec
from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes
from cryptography.hazmat.primitives.ciphers.aead import AESGCM


# -- elliptic curve ----------------------------------------------------------

def ec_point_oracle(k: int) -> tuple[int, int]:
    """k·G on P-256 via the cryptography library's key derivation."""
    pub = c_ec.derive_private_key(k, c_ec.SECP256R1()).public_key().public_numbers()
    return pub.x, pub.y


def ecdh_x_oracle(priv: int, peer_x: int, peer_y: int) -> int:
    """x-coordinate of priv · (peer point), via the library's ECDH."""
    private = c_ec.derive_private_key(priv, c_ec.SECP256R1())
    peer = c_ec.EllipticCurvePublicNumbers(peer_x, peer_y, c_ec.SECP256R1()).public_key()
    shared = private.exchange(c_ec.ECDH(), peer)
    return int.from_bytes(shared, "big")


# -- TLS 1.2 PRF (recursive definition, hashlib-only HMAC) -------------------

def _hmac_sha256(key: bytes, msg: bytes) -> bytes:
    block = key.ljust(64, b"\x00") if len(key) <= 64 else hashlib.sha256(key).digest().ljust(64, b"\x00")
    ipad = bytes(b ^ 0x36 for b in block)
    opad = bytes(b ^ 0x5C for b in block)
    return hashlib.sha256(opad + hashlib.sha256(ipad + msg).digest()).digest()


def tls12_prf_oracle(secret: bytes, label: bytes, seed: bytes, out_len: int) -> bytes:
    """P_SHA256 written as the recursive A(i) definition."""
    full_seed = label + seed

    def a(i: int) -> bytes:
        if i == 0:
            return full_seed
        return _hmac_sha256(secret, a(i - 1))

    out = b""
    i = 1
    while len(out) < out_len:
        out += _hmac_sha256(secret, a(i) + full_seed)
        i += 1
    return out[:out_len]


def tls12_key_block_oracle(premaster: bytes, client_random: bytes, server_random: bytes,
                           key_block_len: int) -> tuple[bytes, bytes]:
    """(master_secret, key_block) via single-party TLS 1.2 key schedule."""
    master = tls12_prf_oracle(premaster, b"master secret", client_random + server_random, 48)
    key_block = tls12_prf_oracle(master, b"key expansion", server_random + client_random, key_block_len)
    return master, key_block


# -- record layer ------------------------------------------------------------

def cbc_hmac_seal_oracle(k_enc: bytes, k_mac: bytes, seq: int, content_type: int,
                         version: bytes, payload: bytes, iv: bytes) -> bytes:
    """TLS 1.2 AES-128-CBC + HMAC-SHA256 MAC-then-encrypt with full-block
    padding, assembled from cryptography primitives (CBC mode object, padder,
    HMAC object) rather than per-block loops."""
    header = struct.pack(">Q", seq) + bytes([content_type]) + version + struct.pack(">H", len(payload))
    h = c_hmac.HMAC(k_mac, hashes.SHA256())
    h.update(header + payload)
    tag = h.finalize()
    plaintext = payload + tag
    pad_len = 16 - (len(plaintext) % 16)
    plaintext += bytes([pad_len - 1]) * pad_len
    enc = Cipher(algorithms.AES(k_enc), modes.CBC(iv)).encryptor()
    return enc.update(plaintext) + enc.finalize()


def cbc_hmac_open_oracle(k_enc: bytes, k_mac: bytes, seq: int, content_type: int,
                         version: bytes, iv: bytes, body: bytes) -> bytes:
    dec = Cipher(algorithms.AES(k_enc), modes.CBC(iv)).decryptor()
    plaintext = dec.update(body) + dec.finalize()
    pad_len = plaintext[-1] + 1
    if plaintext[-pad_len:] != bytes([plaintext[-1]]) * pad_len:
        raise ValueError("oracle: bad padding")
    plaintext = plaintext[:-pad_len]
    payload, tag = plaintext[:-32], plaintext[-32:]
    header = struct.pack(">Q", seq) + bytes([content_type]) + version + struct.pack(">H", len(payload))
    h = c_hmac.HMAC(k_mac, hashes.SHA256())
    h.update(header + payload)
    h.verify(tag)
    return payload


def gcm_seal_oracle(key: bytes, nonce: bytes, payload: bytes, aad: bytes) -> tuple[bytes, bytes]:
    """(ciphertext, tag) from the library's one-shot AESGCM."""
    out = AESGCM(key).encrypt(nonce, payload, aad)
    return out[:-16], out[-16:]


def gcm_open_oracle(key: bytes, nonce: bytes, ciphertext: bytes, tag: bytes, aad: bytes) -> bytes:
    return AESGCM(key).decrypt(nonce, ciphertext + tag, aad)


def aes_block_oracle(key: bytes, block: bytes) -> bytes:
    enc = Cipher(algorithms.AES(key), modes.ECB()).encryptor()
    return enc.update(block) + enc.finalize()


# -- GF(2^128) ---------------------------------------------------------------

def gf128_mul_oracle(x: int, y: int) -> int:
    """Multiplication in the GCM field via bit reflection: GCM's bit 0 is the
    x^0 coefficient but sits in the integer's MSB, so reverse the bits, do a
    textbook carry-less multiply + reduction mod x^128 + x^7 + x^2 + x + 1,
    and reverse back. Structurally independent from the package's MSB-first
    shift/XOR loop."""

    def rev(v: int) -> int:
        return int(f"{v:0128b}"[::-1], 2)

    rx, ry = rev(x), rev(y)
    modulus = (1 << 128) | 0x87
    acc = 0
    for i in range(128):
        if (ry >> i) & 1:
            acc ^= rx << i
    for bit in range(acc.bit_length() - 1, 127, -1):
        if (acc >> bit) & 1:
            acc ^= modulus << (bit - 128)
    return rev(acc & ((1 << 128) - 1))


def ghash_oracle(h: bytes, aad: bytes, ciphertext: bytes) -> bytes:
    """GHASH via the naive power-sum, using gf128_mul_oracle."""
    def pad16(b: bytes) -> bytes:
        return b + b"\x00" * ((16 - len(b) % 16) % 16)

    data = pad16(aad) + pad16(ciphertext) + struct.pack(">QQ", len(aad) * 8, len(ciphertext) * 8)
    blocks = [int.from_bytes(data[i : i + 16], "big") for i in range(0, len(data), 16)]
    hn = int.from_bytes(h, "big")
    m = len(blocks)
    acc = 0
    power = hn
    for i in range(m - 1, -1, -1):  # X_m gets h^1, X_1 gets h^m
        acc ^= gf128_mul_oracle(blocks[i], power)
        power = gf128_mul_oracle(power, hn)
    return acc.to_bytes(16, "big")


# -- SHA-256 midstates -------------------------------------------------------

def sha256_oracle(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


def hmac_sha256_oracle(key: bytes, msg: bytes) -> bytes:
    import hmac as std_hmac

    return std_hmac.new(key, msg, hashlib.sha256).digest()
