"""TLS 1.2 pseudorandom function (P_SHA256) and the derivation labels.

RFC 5246 section 5: PRF(secret, label, seed) = P_SHA256(secret, label + seed),
where P_hash chains A(i) = HMAC(secret, A(i-1)), A(0) = seed, and the output
is HMAC(secret, A(i) + seed) concatenated until enough bytes exist.
"""

from __future__ import annotations

import hmac

LABEL_MASTER_SECRET = b"master secret"
LABEL_KEY_EXPANSION = b"key expansion"
LABEL_CLIENT_FINISHED = b"client finished"
LABEL_SERVER_FINISHED = b"server finished"

MASTER_SECRET_LEN = 48
VERIFY_DATA_LEN = 12


def _p_sha256(secret: bytes, seed: bytes, length: int) -> bytes:
    out = bytearray()
    a = seed
    while len(out) < length:
        a = hmac.digest(secret, a, "sha256")
        out += hmac.digest(secret, a + seed, "sha256")
    return bytes(out[:length])


def tls12_prf(secret: bytes, label: bytes, seed: bytes, length: int) -> bytes:
    return _p_sha256(secret, label + seed, length)


def master_secret(premaster: bytes, client_random: bytes, server_random: bytes) -> bytes:
    return tls12_prf(
        premaster, LABEL_MASTER_SECRET, client_random + server_random, MASTER_SECRET_LEN
    )


def key_block(master: bytes, client_random: bytes, server_random: bytes, length: int) -> bytes:
    # Note the swapped salt order relative to the master-secret derivation.
    return tls12_prf(master, LABEL_KEY_EXPANSION, server_random + client_random, length)


def finished_verify_data(master: bytes, label: bytes, transcript_hash: bytes) -> bytes:
    return tls12_prf(master, label, transcript_hash, VERIFY_DATA_LEN)
