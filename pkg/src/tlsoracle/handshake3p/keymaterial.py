"""Session key schedule: the standard TLS 1.2 key block and the split views
the two oracle parties hold after the handshake.

Key block layout (RFC 5246 section 6.3, in order): client MAC key, server
MAC key, client encryption key, server encryption key, client IV, server IV.
For AES-128-CBC-SHA256 the MAC keys are 32 bytes each, the AES keys 16, and
the IV length is zero (TLS 1.2 CBC uses per-record explicit IVs). For
AES-128-GCM the MAC keys are absent and the "IVs" are the 4-byte record
salts.

Neither party ever holds the full secret material alone:

* CBC: the prover holds both AES keys outright (it must encrypt and decrypt
  locally), while each direction's 32-byte HMAC key is XOR-shared.
* GCM: each direction's 16-byte AES key is XOR-shared; the salts are public.
* The 48-byte master secret is XOR-shared in both suites (it feeds the
  Finished computations and nothing else after the handshake).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..recordlayer import GCM_SALT_LEN, MAC_LEN, CipherSuite
from . import prf

AES128_KEY_LEN = 16

PROVER = "prover"
VERIFIER = "verifier"


def key_block_length(suite: CipherSuite) -> int:
    if suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
        return 2 * MAC_LEN + 2 * AES128_KEY_LEN
    if suite == CipherSuite.ECDHE_RSA_AES128_GCM_SHA256:
        return 2 * AES128_KEY_LEN + 2 * GCM_SALT_LEN
    raise ValueError(f"unsupported suite {suite!r}")


@dataclass(frozen=True)
class KeyBlock:
    """The fully expanded single-party key schedule (server side and the
    reference tests use this; the oracle parties only ever see shares)."""

    suite: CipherSuite
    client_mac: bytes
    server_mac: bytes
    client_key: bytes
    server_key: bytes
    client_iv: bytes
    server_iv: bytes

    @classmethod
    def derive(
        cls, suite: CipherSuite, master: bytes, client_random: bytes, server_random: bytes
    ) -> "KeyBlock":
        raw = prf.key_block(master, client_random, server_random, key_block_length(suite))
        if suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
            mac_len, iv_len = MAC_LEN, 0
        else:
            mac_len, iv_len = 0, GCM_SALT_LEN
        pos = 0

        def take(n: int) -> bytes:
            nonlocal pos
            chunk = raw[pos : pos + n]
            pos += n
            return chunk

        return cls(
            suite=suite,
            client_mac=take(mac_len),
            server_mac=take(mac_len),
            client_key=take(AES128_KEY_LEN),
            server_key=take(AES128_KEY_LEN),
            client_iv=take(iv_len),
            server_iv=take(iv_len),
        )


@dataclass(frozen=True)
class SessionKeyMaterial:
    """One party's post-handshake view of the session keys.

    Fields are None when they do not exist for the suite (e.g. MAC shares
    under GCM) or are withheld from the role (e.g. CBC AES keys from the
    verifier). XOR of the two parties' share fields reconstructs the true
    key; that identity is what the handshake acceptance checks assert.
    """

    role: str
    suite: CipherSuite
    master_share: bytes
    client_enc_key: bytes | None = None
    server_enc_key: bytes | None = None
    client_mac_share: bytes | None = None
    server_mac_share: bytes | None = None
    client_key_share: bytes | None = None
    server_key_share: bytes | None = None
    client_salt: bytes | None = None
    server_salt: bytes | None = None

    def __post_init__(self) -> None:
        if self.role not in (PROVER, VERIFIER):
            raise ValueError(f"bad role {self.role!r}")
        if len(self.master_share) != prf.MASTER_SECRET_LEN:
            raise ValueError("master share must be 48 bytes")
        if self.suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
            if self.client_mac_share is None or self.server_mac_share is None:
                raise ValueError("CBC requires MAC shares for both directions")
            if len(self.client_mac_share) != MAC_LEN or len(self.server_mac_share) != MAC_LEN:
                raise ValueError("MAC shares must be 32 bytes")
            if self.role == PROVER and (self.client_enc_key is None or self.server_enc_key is None):
                raise ValueError("CBC prover holds both AES keys")
            if self.role == VERIFIER and (
                self.client_enc_key is not None or self.server_enc_key is not None
            ):
                raise ValueError("CBC verifier must not hold AES keys")
            if self.client_key_share is not None or self.server_key_share is not None:
                raise ValueError("CBC sessions have no AEAD key shares")
        else:
            if self.client_key_share is None or self.server_key_share is None:
                raise ValueError("GCM requires AES key shares for both directions")
            if (
                len(self.client_key_share) != AES128_KEY_LEN
                or len(self.server_key_share) != AES128_KEY_LEN
            ):
                raise ValueError("AES key shares must be 16 bytes")
            if self.client_salt is None or self.server_salt is None:
                raise ValueError("GCM requires both record salts")
            if self.client_enc_key is not None or self.server_enc_key is not None:
                raise ValueError("GCM sessions never expose a full AES key")
            if self.client_mac_share is not None or self.server_mac_share is not None:
                raise ValueError("GCM sessions have no HMAC shares")


def xor_bytes(a: bytes, b: bytes) -> bytes:
    if len(a) != len(b):
        raise ValueError("length mismatch")
    return bytes(x ^ y for x, y in zip(a, b))
