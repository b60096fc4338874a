"""Record layer, SHA-256 core, and GF(2^128) against independent references."""

from __future__ import annotations

import hashlib
import random
import struct

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tlsoracle import gf128, recordlayer, sha256core
from tlsoracle.recordlayer import (
    BadMacError,
    BadPaddingError,
    BadTagError,
    CipherRecord,
    CipherSuite,
    ContentType,
    GcmAdditionalData,
    OversizeRecordError,
    PlainRecord,
    TLS12_VERSION,
    open_cbc_hmac,
    open_gcm,
    seal_cbc_hmac,
    seal_gcm,
)

from . import oracles


# -- SHA-256 core -------------------------------------------------------------


class TestSha256Core:
    @pytest.mark.parametrize("length", [0, 1, 55, 56, 63, 64, 65, 127, 128, 200, 1024])
    def test_matches_hashlib_on_boundaries(self, length):
        data = bytes(range(256)) * 5
        assert sha256core.sha256(data[:length]) == hashlib.sha256(data[:length]).digest()

    @settings(max_examples=40, deadline=None)
    @given(st.binary(max_size=300))
    def test_matches_hashlib_random(self, data):
        assert sha256core.sha256(data) == hashlib.sha256(data).digest()

    def test_midstate_resume_equals_whole(self):
        data = bytes(range(200))
        s1 = sha256core.compress(sha256core.SHA256_IV, data[:64])
        assert sha256core.digest_from_midstate(s1, data[64:], 64) == hashlib.sha256(data).digest()

    def test_message_blocks_chain_to_digest(self):
        data = b"q" * 150
        state = sha256core.SHA256_IV
        for block in sha256core.message_blocks(data, 0):
            state = sha256core.compress(state, block)
        assert state == hashlib.sha256(data).digest()

    def test_unaligned_midstate_rejected(self):
        with pytest.raises(ValueError):
            sha256core.digest_from_midstate(sha256core.SHA256_IV, b"", 10)


# -- GF(2^128) ----------------------------------------------------------------


class TestGf128:
    def test_identity(self):
        one = 1 << 127
        x = 0x0123456789ABCDEF0123456789ABCDEF
        assert gf128.gf128_mul(one, x) == x

    def test_against_reflected_oracle(self, rng):
        for _ in range(100):
            x, y = rng.getrandbits(128), rng.getrandbits(128)
            assert gf128.gf128_mul(x, y) == oracles.gf128_mul_oracle(x, y)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(0, 2**128 - 1), st.integers(0, 2**128 - 1), st.integers(0, 2**128 - 1))
    def test_ring_laws(self, a, b, c):
        assert gf128.gf128_mul(a, b) == gf128.gf128_mul(b, a)
        left = gf128.gf128_mul(gf128.gf128_mul(a, b), c)
        right = gf128.gf128_mul(a, gf128.gf128_mul(b, c))
        assert left == right

    def test_horner_equals_power_sum(self, rng):
        # P_X(h) by Horner vs the naive Σ X_i · h^(m−i+1), 100 random inputs.
        for _ in range(100):
            h = rng.getrandbits(128)
            m = rng.randrange(1, 9)
            blocks = [rng.getrandbits(128) for _ in range(m)]
            naive = 0
            for i, x in enumerate(blocks, start=1):
                naive ^= gf128.gf128_mul(x, gf128.gf128_pow(h, m - i + 1))
            assert gf128.ghash_horner(h, blocks) == naive

    def test_ghash_matches_oracle(self, rng):
        for _ in range(20):
            h = rng.getrandbits(128)
            aad = bytes(rng.getrandbits(8) for _ in range(rng.randrange(0, 40)))
            ct = bytes(rng.getrandbits(8) for _ in range(rng.randrange(0, 80)))
            assert gf128.ghash(h, aad, ct) == oracles.ghash_oracle(
                gf128.int_to_block(h), aad, ct
            )


# -- CBC-HMAC -----------------------------------------------------------------


def make_keys(rng: random.Random) -> tuple[bytes, bytes]:
    return bytes(rng.getrandbits(8) for _ in range(16)), bytes(
        rng.getrandbits(8) for _ in range(32)
    )


class TestCbcHmac:
    def test_empty_payload_minimum_shape(self, rng):
        k_enc, k_mac = make_keys(rng)
        rec = seal_cbc_hmac(
            k_enc, k_mac, PlainRecord(23, TLS12_VERSION, 0, b""), rng
        )
        # IV + exactly 3 blocks of tag + full padding.
        assert len(rec.explicit) == 16
        assert len(rec.body) == 48

    def test_roundtrip_against_reference_open(self, rng):
        k_enc, k_mac = make_keys(rng)
        for seq in range(10):
            payload = bytes(rng.getrandbits(8) for _ in range(16 * rng.randrange(0, 40)))
            rec = seal_cbc_hmac(k_enc, k_mac, PlainRecord(23, TLS12_VERSION, seq, payload), rng)
            got = oracles.cbc_hmac_open_oracle(
                k_enc, k_mac, seq, 23, TLS12_VERSION, rec.explicit, rec.body
            )
            assert got == payload

    def test_opens_reference_sealed_records(self, rng):
        # The reference seal pads minimally; open must accept that too.
        k_enc, k_mac = make_keys(rng)
        payload = b"GET / HTTP/1.1\r\n\r\n"  # deliberately unaligned
        iv = bytes(rng.getrandbits(8) for _ in range(16))
        body = oracles.cbc_hmac_seal_oracle(k_enc, k_mac, 5, 23, TLS12_VERSION, payload, iv)
        rec = CipherRecord(23, TLS12_VERSION, iv, body)
        assert open_cbc_hmac(k_enc, k_mac, rec, 5).payload == payload

    def test_bit_flip_rejected(self, rng):
        k_enc, k_mac = make_keys(rng)
        rec = seal_cbc_hmac(k_enc, k_mac, PlainRecord(23, TLS12_VERSION, 0, b"A" * 32), rng)
        flipped = bytearray(rec.body)
        flipped[0] ^= 1
        with pytest.raises((BadMacError, BadPaddingError)):
            open_cbc_hmac(k_enc, k_mac, CipherRecord(23, TLS12_VERSION, rec.explicit, bytes(flipped)), 0)

    def test_bad_padding_and_bad_mac_are_distinct(self, rng):
        k_enc, k_mac = make_keys(rng)
        rec = seal_cbc_hmac(k_enc, k_mac, PlainRecord(23, TLS12_VERSION, 0, b"B" * 16), rng)
        # Wrong MAC key: padding intact, MAC wrong.
        with pytest.raises(BadMacError):
            open_cbc_hmac(k_enc, bytes(32), rec, 0)
        # Flip inside the final block: padding destroyed.
        flipped = bytearray(rec.body)
        flipped[-1] ^= 0xFF
        with pytest.raises(BadPaddingError):
            open_cbc_hmac(k_enc, k_mac, CipherRecord(23, TLS12_VERSION, rec.explicit, bytes(flipped)), 0)

    def test_wrong_seq_rejected(self, rng):
        k_enc, k_mac = make_keys(rng)
        rec = seal_cbc_hmac(k_enc, k_mac, PlainRecord(23, TLS12_VERSION, 3, b"C" * 16), rng)
        with pytest.raises(BadMacError):
            open_cbc_hmac(k_enc, k_mac, rec, 4)

    def test_unaligned_payload_rejected(self, rng):
        k_enc, k_mac = make_keys(rng)
        with pytest.raises(ValueError):
            seal_cbc_hmac(k_enc, k_mac, PlainRecord(23, TLS12_VERSION, 0, b"xyz"), rng)

    def test_oversize_rejected(self):
        with pytest.raises(OversizeRecordError):
            PlainRecord(23, TLS12_VERSION, 0, b"x" * (recordlayer.MAX_PAYLOAD + 16))

    def test_fresh_ivs(self, rng):
        k_enc, k_mac = make_keys(rng)
        ivs = {
            seal_cbc_hmac(k_enc, k_mac, PlainRecord(23, TLS12_VERSION, s, b""), rng).explicit
            for s in range(50)
        }
        assert len(ivs) == 50


# -- GCM ----------------------------------------------------------------------


class TestGcm:
    def test_zero_key_empty_matches_reference(self):
        # All-zero key/nonce parts, empty plaintext and AAD: the tag must
        # equal the library's output (which matches the standard vector).
        key, salt, explicit = bytes(16), bytes(4), bytes(8)
        rec = seal_gcm(key, salt, PlainRecord(23, TLS12_VERSION, 0, b""), explicit)
        aad = GcmAdditionalData(0, 23, TLS12_VERSION, 0).to_bytes()
        ct, tag = oracles.gcm_seal_oracle(key, salt + explicit, b"", aad)
        assert rec.body == ct
        assert rec.tag == tag

    def test_random_records_roundtrip_reference(self, rng):
        for _ in range(20):
            key = bytes(rng.getrandbits(8) for _ in range(16))
            salt = bytes(rng.getrandbits(8) for _ in range(4))
            explicit = bytes(rng.getrandbits(8) for _ in range(8))
            seq = rng.randrange(1 << 32)
            payload = bytes(rng.getrandbits(8) for _ in range(rng.randrange(1, 2049)))
            rec = seal_gcm(key, salt, PlainRecord(23, TLS12_VERSION, seq, payload), explicit)
            aad = GcmAdditionalData(seq, 23, TLS12_VERSION, len(payload)).to_bytes()
            ct, tag = oracles.gcm_seal_oracle(key, salt + explicit, payload, aad)
            assert (rec.body, rec.tag) == (ct, tag)
            # And our open accepts the reference's sealing.
            opened = open_gcm(key, salt, CipherRecord(23, TLS12_VERSION, explicit, ct, tag), seq)
            assert opened.payload == payload

    def test_truncated_tag_rejected(self, rng):
        key, salt, explicit = bytes(16), bytes(4), bytes(8)
        rec = seal_gcm(key, salt, PlainRecord(23, TLS12_VERSION, 0, b"hello"), explicit)
        short = CipherRecord(23, TLS12_VERSION, explicit, rec.body, rec.tag[:-1])
        with pytest.raises(BadTagError):
            open_gcm(key, salt, short, 0)

    def test_flipped_byte_rejected(self, rng):
        key, salt, explicit = bytes(16), bytes(4), bytes(8)
        rec = seal_gcm(key, salt, PlainRecord(23, TLS12_VERSION, 0, b"hello"), explicit)
        bad = CipherRecord(23, TLS12_VERSION, explicit, bytes([rec.body[0] ^ 1]) + rec.body[1:], rec.tag)
        with pytest.raises(BadTagError):
            open_gcm(key, salt, bad, 0)

    def test_wire_roundtrip(self, rng):
        key, salt, explicit = bytes(16), bytes(4), bytes(8)
        rec = seal_gcm(key, salt, PlainRecord(23, TLS12_VERSION, 0, b"data!"), explicit)
        parsed = CipherRecord.parse(rec.to_wire(), CipherSuite.ECDHE_RSA_AES128_GCM_SHA256)
        assert parsed == rec

    def test_inc32_wraps(self):
        block = b"\xff" * 16
        assert recordlayer.inc32(block) == b"\xff" * 12 + b"\x00" * 4

    def test_cbc_wire_roundtrip(self, rng):
        k_enc, k_mac = make_keys(rng)
        rec = seal_cbc_hmac(k_enc, k_mac, PlainRecord(23, TLS12_VERSION, 0, b"Z" * 16), rng)
        parsed = CipherRecord.parse(rec.to_wire(), CipherSuite.ECDHE_RSA_AES128_CBC_SHA256)
        assert parsed == rec
