"""Shares layer: curve arithmetic, AHE, and the share-conversion protocols."""

from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tlsoracle.shares import (
    GENERATOR,
    MTA_MAX_LEN,
    ORDER,
    P,
    AhePaillierKeys,
    DegenerateShareError,
    ECPoint,
    FieldScalar,
    MtaLengthError,
    MtaMessage,
    add_ciphertexts,
    ahe_roundtrip,
    ec_add,
    ec_mul,
    ectf,
    mta,
    precompute_randomizers,
    public_encrypt,
    scalar_mul_ciphertext,
)
from tlsoracle.shares.mta import MASK_SHIFT, mta_request, mta_respond

from .oracles import ec_point_oracle, ecdh_x_oracle


def rand_point(rng: random.Random) -> ECPoint:
    return ec_mul(rng.randrange(1, ORDER), GENERATOR)


# -- curve arithmetic --------------------------------------------------------


class TestCurve:
    def test_generator_matches_library(self):
        x, y = ec_point_oracle(1)
        assert (GENERATOR.x.value, GENERATOR.y.value) == (x, y)

    def test_scalar_mul_matches_library(self, rng):
        for _ in range(8):
            k = rng.randrange(1, ORDER)
            point = ec_mul(k, GENERATOR)
            assert (point.x.value, point.y.value) == ec_point_oracle(k)

    def test_add_matches_library(self, rng):
        for _ in range(8):
            a, b = rng.randrange(1, ORDER), rng.randrange(1, ORDER)
            if (a + b) % ORDER == 0:
                continue
            left = ec_add(ec_mul(a, GENERATOR), ec_mul(b, GENERATOR))
            assert (left.x.value, left.y.value) == ec_point_oracle((a + b) % ORDER)

    def test_ecdh_agreement_matches_library(self, rng):
        k = rng.randrange(1, ORDER)
        peer = rand_point(rng)
        assert ec_mul(k, peer).x.value == ecdh_x_oracle(k, peer.x.value, peer.y.value)

    def test_point_encoding_roundtrip(self, rng):
        point = rand_point(rng)
        assert ECPoint.from_bytes(point.to_bytes()) == point

    def test_off_curve_rejected(self):
        with pytest.raises(ValueError):
            ECPoint(FieldScalar(1), FieldScalar(1))

    def test_field_scalar_range(self):
        with pytest.raises(ValueError):
            FieldScalar(P)
        with pytest.raises(ValueError):
            FieldScalar(-1)


# -- AHE ----------------------------------------------------------------------


class TestPaillier:
    def test_zero_roundtrip(self, paillier_keys, rng):
        assert ahe_roundtrip(0, paillier_keys, rng) == 0

    def test_homomorphic_add_small(self, paillier_keys, rng):
        c = add_ciphertexts(
            paillier_keys.n,
            paillier_keys.encrypt(7, rng),
            paillier_keys.encrypt(5, rng),
        )
        assert paillier_keys.decrypt(c) == 12

    def test_scalar_multiply_random(self, paillier_keys, rng):
        # 50 random (x, c) pairs against direct big-integer arithmetic.
        n = paillier_keys.n
        for _ in range(50):
            x = rng.randrange(n)
            c = rng.randrange(1 << 128)
            ct = scalar_mul_ciphertext(n, paillier_keys.encrypt(x, rng), c)
            assert paillier_keys.decrypt(ct) == c * x % n

    def test_public_side_encryption(self, paillier_keys, rng):
        ct = public_encrypt(paillier_keys.n, 424242, rng)
        assert paillier_keys.decrypt(ct) == 424242

    def test_out_of_range_rejected(self, paillier_keys, rng):
        with pytest.raises(ValueError):
            paillier_keys.encrypt(paillier_keys.n, rng)
        with pytest.raises(ValueError):
            paillier_keys.encrypt(-1, rng)

    def test_modulus_width(self, paillier_keys):
        # One inner product plus mask must never wrap: modulus has 128 bits of
        # headroom over 2·|p| for the configured vector bound.
        assert paillier_keys.n > 2 ** (2 * 256 + 128)

    def test_pool_encryption_matches_fresh(self, paillier_keys, rng):
        pool = precompute_randomizers(paillier_keys.n, 1, rng)
        ct = paillier_keys.encrypt(99, rng, pool[0])
        assert paillier_keys.decrypt(ct) == 99


# -- MtA ----------------------------------------------------------------------


def scalars(rng: random.Random, k: int) -> list[FieldScalar]:
    return [FieldScalar(rng.randrange(P)) for _ in range(k)]


class TestMta:
    def test_zero_annihilates(self, paillier_keys, rng):
        alpha, beta = mta(paillier_keys, [FieldScalar(0)], scalars(rng, 1), rng, rng)
        assert (alpha.value + beta.value) % P == 0

    def test_direct_product(self, paillier_keys, rng):
        alpha, beta = mta(paillier_keys, [FieldScalar(3)], [FieldScalar(5)], rng, rng)
        assert (alpha.value + beta.value) % P == 15

    def test_random_vectors_match_inner_product(self, paillier_keys, rng):
        for _ in range(25):
            k = rng.randrange(1, MTA_MAX_LEN + 1)
            a, b = scalars(rng, k), scalars(rng, k)
            alpha, beta = mta(paillier_keys, a, b, rng, rng)
            expect = sum(x.value * y.value for x, y in zip(a, b)) % P
            assert (alpha.value + beta.value) % P == expect

    def test_length_mismatch_rejected(self, paillier_keys, rng):
        request = mta_request(paillier_keys, scalars(rng, 2), rng)
        with pytest.raises(MtaLengthError):
            mta_respond(paillier_keys.n, request, scalars(rng, 3), rng)

    def test_oversize_vector_rejected(self, paillier_keys, rng):
        with pytest.raises(MtaLengthError):
            mta_request(paillier_keys, scalars(rng, MTA_MAX_LEN + 1), rng)

    def test_mask_never_wraps(self, paillier_keys):
        # Largest possible inner product plus largest mask stays below n.
        n = paillier_keys.n
        assert MTA_MAX_LEN * (P - 1) ** 2 + (n >> MASK_SHIFT) < n

    def test_message_encoding_roundtrip(self, paillier_keys, rng):
        request = mta_request(paillier_keys, scalars(rng, 3), rng)
        assert MtaMessage.from_bytes(request.to_bytes()).ciphertexts == request.ciphertexts


# -- ECtF ----------------------------------------------------------------------


class TestEctf:
    def test_matches_group_addition(self, paillier_keys, rng):
        for _ in range(10):
            a, b = rng.randrange(1, ORDER), rng.randrange(1, ORDER)
            if (a + b) % ORDER == 0:
                continue
            p1, p2 = ec_mul(a, GENERATOR), ec_mul(b, GENERATOR)
            s1, s2 = ectf(paillier_keys, p1, p2, rng, rng)
            expect_x, _ = ec_point_oracle((a + b) % ORDER)
            assert (s1.value + s2.value) % P == expect_x

    def test_degenerate_equal_x_aborts(self, paillier_keys, rng):
        point = rand_point(rng)
        mirrored = ECPoint(point.x, -point.y)
        with pytest.raises(DegenerateShareError):
            ectf(paillier_keys, point, mirrored, rng, rng)
        with pytest.raises(DegenerateShareError):
            ectf(paillier_keys, point, point, rng, rng)

    def test_reruns_give_fresh_shares_same_sum(self, paillier_keys, rng):
        p1, p2 = rand_point(rng), rand_point(rng)
        first = ectf(paillier_keys, p1, p2, rng, rng)
        second = ectf(paillier_keys, p1, p2, rng, rng)
        assert first != second
        total1 = (first[0].value + first[1].value) % P
        total2 = (second[0].value + second[1].value) % P
        assert total1 == total2 == ec_add(p1, p2).x.value

    def test_revealed_delta_is_unbiased(self):
        # Distribution sanity on the only value the transcript reveals in the
        # clear. δ's distribution does not depend on the AHE modulus size, so
        # this 1000-run check uses a small modulus to keep the offline phase
        # cheap; correctness tests elsewhere all run at the full 2048 bits.
        rng = random.Random(7)
        keys = AhePaillierKeys.generate(rng, bits=768)
        p1, p2 = rand_point(rng), rand_point(rng)
        x1, x2 = p1.x, p2.x
        ones = [0] * 256
        runs = 1000
        for _ in range(runs):
            rho1 = FieldScalar(rng.randrange(1, P))
            rho2 = FieldScalar(rng.randrange(1, P))
            alpha, beta = mta(keys, [-x1, rho1], [rho2, x2], rng, rng)
            delta = (-x1 * rho1 + alpha + x2 * rho2 + beta).value
            for bit in range(256):
                ones[bit] += (delta >> bit) & 1
        # No fixed predictor may beat chance + 5% on any transcript bit.
        for bit, count in enumerate(ones):
            accuracy = max(count, runs - count) / runs
            assert accuracy <= 0.55, f"bit {bit} biased: {accuracy}"


# -- hypothesis property: field ops are a commutative ring action ------------


@settings(max_examples=50, deadline=None)
@given(st.integers(0, P - 1), st.integers(0, P - 1))
def test_field_scalar_ops_match_int_arithmetic(a, b):
    fa, fb = FieldScalar(a), FieldScalar(b)
    assert (fa + fb).value == (a + b) % P
    assert (fa - fb).value == (a - b) % P
    assert (fa * fb).value == a * b % P
    if a:
        assert (fa * fa.inverse()).value == 1
