"""Multiplicative-to-additive share conversion over the P-256 base field.

Two parties hold private vectors a and b of equal length; afterwards party 1
holds α and party 2 holds β with α + β ≡ ⟨a, b⟩ (mod p), and neither party
learns more than its own output.

Message flow (party 1 owns the AHE keypair):

1. party 1 sends Enc(a_1), ..., Enc(a_k)
2. party 2 replies with  ∏ Enc(a_i)^{b_i} · Enc(m)  for a fresh uniform mask m,
   and keeps β = (−m) mod p
3. party 1 decrypts to ⟨a, b⟩ + m over the integers and reduces: α mod p

The mask is drawn from [0, N >> 64): large enough to statistically hide the
inner product, small enough that inner product + mask never wraps mod N (the
modulus check in `mta_respond` enforces that headroom for the actual vector
length).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..encoding import ByteReader, encode_bytes, encode_int
from ..rng import Rng, rand_below
from . import paillier
from .ec import P, FieldScalar

# Vector bound: the share-conversion protocols never need more than two-element
# vectors, and the headroom check below admits far longer ones at 2048 bits.
MTA_MAX_LEN = 8

MASK_SHIFT = 64


class MtaLengthError(ValueError):
    pass


@dataclass(frozen=True)
class MtaMessage:
    """One flow of the conversion: the request carries the owner's ciphertext
    vector; the response carries the single folded ciphertext. `mask` is kept
    by the responder only and never serialized."""

    ciphertexts: tuple[int, ...]
    mask: FieldScalar | None = None

    def to_bytes(self) -> bytes:
        out = encode_int(len(self.ciphertexts))
        for c in self.ciphertexts:
            out += encode_int(c)
        return out

    @classmethod
    def from_bytes(cls, raw: bytes) -> "MtaMessage":
        reader = ByteReader(raw)
        count = reader.read_int()
        cts = tuple(reader.read_int() for _ in range(count))
        reader.expect_end()
        return cls(cts)


def _check_lengths(a_len: int, b_len: int, n: int) -> None:
    if a_len != b_len:
        raise MtaLengthError("vector lengths differ")
    if not 1 <= a_len <= MTA_MAX_LEN:
        raise MtaLengthError(f"vector length must be in [1, {MTA_MAX_LEN}]")
    # Wraparound headroom: k · (p−1)² + max mask must stay below N.
    if a_len * (P - 1) ** 2 + (n >> MASK_SHIFT) >= n:
        raise ValueError("AHE modulus too small for this vector bound")


def mta_request(
    keys: paillier.AhePaillierKeys,
    a: list[FieldScalar],
    rng: Rng,
    randomizers: list[int] | None = None,
) -> MtaMessage:
    _check_lengths(len(a), len(a), keys.n)
    pool = iter(randomizers) if randomizers is not None else None
    cts = tuple(
        keys.encrypt(ai.value, rng, next(pool) if pool is not None else None) for ai in a
    )
    return MtaMessage(cts)


def mta_respond(
    n: int,
    request: MtaMessage,
    b: list[FieldScalar],
    rng: Rng,
    randomizer: int | None = None,
) -> tuple[MtaMessage, FieldScalar]:
    """Responder side; returns (response message, β share)."""
    _check_lengths(len(request.ciphertexts), len(b), n)
    mask = rand_below(rng, n >> MASK_SHIFT)
    folded = paillier.public_encrypt(n, mask, rng, randomizer)
    for ct, bi in zip(request.ciphertexts, b):
        folded = paillier.add_ciphertexts(n, folded, paillier.scalar_mul_ciphertext(n, ct, bi.value))
    beta = FieldScalar((-mask) % P)
    return MtaMessage((folded,), mask=beta), beta


def mta_finish(keys: paillier.AhePaillierKeys, response: MtaMessage) -> FieldScalar:
    if len(response.ciphertexts) != 1:
        raise MtaLengthError("response must carry exactly one ciphertext")
    return FieldScalar(keys.decrypt(response.ciphertexts[0]) % P)


def mta(
    keys: paillier.AhePaillierKeys,
    a: list[FieldScalar],
    b: list[FieldScalar],
    rng1: Rng,
    rng2: Rng,
    randomizers1: list[int] | None = None,
    randomizer2: int | None = None,
    transcript: list[bytes] | None = None,
) -> tuple[FieldScalar, FieldScalar]:
    """Run the whole conversion in-process; party 1 gets α, party 2 gets β."""
    request = mta_request(keys, a, rng1, randomizers1)
    response, beta = mta_respond(keys.n, request, b, rng2, randomizer2)
    if transcript is not None:
        transcript.append(request.to_bytes())
        transcript.append(response.to_bytes())
    alpha = mta_finish(keys, response)
    return alpha, beta
