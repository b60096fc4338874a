"""Algebraic substrate: P-256 arithmetic, additively homomorphic encryption,
and the share-conversion protocols (multiplicative-to-additive, EC point to
x-coordinate)."""

from .ec import (
    COORD_BYTES,
    GENERATOR,
    INFINITY,
    ORDER,
    P,
    ECPoint,
    FieldScalar,
    ec_add,
    ec_double,
    ec_mul,
)
from .ectf import (
    ECTF_OWNER_RANDOMIZERS,
    ECTF_RESPONDER_RANDOMIZERS,
    DegenerateShareError,
    ectf,
)
from .mta import (
    MTA_MAX_LEN,
    MtaLengthError,
    MtaMessage,
    mta,
    mta_finish,
    mta_request,
    mta_respond,
)
from .paillier import (
    DEFAULT_MODULUS_BITS,
    AhePaillierKeys,
    add_ciphertexts,
    precompute_randomizers,
    public_encrypt,
    scalar_mul_ciphertext,
)
from ..rng import Rng


def ahe_roundtrip(plaintext: int, keys: AhePaillierKeys, rng: Rng) -> int:
    """Encrypt-then-decrypt sanity path used by callers probing a keypair."""
    return keys.decrypt(keys.encrypt(plaintext, rng))


__all__ = [
    "COORD_BYTES",
    "GENERATOR",
    "INFINITY",
    "ORDER",
    "P",
    "ECPoint",
    "FieldScalar",
    "ec_add",
    "ec_double",
    "ec_mul",
    "ECTF_OWNER_RANDOMIZERS",
    "ECTF_RESPONDER_RANDOMIZERS",
    "DegenerateShareError",
    "ectf",
    "MTA_MAX_LEN",
    "MtaLengthError",
    "MtaMessage",
    "mta",
    "mta_finish",
    "mta_request",
    "mta_respond",
    "DEFAULT_MODULUS_BITS",
    "AhePaillierKeys",
    "add_ciphertexts",
    "precompute_randomizers",
    "public_encrypt",
    "scalar_mul_ciphertext",
    "ahe_roundtrip",
]
