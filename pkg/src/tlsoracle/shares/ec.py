"""P-256 (secp256r1) field and group arithmetic.

Affine double-and-add over the NIST P-256 curve, the ECDHE curve both cipher
suites negotiate. Performance is a non-goal: a few dozen scalar
multiplications per handshake, each well under a millisecond of modular
inversions, is all the protocols need.

`FieldScalar` wraps an element of the base field F_p (the same field the
share-conversion protocols produce additive shares in, since those shares
reconstruct an x-coordinate). `ECPoint` is an affine point or the identity.
"""

from __future__ import annotations

from dataclasses import dataclass

# NIST P-256 domain parameters (FIPS 186-4, D.1.2.3).
P = 0xFFFFFFFF00000001000000000000000000000000FFFFFFFFFFFFFFFFFFFFFFFF
A = P - 3
B = 0x5AC635D8AA3A93E7B3EBBD55769886BC651D06B0CC53B0F63BCE3C3E27D2604B
ORDER = 0xFFFFFFFF00000000FFFFFFFFFFFFFFFFBCE6FAADA7179E84F3B9CAC2FC632551
GX = 0x6B17D1F2E12C4247F8BCE6E563A440F277037D812DEB33A0F4A13945D898C296
GY = 0x4FE342E2FE1A7F9B8EE7EB4A7C0F9E162BCE33576B315ECECBB6406837BF51F5

COORD_BYTES = 32


@dataclass(frozen=True)
class FieldScalar:
    """An element of F_p, the P-256 base field."""

    value: int

    def __post_init__(self) -> None:
        if not 0 <= self.value < P:
            raise ValueError("field element out of range")

    def __add__(self, other: "FieldScalar") -> "FieldScalar":
        return FieldScalar((self.value + other.value) % P)

    def __sub__(self, other: "FieldScalar") -> "FieldScalar":
        return FieldScalar((self.value - other.value) % P)

    def __mul__(self, other: "FieldScalar") -> "FieldScalar":
        return FieldScalar((self.value * other.value) % P)

    def __neg__(self) -> "FieldScalar":
        return FieldScalar((-self.value) % P)

    def inverse(self) -> "FieldScalar":
        if self.value == 0:
            raise ZeroDivisionError("zero has no inverse")
        return FieldScalar(pow(self.value, -1, P))

    def to_bytes(self) -> bytes:
        return self.value.to_bytes(COORD_BYTES, "big")

    @classmethod
    def from_bytes(cls, raw: bytes) -> "FieldScalar":
        if len(raw) != COORD_BYTES:
            raise ValueError("field element must be 32 bytes")
        return cls(int.from_bytes(raw, "big"))


@dataclass(frozen=True)
class ECPoint:
    """Affine point on P-256, or the identity when `infinity` is set."""

    x: FieldScalar
    y: FieldScalar
    infinity: bool = False

    def __post_init__(self) -> None:
        if not self.infinity and not _on_curve(self.x.value, self.y.value):
            raise ValueError("point is not on the curve")

    def to_bytes(self) -> bytes:
        """Uncompressed SEC1 encoding (0x04 ∥ x ∥ y); identity is not encodable."""
        if self.infinity:
            raise ValueError("identity point has no wire encoding")
        return b"\x04" + self.x.to_bytes() + self.y.to_bytes()

    @classmethod
    def from_bytes(cls, raw: bytes) -> "ECPoint":
        if len(raw) != 1 + 2 * COORD_BYTES or raw[0] != 0x04:
            raise ValueError("expected a 65-byte uncompressed point")
        return cls(
            FieldScalar.from_bytes(raw[1 : 1 + COORD_BYTES]),
            FieldScalar.from_bytes(raw[1 + COORD_BYTES :]),
        )


def _on_curve(x: int, y: int) -> bool:
    return (y * y - (x * x * x + A * x + B)) % P == 0


INFINITY = ECPoint(FieldScalar(0), FieldScalar(0), infinity=True)
GENERATOR = ECPoint(FieldScalar(GX), FieldScalar(GY))


def ec_add(p1: ECPoint, p2: ECPoint) -> ECPoint:
    if p1.infinity:
        return p2
    if p2.infinity:
        return p1
    x1, y1, x2, y2 = p1.x.value, p1.y.value, p2.x.value, p2.y.value
    if x1 == x2:
        if (y1 + y2) % P == 0:
            return INFINITY
        return ec_double(p1)
    lam = (y2 - y1) * pow(x2 - x1, -1, P) % P
    x3 = (lam * lam - x1 - x2) % P
    y3 = (lam * (x1 - x3) - y1) % P
    return ECPoint(FieldScalar(x3), FieldScalar(y3))


def ec_double(p: ECPoint) -> ECPoint:
    if p.infinity or p.y.value == 0:
        return INFINITY
    x1, y1 = p.x.value, p.y.value
    lam = (3 * x1 * x1 + A) * pow(2 * y1, -1, P) % P
    x3 = (lam * lam - 2 * x1) % P
    y3 = (lam * (x1 - x3) - y1) % P
    return ECPoint(FieldScalar(x3), FieldScalar(y3))


def ec_mul(k: int, p: ECPoint) -> ECPoint:
    if k % ORDER == 0 or p.infinity:
        return INFINITY
    k %= ORDER
    acc = INFINITY
    addend = p
    while k:
        if k & 1:
            acc = ec_add(acc, addend)
        addend = ec_double(addend)
        k >>= 1
    return acc
