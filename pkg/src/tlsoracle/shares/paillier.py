"""Additively homomorphic encryption over Z_N (Paillier scheme).

This backs the multiplicative-to-additive share conversion: the key owner
encrypts her vector, the responder folds his vector in homomorphically and
masks the result, and the owner decrypts her additive share.

Implementation notes (all standard):

- g = N + 1, so Enc(m; r) = (1 + mN) · r^N mod N².
- Decryption and the key owner's encryption use CRT mod p² / q².
- `precompute_randomizers` computes r^N mod N² values ahead of time; with a
  pool in hand, an encryption is two modular multiplications. The pool is the
  offline phase of the share-conversion protocols; the online phase then runs
  in milliseconds even at 2048-bit N.

Security model is semi-honest (no range proofs on ciphertexts); the modulus
must dominate every inner product plus mask so no value ever wraps mod N.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpz

from ..rng import Rng, rand_below

DEFAULT_MODULUS_BITS = 2048


def _random_prime(rng: Rng, bits: int) -> int:
    # Top two bits forced so the product of two such primes always reaches
    # the full target modulus width.
    candidate = rng.getrandbits(bits) | (0b11 << (bits - 2)) | 1
    return int(gmpy2.next_prime(mpz(candidate)))


@dataclass
class AhePaillierKeys:
    """A Paillier keypair; the public side is just the modulus n."""

    p: int
    q: int
    n: int = field(init=False)

    def __post_init__(self) -> None:
        if self.p == self.q:
            raise ValueError("prime factors must differ")
        self.n = self.p * self.q
        self._nsquare = mpz(self.n) * self.n
        self._psquare = mpz(self.p) * self.p
        self._qsquare = mpz(self.q) * self.q
        # hp = L_p((n+1)^(p-1) mod p²)⁻¹ mod p, and likewise for q: the
        # per-prime decryption constants of the CRT form.
        self._hp = self._h(self.p, self._psquare)
        self._hq = self._h(self.q, self._qsquare)
        self._q_inv_p = gmpy2.invert(mpz(self.q), mpz(self.p))

    @classmethod
    def generate(cls, rng: Rng, bits: int = DEFAULT_MODULUS_BITS) -> "AhePaillierKeys":
        half = bits // 2
        while True:
            p = _random_prime(rng, half)
            q = _random_prime(rng, half)
            if p != q and (p * q).bit_length() >= bits:
                return cls(p, q)

    def _h(self, prime: int, prime_sq: mpz) -> mpz:
        x = gmpy2.powmod(mpz(self.n) + 1, prime - 1, prime_sq)
        return gmpy2.invert((x - 1) // prime, prime)

    # -- encryption ---------------------------------------------------------

    def encrypt(self, plaintext: int, rng: Rng, randomizer_power: int | None = None) -> int:
        """Owner-side encryption; accepts a precomputed r^n mod n² value."""
        if not 0 <= plaintext < self.n:
            raise ValueError("plaintext out of range")
        if randomizer_power is None:
            randomizer_power = self._fresh_randomizer_power(rng)
        c = (1 + mpz(plaintext) * self.n) % self._nsquare
        return int(c * randomizer_power % self._nsquare)

    def _fresh_randomizer_power(self, rng: Rng) -> mpz:
        r = mpz(rand_below(rng, self.n - 1) + 1)
        # CRT-split exponentiation; the owner knows the factors.
        rp = gmpy2.powmod(r % self._psquare, self.n, self._psquare)
        rq = gmpy2.powmod(r % self._qsquare, self.n, self._qsquare)
        return self._crt(rp, rq, self._psquare, self._qsquare)

    @staticmethod
    def _crt(xp: mpz, xq: mpz, pm: mpz, qm: mpz) -> mpz:
        u = gmpy2.invert(qm % pm, pm)
        return (xq + qm * ((xp - xq) * u % pm)) % (pm * qm)

    # -- decryption ---------------------------------------------------------

    def decrypt(self, ciphertext: int) -> int:
        if not 0 < ciphertext < int(self._nsquare):
            raise ValueError("ciphertext out of range")
        c = mpz(ciphertext)
        mp = (gmpy2.powmod(c % self._psquare, self.p - 1, self._psquare) - 1) // self.p
        mp = mp * self._hp % self.p
        mq = (gmpy2.powmod(c % self._qsquare, self.q - 1, self._qsquare) - 1) // self.q
        mq = mq * self._hq % self.q
        diff = (mp - mq) * self._q_inv_p % self.p
        return int(mq + diff * self.q)


# -- public-side operations (anyone holding only n) --------------------------


def public_encrypt(n: int, plaintext: int, rng: Rng, randomizer_power: int | None = None) -> int:
    if not 0 <= plaintext < n:
        raise ValueError("plaintext out of range")
    nsquare = n * n
    if randomizer_power is None:
        r = rand_below(rng, n - 1) + 1
        randomizer_power = int(gmpy2.powmod(r, n, nsquare))
    return (1 + plaintext * n) * randomizer_power % nsquare


def add_ciphertexts(n: int, c1: int, c2: int) -> int:
    return c1 * c2 % (n * n)


def scalar_mul_ciphertext(n: int, c: int, k: int) -> int:
    if k < 0:
        raise ValueError("scalar must be non-negative")
    return int(gmpy2.powmod(c, k, n * n))


def precompute_randomizers(n: int, count: int, rng: Rng) -> list[int]:
    """Offline phase: r^n mod n² values usable once each by any encryptor."""
    nsquare = n * n
    out = []
    for _ in range(count):
        r = rand_below(rng, n - 1) + 1
        out.append(int(gmpy2.powmod(r, n, nsquare)))
    return out
