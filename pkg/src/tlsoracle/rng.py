"""Injected randomness.

All protocol randomness flows through a `random.Random`-compatible source so
tests can seed every party independently and replay runs deterministically.
Production entry points default to `random.SystemRandom`.
"""

from __future__ import annotations

import random

Rng = random.Random


def system_rng() -> Rng:
    return random.SystemRandom()


def rand_bytes(rng: Rng, n: int) -> bytes:
    # SystemRandom inherits randbytes() via getrandbits(), so this works for
    # both seeded and OS-backed sources.
    if n == 0:
        return b""
    return rng.getrandbits(n * 8).to_bytes(n, "big")


def rand_below(rng: Rng, bound: int) -> int:
    """Uniform integer in [0, bound)."""
    if bound <= 0:
        raise ValueError("bound must be positive")
    return rng.randrange(bound)


def rand_scalar(rng: Rng, modulus: int) -> int:
    """Uniform nonzero field element in [1, modulus)."""
    return rng.randrange(1, modulus)
