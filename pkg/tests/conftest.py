"""Shared fixtures: Paillier keys, randomizer pools, and the test certificate.

The expensive artifacts (2048-bit keypair, randomizer pools, RSA certificate)
are session-scoped and seeded, so the suite is deterministic and pays the
offline costs once.
"""

from __future__ import annotations

import random

import pytest

from tlsoracle.shares import AhePaillierKeys, precompute_randomizers
from tlsoracle.testbed.certs import ServerIdentity, generate_server_identity


@pytest.fixture(scope="session")
def paillier_keys() -> AhePaillierKeys:
    return AhePaillierKeys.generate(random.Random(0x5EED))


@pytest.fixture(scope="session")
def server_identity() -> ServerIdentity:
    return generate_server_identity()


@pytest.fixture(scope="session")
def randomizer_pool_factory(paillier_keys):
    """Offline-phase pool maker; draws are seeded per requested purpose."""

    def make(count: int, seed: int = 0xF00D) -> list[int]:
        return precompute_randomizers(paillier_keys.n, count, random.Random(seed))

    return make


@pytest.fixture()
def rng() -> random.Random:
    return random.Random(0xA11CE)
