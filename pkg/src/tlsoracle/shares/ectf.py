"""Share conversion from EC points to x-coordinate field shares.

Input: the initiator holds point P1, the responder holds point P2,
representing the additive sharing P1 ⋆ P2 of a secret DH point (⋆ is EC
group addition). Output: field elements s1, s2 with s1 + s2 ≡ x(P1 ⋆ P2)
(mod p). Neither party learns the other's point or the combined coordinate.

The computation mirrors the affine addition formula x = λ² − x1 − x2 with
λ = (y2 − y1)/(x2 − x1), done on shares:

1. sample ρ_i; α-shares := MtA((−x1, ρ1), (ρ2, x2)), so that
   δ_i = x_i·ρ_i·(−1)^{i==1} + α_i sums to δ = (x2 − x1)(ρ1 + ρ2)
2. reveal δ (uniformly masked by ρ1 + ρ2) and set η_i = ρ_i · δ⁻¹, so that
   η1 + η2 = (x2 − x1)⁻¹
3. β-shares := MtA((−y1, η1), (η2, y2)); λ_i = ∓y_i·η_i + β_i sums to λ
4. γ-shares := MtA(λ1, λ2); s_i = 2γ_i + λ_i² − x_i sums to λ² − x1 − x2

The initiator owns the AHE keypair and plays the encryptor in all three
conversions (in a session this is the prover). The revealed δ is the only
transcript value either party sees in the clear, and it is uniform for
uniform ρ. When δ = 0 both sides observe it and coordinate a retry with
fresh ρ; x1 = x2 makes δ identically zero, which is the degenerate
(doubling) case the protocol rejects.

`ectf_initiator` / `ectf_responder` are the real protocol parties, speaking
over any channel with blocking send/recv. `ectf` runs both over an
in-process fabric and returns the pair of shares, for tests and callers that
hold both points.
"""

from __future__ import annotations

from ..encoding import ByteReader, encode_bytes
from ..fabric import Fabric, PartyFailed, run_parties
from ..rng import Rng, rand_scalar
from . import paillier
from .ec import ECPoint, FieldScalar, P
from .mta import mta_finish, mta_request, mta_respond, MtaMessage

# Randomizer-pool demand per run: 2 + 2 + 1 owner encryptions, 3 responder
# mask encryptions.
ECTF_OWNER_RANDOMIZERS = 5
ECTF_RESPONDER_RANDOMIZERS = 3

_MAX_ZERO_DELTA_RETRIES = 4


class DegenerateShareError(ValueError):
    """The shared points have equal x-coordinates; the affine slope formula is
    undefined (doubling or inverse case), which honest DH sharings hit with
    negligible probability."""


def _pool_take(pool, k: int) -> list[int] | None:
    """Drain k randomizers, or fall back to fresh ones when the pool is short
    (only reachable through the negligible-probability δ=0 retry path)."""
    if pool is None:
        return None
    taken = [r for _, r in zip(range(k), pool)]
    return taken if len(taken) == k else None


def _pool_take_one(pool) -> int | None:
    if pool is None:
        return None
    return next(pool, None)


def ectf_initiator(
    channel,
    keys: paillier.AhePaillierKeys,
    point: ECPoint,
    rng: Rng,
    randomizers: list[int] | None = None,
) -> FieldScalar:
    """Party 1 of the conversion; owns the AHE key. Returns its share s1."""
    if point.infinity:
        raise ValueError("share must be a finite point")
    x1, y1 = point.x, point.y
    pool = iter(randomizers) if randomizers is not None else None

    for _ in range(_MAX_ZERO_DELTA_RETRIES):
        rho1 = FieldScalar(rand_scalar(rng, P))
        request = mta_request(keys, [-x1, rho1], rng, _pool_take(pool, 2))
        channel.send(request.to_bytes())
        reader = ByteReader(channel.recv())
        response = MtaMessage.from_bytes(reader.read_bytes())
        delta2 = FieldScalar.from_bytes(reader.read_bytes())
        reader.expect_end()
        alpha1 = mta_finish(keys, response)
        delta1 = -x1 * rho1 + alpha1
        delta = delta1 + delta2
        if delta.value != 0:
            break
        # Coordinated retry: the responder sees the same δ once it learns δ1.
        channel.send(encode_bytes(delta1.to_bytes()))
    else:
        raise DegenerateShareError("x-coordinates coincide (δ = 0 persisted)")

    delta_inv = delta.inverse()
    eta1 = rho1 * delta_inv
    request2 = mta_request(keys, [-y1, eta1], rng, _pool_take(pool, 2))
    channel.send(encode_bytes(delta1.to_bytes()) + encode_bytes(request2.to_bytes()))
    beta1 = mta_finish(keys, MtaMessage.from_bytes(channel.recv()))
    lam1 = -y1 * eta1 + beta1

    request3 = mta_request(keys, [lam1], rng, _pool_take(pool, 1))
    channel.send(request3.to_bytes())
    gamma1 = mta_finish(keys, MtaMessage.from_bytes(channel.recv()))
    return FieldScalar(2) * gamma1 + lam1 * lam1 - x1


def ectf_responder(
    channel,
    modulus: int,
    point: ECPoint,
    rng: Rng,
    randomizers: list[int] | None = None,
) -> FieldScalar:
    """Party 2 of the conversion; sees only the AHE public modulus. Returns s2."""
    if point.infinity:
        raise ValueError("share must be a finite point")
    x2, y2 = point.x, point.y
    pool = iter(randomizers) if randomizers is not None else None

    for _ in range(_MAX_ZERO_DELTA_RETRIES):
        rho2 = FieldScalar(rand_scalar(rng, P))
        request = MtaMessage.from_bytes(channel.recv())
        response, alpha2 = mta_respond(modulus, request, [rho2, x2], rng, _pool_take_one(pool))
        delta2 = x2 * rho2 + alpha2
        channel.send(encode_bytes(response.to_bytes()) + encode_bytes(delta2.to_bytes()))
        reader = ByteReader(channel.recv())
        delta1 = FieldScalar.from_bytes(reader.read_bytes())
        delta = delta1 + delta2
        if delta.value != 0:
            break
        reader.expect_end()  # retry notification carries nothing else
    else:
        raise DegenerateShareError("x-coordinates coincide (δ = 0 persisted)")

    request2 = MtaMessage.from_bytes(reader.read_bytes())
    reader.expect_end()
    delta_inv = delta.inverse()
    eta2 = rho2 * delta_inv
    response2, beta2 = mta_respond(modulus, request2, [eta2, y2], rng, _pool_take_one(pool))
    channel.send(response2.to_bytes())
    lam2 = y2 * eta2 + beta2

    request3 = MtaMessage.from_bytes(channel.recv())
    response3, gamma2 = mta_respond(modulus, request3, [lam2], rng, _pool_take_one(pool))
    channel.send(response3.to_bytes())
    return FieldScalar(2) * gamma2 + lam2 * lam2 - x2


def ectf(
    keys: paillier.AhePaillierKeys,
    p1: ECPoint,
    p2: ECPoint,
    rng1: Rng,
    rng2: Rng,
    owner_randomizers: list[int] | None = None,
    responder_randomizers: list[int] | None = None,
    transcript: list[bytes] | None = None,
) -> tuple[FieldScalar, FieldScalar]:
    """Run both parties over an in-process fabric; returns (s1, s2)."""
    if p1.infinity or p2.infinity:
        raise ValueError("shares must be finite points")
    if p1.x == p2.x:
        raise DegenerateShareError("x-coordinates coincide")

    fabric = Fabric(timeout=30.0)

    def initiator(endpoint):
        return ectf_initiator(
            endpoint.channel("responder"), keys, p1, rng1, owner_randomizers
        )

    def responder(endpoint):
        return ectf_responder(
            endpoint.channel("initiator"), keys.n, p2, rng2, responder_randomizers
        )

    try:
        results = run_parties(fabric, {"initiator": initiator, "responder": responder})
    except PartyFailed as exc:
        raise exc.cause from None
    if transcript is not None:
        transcript.extend(entry.payload for entry in fabric.transcript)
    return results["initiator"], results["responder"]
