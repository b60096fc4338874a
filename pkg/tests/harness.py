"""Shared three-party test harness.

Spins up prover, verifier, and the mock server on one fabric, runs the
split handshake, and optionally hands each side a continuation for the
application phase. Tamper tests install fabric interceptors before the run.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Callable

from tlsoracle.encoding import ByteReader, encode_bytes
from tlsoracle.fabric import ChannelClosed, Fabric, run_parties
from tlsoracle.frames import (
    FRAME_SESSION_DONE,
    FRAME_SHARE_RELEASE,
    FRAME_SHARE_RELEASE_REQUEST,
    build_frame,
    split_frame,
)
from tlsoracle.handshake3p import HandshakeConfig, HandshakeDealer, xor_bytes
from tlsoracle.session import align_http_request  # noqa: F401  (re-exported)
from tlsoracle.handshake3p.protocol import (
    ProverHandshakeResult,
    VerifierHandshakeResult,
    run_prover_handshake,
    run_verifier_handshake,
)
from tlsoracle.recordlayer import CipherSuite
from tlsoracle.rendezvous import PROVER, VERIFIER
from tlsoracle.shares.paillier import AhePaillierKeys
from tlsoracle.testbed.certs import ServerIdentity
from tlsoracle.testbed.mockserver import (
    MockServerConfig,
    MockTlsServer,
    json_price_route,
    serve_engine,
)
from tlsoracle.twopc_records import GcmDealer, HmacTagDealer

SERVER = "server"

DEFAULT_ROUTES = {"/quote": json_price_route("1157.7500")}


@dataclass
class TripleRun:
    fabric: Fabric
    server: MockTlsServer
    dealer: HandshakeDealer
    hmac_dealer: HmacTagDealer
    gcm_dealer: GcmDealer
    prover: ProverHandshakeResult | None = None
    verifier: VerifierHandshakeResult | None = None
    extras: dict = field(default_factory=dict)

    def channel_payloads(self, a: str = PROVER, b: str = VERIFIER) -> list[bytes]:
        return [
            e.payload
            for e in self.fabric.transcript
            if {e.sender, e.receiver} == {a, b}
        ]


def serve_frames_until_done(result: VerifierHandshakeResult, channel) -> None:
    """Default verifier continuation: keep answering record-layer assists
    (and a bare share-release handoff) until the prover announces the
    session is over or the fabric closes."""
    while True:
        try:
            ftype, body = split_frame(channel.recv())
        except ChannelClosed:
            return
        if ftype == FRAME_SESSION_DONE:
            return
        if ftype == FRAME_SHARE_RELEASE_REQUEST:
            result.record_layer.retire()
            client_share, server_share = result.record_layer.release_shares()
            channel.send(
                build_frame(
                    FRAME_SHARE_RELEASE,
                    encode_bytes(client_share) + encode_bytes(server_share),
                )
            )
            continue
        if not result.record_layer.handle_frame(ftype, body):
            raise AssertionError(f"verifier saw unexpected frame {ftype:#04x}")


def request_share_release(result, channel) -> tuple[bytes, bytes]:
    """Prover helper: retire the verifier's assists and fetch both direction
    shares, returning the reconstructed full (client, server) secrets —
    MAC keys under CBC, AES keys under GCM."""
    channel.send(build_frame(FRAME_SHARE_RELEASE_REQUEST))
    ftype, body = split_frame(channel.recv())
    assert ftype == FRAME_SHARE_RELEASE, f"unexpected frame {ftype:#04x}"
    reader = ByteReader(body)
    client_share = reader.read_bytes()
    server_share = reader.read_bytes()
    reader.expect_end()
    km = result.key_material
    if result.key_material.suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
        return (
            xor_bytes(km.client_mac_share, client_share),
            xor_bytes(km.server_mac_share, server_share),
        )
    return (
        xor_bytes(km.client_key_share, client_share),
        xor_bytes(km.server_key_share, server_share),
    )


def run_triple(
    suite: CipherSuite,
    identity: ServerIdentity,
    ahe_keys: AhePaillierKeys,
    seed: int = 0xA11CE,
    routes: dict | None = None,
    interceptors: list | None = None,
    prover_tail: Callable | None = None,
    verifier_tail: Callable | None = None,
    timeout: float = 30.0,
) -> TripleRun:
    """Run the split handshake (plus optional continuations) to completion.

    `prover_tail(run, result, endpoint)` runs after the prover handshake and
    before FRAME_SESSION_DONE is sent; `verifier_tail(run, result, channel)`
    replaces the default assist-serving loop.
    """
    fabric = Fabric(timeout=timeout)
    for fn in interceptors or []:
        fabric.add_interceptor(fn)

    dealer_rng = random.Random(seed)
    dealer = HandshakeDealer(rng=dealer_rng, timeout=timeout)
    hmac_dealer = HmacTagDealer(timeout=timeout)
    gcm_dealer = GcmDealer(dealer_rng, timeout=timeout)
    for obj in (dealer, hmac_dealer, gcm_dealer):
        fabric.register_closeable(obj)

    config = HandshakeConfig(suite=suite, pinned_root_der=identity.certificate_der)
    server = MockTlsServer(
        MockServerConfig(
            identity=identity,
            routes=dict(DEFAULT_ROUTES if routes is None else routes),
            expose_keys=True,
            rng=random.Random(seed + 1),
        )
    )
    run = TripleRun(
        fabric=fabric,
        server=server,
        dealer=dealer,
        hmac_dealer=hmac_dealer,
        gcm_dealer=gcm_dealer,
    )

    def prover_party(endpoint):
        result = run_prover_handshake(
            server_link=endpoint.channel(SERVER),
            verifier_channel=endpoint.channel(VERIFIER),
            dealer=dealer,
            config=config,
            rng=random.Random(seed + 2),
            ahe_keys=ahe_keys,
            hmac_dealer=hmac_dealer,
            gcm_dealer=gcm_dealer,
        )
        run.prover = result
        if prover_tail is not None:
            prover_tail(run, result, endpoint)
        endpoint.channel(VERIFIER).send(build_frame(FRAME_SESSION_DONE))

    def verifier_party(endpoint):
        channel = endpoint.channel(PROVER)
        result = run_verifier_handshake(
            prover_channel=channel,
            dealer=dealer,
            config=config,
            rng=random.Random(seed + 3),
            hmac_dealer=hmac_dealer,
            gcm_dealer=gcm_dealer,
        )
        run.verifier = result
        if verifier_tail is not None:
            verifier_tail(run, result, channel)
        else:
            serve_frames_until_done(result, channel)

    run_parties(
        fabric,
        {
            PROVER: prover_party,
            VERIFIER: verifier_party,
            SERVER: serve_engine(server, peer=PROVER),
        },
        daemons={SERVER},
    )
    return run
