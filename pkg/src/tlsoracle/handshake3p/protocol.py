"""The three-party handshake: prover on the TLS wire, verifier at its side.

The prover speaks standard TLS 1.2 ECDHE_RSA to the server. The verifier
receives the handshake parameters (randoms, certificate chain, signed key
exchange), re-validates the certificate pinning and the key-exchange
signature itself, and only then reveals its half of the client DH key — so
a prover cannot steer the session toward a server the verifier would not
accept. The ClientKeyExchange carries the combined point Y_P ⋆ Y_V; each
party computes its own half of the premaster point from the server share,
the share-conversion subprotocol turns the two points into additive field
shares of the premaster secret, and the handshake dealer expands those into
the split session keys.

Finished messages close the loop: the client Finished is sealed through the
split record path (it is the first protected record), the server Finished is
opened through it, and both verify_data values are checked by the dealer
from master-secret shares, with both parties learning the verdict.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

from ..encoding import ByteReader, encode_bytes, encode_int
from ..frames import (
    FRAME_ABORT,
    FRAME_HS_CLIENT_FINISHED_HASH,
    FRAME_HS_PARAMS,
    FRAME_HS_POINT_REVEAL,
    FRAME_HS_SERVER_FINISHED_HASH,
    FRAME_RELAY_UP,
    build_frame,
    split_frame,
)
from ..recordlayer import CipherRecord, CipherSuite, ContentType
from ..rendezvous import PROVER, VERIFIER
from ..rng import Rng, rand_bytes, rand_scalar
from ..shares import paillier
from ..shares.ec import GENERATOR, ORDER, ECPoint, ec_add, ec_mul
from ..shares.ectf import ectf_initiator, ectf_responder
from ..testbed.certs import verify_key_exchange_signature, verify_pinned_chain
from ..twopc_records import (
    RECORD_FRAME_TYPES,
    GcmDealer,
    HmacTagDealer,
    IvStore,
    ProverRecordLayer,
    VerifierRecordLayer,
)
from . import prf
from .dealer import HandshakeDealer
from .keymaterial import SessionKeyMaterial
from .messages import (
    HS_CERTIFICATE,
    HS_FINISHED,
    HS_SERVER_HELLO,
    HS_SERVER_HELLO_DONE,
    HS_SERVER_KEY_EXCHANGE,
    CHANGE_CIPHER_SPEC_PAYLOAD,
    ClientHello,
    HandshakeAccumulator,
    HandshakeDecodeError,
    RecordReader,
    ServerKeyExchange,
    ServerHello,
    TranscriptHash,
    client_key_exchange,
    finished_message,
    frame_record,
    parse_certificate,
)


class HandshakeAbort(Exception):
    """Any party-visible failure that terminates the handshake."""


@dataclass(frozen=True)
class HandshakeConfig:
    suite: CipherSuite
    pinned_root_der: bytes
    hostname: str = "localhost"


@dataclass(frozen=True)
class HandshakeParams:
    """Everything the verifier needs to audit the session it is joining."""

    client_random: bytes
    server_random: bytes
    suite: CipherSuite
    certificate_chain: tuple[bytes, ...]
    server_point: bytes
    signature: bytes
    ahe_modulus: int

    def to_bytes(self) -> bytes:
        out = encode_bytes(self.client_random)
        out += encode_bytes(self.server_random)
        out += struct.pack(">H", int(self.suite))
        out += encode_int(len(self.certificate_chain))
        for der in self.certificate_chain:
            out += encode_bytes(der)
        out += encode_bytes(self.server_point)
        out += encode_bytes(self.signature)
        out += encode_int(self.ahe_modulus)
        return out

    @classmethod
    def from_bytes(cls, raw: bytes) -> "HandshakeParams":
        reader = ByteReader(raw)
        client_random = reader.read_bytes()
        server_random = reader.read_bytes()
        suite = CipherSuite(struct.unpack(">H", reader.take(2))[0])
        chain = tuple(reader.read_bytes() for _ in range(reader.read_int()))
        server_point = reader.read_bytes()
        signature = reader.read_bytes()
        modulus = reader.read_int()
        reader.expect_end()
        return cls(
            client_random=client_random,
            server_random=server_random,
            suite=suite,
            certificate_chain=chain,
            server_point=server_point,
            signature=signature,
            ahe_modulus=modulus,
        )

    def signed_content(self) -> bytes:
        ske = ServerKeyExchange(public_point=self.server_point, signature=self.signature)
        return ske.signed_content(self.client_random, self.server_random)


@dataclass
class ProverHandshakeResult:
    key_material: SessionKeyMaterial
    record_layer: ProverRecordLayer
    params: HandshakeParams
    transcript: TranscriptHash
    client_finished_hash: bytes
    server_finished_hash: bytes
    server_link: object
    record_reader: RecordReader


@dataclass
class VerifierHandshakeResult:
    key_material: SessionKeyMaterial
    record_layer: VerifierRecordLayer
    params: HandshakeParams
    client_finished_hash: bytes
    server_finished_hash: bytes


def _abort(channel, reason: str) -> HandshakeAbort:
    channel.send(build_frame(FRAME_ABORT, reason.encode()))
    return HandshakeAbort(reason)


def _expect_frame(channel, expected_type: int) -> bytes:
    ftype, body = split_frame(channel.recv())
    if ftype == FRAME_ABORT:
        raise HandshakeAbort(f"peer aborted: {body.decode(errors='replace')}")
    if ftype != expected_type:
        raise HandshakeAbort(f"expected frame {expected_type:#04x}, got {ftype:#04x}")
    return body


# ---------------------------------------------------------------------------
# prover


def run_prover_handshake(
    server_link,
    verifier_channel,
    dealer: HandshakeDealer,
    config: HandshakeConfig,
    rng: Rng,
    ahe_keys: paillier.AhePaillierKeys,
    hmac_dealer: HmacTagDealer | None = None,
    gcm_dealer: GcmDealer | None = None,
    ectf_randomizers: list[int] | None = None,
) -> ProverHandshakeResult:
    transcript = TranscriptHash()
    reader = RecordReader()
    acc = HandshakeAccumulator()

    client_random = rand_bytes(rng, 32)
    hello = ClientHello(random=client_random, cipher_suites=(int(config.suite),)).to_bytes()
    transcript.add(hello)
    server_link.send(frame_record(ContentType.HANDSHAKE, hello))

    messages = _read_handshake_flight(server_link, reader, acc, until=HS_SERVER_HELLO_DONE)
    expected_order = (HS_SERVER_HELLO, HS_CERTIFICATE, HS_SERVER_KEY_EXCHANGE, HS_SERVER_HELLO_DONE)
    if tuple(t for t, _, _ in messages) != expected_order:
        raise HandshakeAbort("unexpected server flight shape")
    for _, _, raw in messages:
        transcript.add(raw)
    server_hello = ServerHello.parse(messages[0][1])
    if server_hello.cipher_suite != int(config.suite):
        raise HandshakeAbort("server negotiated a different suite")
    chain = parse_certificate(messages[1][1])
    key_exchange = ServerKeyExchange.parse(messages[2][1])

    params = HandshakeParams(
        client_random=client_random,
        server_random=server_hello.random,
        suite=config.suite,
        certificate_chain=tuple(chain),
        server_point=key_exchange.public_point,
        signature=key_exchange.signature,
        ahe_modulus=ahe_keys.n,
    )
    # Prover-side validation happens before the verifier is even consulted.
    try:
        verify_pinned_chain(list(chain), config.pinned_root_der, config.hostname)
        verify_key_exchange_signature(chain[0], params.signed_content(), params.signature)
    except ValueError as exc:
        raise _abort(verifier_channel, f"server validation failed: {exc}") from exc
    server_point = ECPoint.from_bytes(key_exchange.public_point)

    verifier_channel.send(build_frame(FRAME_HS_PARAMS, params.to_bytes()))
    verifier_point = ECPoint.from_bytes(_expect_frame(verifier_channel, FRAME_HS_POINT_REVEAL))

    scalar = rand_scalar(rng, ORDER)
    own_point = ec_mul(scalar, GENERATOR)
    combined = ec_add(own_point, verifier_point)
    if combined.infinity:
        raise _abort(verifier_channel, "combined client key degenerate")
    cke = client_key_exchange(combined.to_bytes())
    transcript.add(cke)

    premaster_point = ec_mul(scalar, server_point)
    if premaster_point.infinity:
        raise _abort(verifier_channel, "degenerate premaster share")
    z_share = ectf_initiator(verifier_channel, ahe_keys, premaster_point, rng, ectf_randomizers)

    key_material = dealer.derive_session_shares(
        PROVER, z_share.value, client_random, server_hello.random, config.suite
    )
    record_layer = ProverRecordLayer(
        config.suite,
        key_material,
        verifier_channel,
        rng,
        hmac_dealer=hmac_dealer,
        gcm_dealer=gcm_dealer,
    )
    record_layer.setup()

    client_finished_hash = transcript.digest()
    verifier_channel.send(build_frame(FRAME_HS_CLIENT_FINISHED_HASH, client_finished_hash))
    verify_data = dealer.client_finished(
        PROVER, key_material.master_share, client_finished_hash
    )
    assert verify_data is not None
    finished = finished_message(verify_data)
    transcript.add(finished)
    sealed_finished = record_layer.seal_query(ContentType.HANDSHAKE, finished)

    flight = (
        frame_record(ContentType.HANDSHAKE, cke)
        + frame_record(ContentType.CHANGE_CIPHER_SPEC, CHANGE_CIPHER_SPEC_PAYLOAD)
        + sealed_finished.to_wire()
    )
    server_link.send(flight)

    server_finished_record = _read_server_finished(server_link, reader, config.suite)
    plain = record_layer.open_response(server_finished_record)
    if (
        len(plain.payload) != 4 + prf.VERIFY_DATA_LEN
        or plain.payload[0] != HS_FINISHED
        or int.from_bytes(plain.payload[1:4], "big") != prf.VERIFY_DATA_LEN
    ):
        raise _abort(verifier_channel, "malformed server Finished")
    candidate = plain.payload[4:]

    server_finished_hash = transcript.digest()
    verifier_channel.send(build_frame(FRAME_HS_SERVER_FINISHED_HASH, server_finished_hash))
    accepted = dealer.server_finished_check(
        PROVER, key_material.master_share, server_finished_hash, candidate
    )
    if not accepted:
        raise HandshakeAbort("server Finished verification failed")
    transcript.add(plain.payload)

    return ProverHandshakeResult(
        key_material=key_material,
        record_layer=record_layer,
        params=params,
        transcript=transcript,
        client_finished_hash=client_finished_hash,
        server_finished_hash=server_finished_hash,
        server_link=server_link,
        record_reader=reader,
    )


def _read_handshake_flight(server_link, reader, acc, until: int) -> list[tuple[int, bytes, bytes]]:
    messages: list[tuple[int, bytes, bytes]] = []
    while not any(t == until for t, _, _ in messages):
        for content_type, _version, payload in reader.feed(server_link.recv()):
            if content_type == ContentType.ALERT:
                raise HandshakeAbort(f"server alert: {payload.hex()}")
            if content_type != ContentType.HANDSHAKE:
                raise HandshakeAbort(f"unexpected record type {content_type} in flight")
            messages.extend(acc.feed(payload))
    return messages


def _read_server_finished(server_link, reader, suite: CipherSuite) -> CipherRecord:
    saw_ccs = False
    while True:
        for content_type, _version, payload in reader.feed(server_link.recv()):
            if content_type == ContentType.ALERT:
                raise HandshakeAbort(f"server alert: {payload.hex()}")
            if content_type == ContentType.CHANGE_CIPHER_SPEC:
                if payload != CHANGE_CIPHER_SPEC_PAYLOAD:
                    raise HandshakeAbort("malformed ChangeCipherSpec")
                saw_ccs = True
                continue
            if content_type == ContentType.HANDSHAKE and saw_ccs:
                return CipherRecord.parse(frame_record(content_type, payload), suite)
            raise HandshakeAbort(f"unexpected record type {content_type} before Finished")


# ---------------------------------------------------------------------------
# verifier


def run_verifier_handshake(
    prover_channel,
    dealer: HandshakeDealer,
    config: HandshakeConfig,
    rng: Rng,
    hmac_dealer: HmacTagDealer | None = None,
    gcm_dealer: GcmDealer | None = None,
    iv_store: IvStore | None = None,
    relay=None,
    ectf_randomizers: list[int] | None = None,
) -> VerifierHandshakeResult:
    """The verifier's half. `relay`, when given, is called with each
    FRAME_RELAY_UP body (proxy mode) and must return the server's reply."""
    params_body = _serve_until(prover_channel, FRAME_HS_PARAMS, relay=relay)
    params = HandshakeParams.from_bytes(params_body)
    if params.suite != config.suite:
        raise _abort(prover_channel, "unexpected suite in handshake parameters")
    try:
        verify_pinned_chain(
            list(params.certificate_chain), config.pinned_root_der, config.hostname
        )
        verify_key_exchange_signature(
            params.certificate_chain[0], params.signed_content(), params.signature
        )
    except ValueError as exc:
        raise _abort(prover_channel, f"server validation failed: {exc}") from exc
    server_point = ECPoint.from_bytes(params.server_point)

    scalar = rand_scalar(rng, ORDER)
    own_point = ec_mul(scalar, GENERATOR)
    prover_channel.send(build_frame(FRAME_HS_POINT_REVEAL, own_point.to_bytes()))

    premaster_point = ec_mul(scalar, server_point)
    if premaster_point.infinity:
        raise _abort(prover_channel, "degenerate premaster share")
    z_share = ectf_responder(
        prover_channel, params.ahe_modulus, premaster_point, rng, ectf_randomizers
    )

    key_material = dealer.derive_session_shares(
        VERIFIER, z_share.value, params.client_random, params.server_random, params.suite
    )
    record_layer = VerifierRecordLayer(
        params.suite,
        key_material,
        prover_channel,
        hmac_dealer=hmac_dealer,
        gcm_dealer=gcm_dealer,
        iv_store=iv_store,
    )
    record_layer.setup()

    client_finished_hash = _serve_until(
        prover_channel, FRAME_HS_CLIENT_FINISHED_HASH, record_layer=record_layer, relay=relay
    )
    if len(client_finished_hash) != 32:
        raise _abort(prover_channel, "bad transcript hash length")
    dealer.client_finished(VERIFIER, key_material.master_share, client_finished_hash)

    server_finished_hash = _serve_until(
        prover_channel, FRAME_HS_SERVER_FINISHED_HASH, record_layer=record_layer, relay=relay
    )
    if len(server_finished_hash) != 32:
        raise _abort(prover_channel, "bad transcript hash length")
    accepted = dealer.server_finished_check(
        VERIFIER, key_material.master_share, server_finished_hash
    )
    if not accepted:
        raise HandshakeAbort("server Finished verification failed")

    # The server Finished was the last legitimate server-direction record
    # the verifier helps open online; everything after it is committed
    # first and opened only once shares are released.
    record_layer.lock_server_direction()

    return VerifierHandshakeResult(
        key_material=key_material,
        record_layer=record_layer,
        params=params,
        client_finished_hash=client_finished_hash,
        server_finished_hash=server_finished_hash,
    )


def _serve_until(
    channel,
    expected_type: int,
    record_layer: VerifierRecordLayer | None = None,
    relay=None,
) -> bytes:
    """Serve record assists and relay requests until the expected handshake
    frame arrives; returns its body."""
    while True:
        ftype, body = split_frame(channel.recv())
        if ftype == expected_type:
            return body
        if ftype == FRAME_ABORT:
            raise HandshakeAbort(f"peer aborted: {body.decode(errors='replace')}")
        if ftype in RECORD_FRAME_TYPES and record_layer is not None:
            record_layer.handle_frame(ftype, body)
            continue
        if ftype == FRAME_RELAY_UP and relay is not None:
            relay(body)
            continue
        raise HandshakeAbort(f"unexpected frame {ftype:#04x} while waiting for {expected_type:#04x}")
