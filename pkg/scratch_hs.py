"""Scratch: run the full 3P handshake against the mock server, both suites."""

import sys

sys.path.insert(0, "src")

from tlsoracle.fabric import Fabric, run_parties
from tlsoracle.frames import FRAME_SESSION_DONE, build_frame
from tlsoracle.handshake3p import HandshakeConfig, HandshakeDealer
from tlsoracle.handshake3p.keymaterial import xor_bytes
from tlsoracle.handshake3p.protocol import run_prover_handshake, run_verifier_handshake
from tlsoracle.recordlayer import CipherRecord, CipherSuite, ContentType
from tlsoracle.rendezvous import PROVER, VERIFIER
from tlsoracle.rng import system_rng
from tlsoracle.shares import paillier
from tlsoracle.testbed.certs import generate_server_identity
from tlsoracle.testbed.mockserver import (
    MockServerConfig,
    MockTlsServer,
    json_price_route,
    serve_engine,
)
from tlsoracle.twopc_records import GcmDealer, HmacTagDealer

IDENTITY = generate_server_identity()
RNG = system_rng()
KEYS = paillier.AhePaillierKeys.generate(RNG)


def run_one(suite):
    fabric = Fabric(timeout=30)
    dealer = HandshakeDealer(rng=RNG)
    hmac_dealer = HmacTagDealer()
    gcm_dealer = GcmDealer(RNG)
    fabric.register_closeable(dealer)
    fabric.register_closeable(hmac_dealer)
    fabric.register_closeable(gcm_dealer)

    config = HandshakeConfig(suite=suite, pinned_root_der=IDENTITY.certificate_der)
    server = MockTlsServer(
        MockServerConfig(
            identity=IDENTITY,
            routes={"/quote": json_price_route("1157.7500")},
            expose_keys=True,
        )
    )
    results = {}

    def prover(endpoint):
        res = run_prover_handshake(
            server_link=endpoint.channel("server"),
            verifier_channel=endpoint.channel(VERIFIER),
            dealer=dealer,
            config=config,
            rng=RNG,
            ahe_keys=KEYS,
            hmac_dealer=hmac_dealer,
            gcm_dealer=gcm_dealer,
        )
        results[PROVER] = res
        # application round trip
        request = b"GET /quote?symbol=TSLA HTTP/1.1\r\nHost: localhost\r\n\r\n"
        if suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
            base = len(request) + len(b"X-Pad: \r\n")
            pad = (16 - base % 16) % 16 or 16
            request = request[:-2] + b"X-Pad: " + b"." * pad + b"\r\n\r\n"
            assert len(request) % 16 == 0
        sealed = res.record_layer.seal_query(ContentType.APPLICATION_DATA, request)
        res.server_link.send(sealed.to_wire())
        body = b""
        while b"1157.7500" not in body:
            for ctype, _v, payload in res.record_reader.feed(res.server_link.recv()):
                assert ctype == ContentType.APPLICATION_DATA, payload
                rec = CipherRecord.parse(
                    bytes([ctype]) + b"\x03\x03" + len(payload).to_bytes(2, "big") + payload,
                    suite,
                )
                body += res.record_layer.open_response(rec).payload
        results["body"] = body
        endpoint.channel(VERIFIER).send(build_frame(FRAME_SESSION_DONE))

    def verifier(endpoint):
        res = run_verifier_handshake(
            prover_channel=endpoint.channel(PROVER),
            dealer=dealer,
            config=config,
            rng=RNG,
            hmac_dealer=hmac_dealer,
            gcm_dealer=gcm_dealer,
        )
        results[VERIFIER] = res
        # keep serving record assists until the prover is done
        chan = endpoint.channel(PROVER)
        from tlsoracle.fabric import ChannelClosed
        from tlsoracle.frames import split_frame

        while True:
            try:
                ftype, fbody = split_frame(chan.recv())
            except ChannelClosed:
                return
            if ftype == FRAME_SESSION_DONE:
                return
            if not res.record_layer.handle_frame(ftype, fbody):
                raise AssertionError(f"unexpected frame {ftype:#x}")

    server_party = serve_engine(server, peer=PROVER)
    run_parties(
        fabric,
        {PROVER: prover, VERIFIER: verifier, "server": server_party},
        daemons={"server"},
    )

    pr = results[PROVER]
    vr = results[VERIFIER]
    tk = server.test_keys
    assert xor_bytes(pr.key_material.master_share, vr.key_material.master_share) == tk["master"]
    kb = tk["key_block"]
    if suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
        assert pr.key_material.client_enc_key == kb.client_key
        assert pr.key_material.server_enc_key == kb.server_key
        assert xor_bytes(pr.key_material.client_mac_share, vr.key_material.client_mac_share) == kb.client_mac
        assert xor_bytes(pr.key_material.server_mac_share, vr.key_material.server_mac_share) == kb.server_mac
    else:
        assert xor_bytes(pr.key_material.client_key_share, vr.key_material.client_key_share) == kb.client_key
        assert xor_bytes(pr.key_material.server_key_share, vr.key_material.server_key_share) == kb.server_key
        assert pr.key_material.client_salt == kb.client_iv == vr.key_material.client_salt
        assert pr.key_material.server_salt == kb.server_iv == vr.key_material.server_salt
    assert server.state == "application"
    print(f"{suite.name}: OK  trace={len(server.trace)} records")


for suite in (CipherSuite.ECDHE_RSA_AES128_GCM_SHA256, CipherSuite.ECDHE_RSA_AES128_CBC_SHA256):
    run_one(suite)
print("all good")
