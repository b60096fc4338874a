"""Sans-io TLS 1.2 origin server for the testbed.

`MockTlsServer.consume(bytes) -> bytes` feeds wire bytes in and returns
whatever the server has to say back, so the same engine runs in-process
behind the fabric, under an external TLS client via memory BIOs, or on a
real socket. It speaks exactly the two ECDHE_RSA suites the oracle
supports, serves a configurable HTTP GET routing table, and (in test mode)
exposes its session secrets so tests can compare the split-key path against
ground truth.

CBC responses are aligned to a 16-byte payload boundary with an X-Pad HTTP
header, which makes any standards-compliant CBC stack (this one included)
emit the canonical tag ∥ full-padding-block tail that the proof layer's
block arithmetic assumes.
"""

from __future__ import annotations

import struct
import urllib.parse
from dataclasses import dataclass, field
from typing import Callable

from ..handshake3p import prf
from ..handshake3p.keymaterial import KeyBlock
from ..handshake3p.messages import (
    ALERT_BAD_RECORD_MAC,
    ALERT_HANDSHAKE_FAILURE,
    ALERT_LEVEL_FATAL,
    ALERT_UNEXPECTED_MESSAGE,
    CHANGE_CIPHER_SPEC_PAYLOAD,
    CURVE_SECP256R1,
    HS_CLIENT_HELLO,
    HS_CLIENT_KEY_EXCHANGE,
    HS_FINISHED,
    ClientHello,
    HandshakeAccumulator,
    HandshakeDecodeError,
    RecordReader,
    ServerHello,
    ServerKeyExchange,
    SIGALG_RSA_PKCS1_SHA256,
    TranscriptHash,
    alert,
    certificate_message,
    describe_record,
    finished_message,
    frame_record,
    server_hello_done,
)
from ..recordlayer import (
    CipherSuite,
    ContentType,
    MAX_PAYLOAD,
    CipherRecord,
    PlainRecord,
    RecordError,
    open_cbc_hmac,
    open_gcm,
    seal_cbc_hmac,
    seal_gcm,
)
from ..rng import Rng, rand_bytes, rand_scalar, system_rng
from ..shares.ec import GENERATOR, ORDER, ECPoint, ec_mul
from .certs import ServerIdentity

RouteHandler = Callable[[dict[str, str]], bytes]

_CRLF = b"\r\n"


@dataclass
class MockServerConfig:
    identity: ServerIdentity
    suites: tuple[CipherSuite, ...] = (
        CipherSuite.ECDHE_RSA_AES128_GCM_SHA256,
        CipherSuite.ECDHE_RSA_AES128_CBC_SHA256,
    )
    routes: dict[str, RouteHandler] = field(default_factory=dict)
    expose_keys: bool = False
    rng: Rng = field(default_factory=system_rng)


@dataclass
class _SessionKeys:
    suite: CipherSuite
    master: bytes
    block: KeyBlock


class MockTlsServer:
    """One connection's worth of server state."""

    # connection states
    _WAIT_CLIENT_HELLO = "wait_client_hello"
    _WAIT_CLIENT_KEY_EXCHANGE = "wait_client_key_exchange"
    _WAIT_CCS = "wait_change_cipher_spec"
    _WAIT_FINISHED = "wait_finished"
    _APPLICATION = "application"
    _CLOSED = "closed"

    def __init__(self, config: MockServerConfig):
        self.config = config
        self.trace: list[str] = []
        self.closed = False
        self.test_keys: dict | None = None
        self._state = self._WAIT_CLIENT_HELLO
        self._reader = RecordReader()
        self._handshakes = HandshakeAccumulator()
        self._transcript = TranscriptHash()
        self._client_hello: ClientHello | None = None
        self._server_random: bytes | None = None
        self._suite: CipherSuite | None = None
        self._ecdhe_scalar: int | None = None
        self._keys: _SessionKeys | None = None
        self._client_encrypting = False
        self._server_encrypting = False
        self._client_seq = 0
        self._server_seq = 0
        self._http_buffer = bytearray()

    @property
    def state(self) -> str:
        return self._state

    # -- plumbing -------------------------------------------------------------

    def consume(self, data: bytes) -> bytes:
        if self.closed:
            return b""
        out = bytearray()
        try:
            records = self._reader.feed(data)
        except HandshakeDecodeError:
            return bytes(out) + self._fatal(ALERT_UNEXPECTED_MESSAGE)
        for content_type, _version, payload in records:
            if self.closed:
                break
            self.trace.append(
                "recv:" + describe_record(content_type, payload, self._client_encrypting)
            )
            try:
                out += self._handle_record(content_type, payload)
            except (HandshakeDecodeError, RecordError, ValueError):
                out += self._fatal(
                    ALERT_BAD_RECORD_MAC if self._client_encrypting else ALERT_UNEXPECTED_MESSAGE
                )
        return bytes(out)

    def _fatal(self, description: int) -> bytes:
        payload = alert(ALERT_LEVEL_FATAL, description)
        self.closed = True
        self._state = self._CLOSED
        if self._server_encrypting and self._keys is not None:
            wire = self._seal(ContentType.ALERT, payload).to_wire()
        else:
            wire = frame_record(ContentType.ALERT, payload)
        self.trace.append("send:" + describe_record(ContentType.ALERT, payload, False))
        return wire

    # -- record dispatch -------------------------------------------------------

    def _handle_record(self, content_type: int, payload: bytes) -> bytes:
        if content_type == ContentType.ALERT:
            self.closed = True
            self._state = self._CLOSED
            return b""
        if content_type == ContentType.CHANGE_CIPHER_SPEC:
            if self._state != self._WAIT_CCS or payload != CHANGE_CIPHER_SPEC_PAYLOAD:
                raise HandshakeDecodeError("unexpected ChangeCipherSpec")
            self._client_encrypting = True
            self._client_seq = 0
            self._state = self._WAIT_FINISHED
            return b""
        if content_type == ContentType.HANDSHAKE:
            if self._client_encrypting:
                plain = self._open(content_type, payload)
                return self._handle_handshake_payload(plain.payload)
            return self._handle_handshake_payload(payload)
        if content_type == ContentType.APPLICATION_DATA:
            if self._state != self._APPLICATION:
                raise HandshakeDecodeError("application data before handshake completion")
            plain = self._open(content_type, payload)
            return self._handle_http(plain.payload)
        raise HandshakeDecodeError(f"unknown content type {content_type}")

    def _handle_handshake_payload(self, payload: bytes) -> bytes:
        out = bytearray()
        for msg_type, body, raw in self._handshakes.feed(payload):
            out += self._handle_handshake_message(msg_type, body, raw)
        return bytes(out)

    def _handle_handshake_message(self, msg_type: int, body: bytes, raw: bytes) -> bytes:
        if self._state == self._WAIT_CLIENT_HELLO and msg_type == HS_CLIENT_HELLO:
            return self._accept_client_hello(body, raw)
        if self._state == self._WAIT_CLIENT_KEY_EXCHANGE and msg_type == HS_CLIENT_KEY_EXCHANGE:
            return self._accept_client_key_exchange(body, raw)
        if self._state == self._WAIT_FINISHED and msg_type == HS_FINISHED:
            return self._accept_finished(body, raw)
        raise HandshakeDecodeError(
            f"handshake message {msg_type} unexpected in state {self._state}"
        )

    # -- handshake flights -------------------------------------------------------

    def _accept_client_hello(self, body: bytes, raw: bytes) -> bytes:
        hello = ClientHello.parse(body)
        suite = next((s for s in self.config.suites if s in hello.cipher_suites), None)
        if suite is None:
            return self._fatal(ALERT_HANDSHAKE_FAILURE)
        if hello.supported_groups and CURVE_SECP256R1 not in hello.supported_groups:
            return self._fatal(ALERT_HANDSHAKE_FAILURE)
        if (
            hello.signature_algorithms
            and SIGALG_RSA_PKCS1_SHA256 not in hello.signature_algorithms
        ):
            return self._fatal(ALERT_HANDSHAKE_FAILURE)
        self._client_hello = hello
        self._suite = suite
        self._transcript.add(raw)

        rng = self.config.rng
        self._server_random = rand_bytes(rng, 32)
        self._ecdhe_scalar = rand_scalar(rng, ORDER)
        public_point = ec_mul(self._ecdhe_scalar, GENERATOR).to_bytes()

        server_hello = ServerHello(
            random=self._server_random,
            cipher_suite=int(suite),
            echo_renegotiation_info=hello.offers_renegotiation_info,
        ).to_bytes()
        certificate = certificate_message([self.config.identity.certificate_der])
        params_stub = ServerKeyExchange(public_point=public_point, signature=b"")
        signature = self.config.identity.sign_key_exchange(
            params_stub.signed_content(hello.random, self._server_random)
        )
        key_exchange = ServerKeyExchange(
            public_point=public_point, signature=signature
        ).to_bytes()
        done = server_hello_done()

        out = bytearray()
        for message in (server_hello, certificate, key_exchange, done):
            self._transcript.add(message)
            out += frame_record(ContentType.HANDSHAKE, message)
            self.trace.append(
                "send:" + describe_record(ContentType.HANDSHAKE, message, False)
            )
        self._state = self._WAIT_CLIENT_KEY_EXCHANGE
        return bytes(out)

    def _accept_client_key_exchange(self, body: bytes, raw: bytes) -> bytes:
        from ..handshake3p.messages import parse_client_key_exchange

        assert self._client_hello is not None and self._server_random is not None
        assert self._suite is not None and self._ecdhe_scalar is not None
        point = ECPoint.from_bytes(parse_client_key_exchange(body))
        shared = ec_mul(self._ecdhe_scalar, point)
        if shared.infinity:
            raise HandshakeDecodeError("degenerate ECDHE share")
        premaster = shared.x.to_bytes()
        master = prf.master_secret(premaster, self._client_hello.random, self._server_random)
        block = KeyBlock.derive(
            self._suite, master, self._client_hello.random, self._server_random
        )
        self._keys = _SessionKeys(suite=self._suite, master=master, block=block)
        if self.config.expose_keys:
            self.test_keys = {
                "client_random": self._client_hello.random,
                "server_random": self._server_random,
                "premaster": premaster,
                "master": master,
                "key_block": block,
            }
        self._transcript.add(raw)
        self._state = self._WAIT_CCS
        return b""

    def _accept_finished(self, body: bytes, raw: bytes) -> bytes:
        assert self._keys is not None
        if len(body) != prf.VERIFY_DATA_LEN:
            raise HandshakeDecodeError("bad Finished length")
        expected = prf.finished_verify_data(
            self._keys.master, prf.LABEL_CLIENT_FINISHED, self._transcript.digest()
        )
        if body != expected:
            return self._fatal(ALERT_HANDSHAKE_FAILURE)
        self._transcript.add(raw)
        if self.test_keys is not None:
            self.test_keys["client_finished"] = expected

        out = bytearray()
        out += frame_record(ContentType.CHANGE_CIPHER_SPEC, CHANGE_CIPHER_SPEC_PAYLOAD)
        self.trace.append(
            "send:"
            + describe_record(ContentType.CHANGE_CIPHER_SPEC, CHANGE_CIPHER_SPEC_PAYLOAD, False)
        )
        self._server_encrypting = True
        self._server_seq = 0
        verify_data = prf.finished_verify_data(
            self._keys.master, prf.LABEL_SERVER_FINISHED, self._transcript.digest()
        )
        if self.test_keys is not None:
            self.test_keys["server_finished"] = verify_data
        finished = finished_message(verify_data)
        self._transcript.add(finished)
        out += self._seal(ContentType.HANDSHAKE, finished).to_wire()
        self.trace.append("send:" + describe_record(ContentType.HANDSHAKE, finished, True))
        self._state = self._APPLICATION
        return bytes(out)

    # -- record protection -------------------------------------------------------

    def _open(self, content_type: int, payload: bytes) -> PlainRecord:
        assert self._keys is not None
        wire = frame_record(content_type, payload)
        record = CipherRecord.parse(wire, self._keys.suite)
        block = self._keys.block
        if self._keys.suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
            plain = open_cbc_hmac(block.client_key, block.client_mac, record, self._client_seq)
        else:
            plain = open_gcm(block.client_key, block.client_iv, record, self._client_seq)
        self._client_seq += 1
        return plain

    def _seal(self, content_type: int, payload: bytes) -> CipherRecord:
        assert self._keys is not None
        block = self._keys.block
        record = PlainRecord(content_type, b"\x03\x03", self._server_seq, payload)
        if self._keys.suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
            sealed = seal_cbc_hmac(block.server_key, block.server_mac, record, self.config.rng)
        else:
            explicit = struct.pack(">Q", self._server_seq)
            sealed = seal_gcm(block.server_key, block.server_iv, record, explicit)
        self._server_seq += 1
        return sealed

    # -- HTTP -----------------------------------------------------------------

    def _handle_http(self, data: bytes) -> bytes:
        self._http_buffer += data
        if _CRLF * 2 not in self._http_buffer:
            return b""
        raw_request = bytes(self._http_buffer)
        self._http_buffer.clear()
        status, body = self._route(raw_request)
        response = self._build_response(status, body)
        out = bytearray()
        for chunk in _split_chunks(response, MAX_PAYLOAD):
            sealed = self._seal(ContentType.APPLICATION_DATA, chunk)
            out += sealed.to_wire()
            self.trace.append(
                "send:" + describe_record(ContentType.APPLICATION_DATA, chunk, True)
            )
        return bytes(out)

    def _route(self, raw_request: bytes) -> tuple[int, bytes]:
        try:
            request_line = raw_request.split(_CRLF, 1)[0].decode("ascii")
            method, target, _http = request_line.split(" ", 2)
        except (UnicodeDecodeError, ValueError):
            return 400, b'{"error": "malformed request"}'
        if method != "GET":
            return 405, b'{"error": "method not allowed"}'
        path, _, query_string = target.partition("?")
        params = dict(urllib.parse.parse_qsl(query_string, keep_blank_values=True))
        handler = self.config.routes.get(path)
        if handler is None:
            return 404, b'{"error": "no such resource"}'
        return 200, handler(params)

    def _build_response(self, status: int, body: bytes) -> bytes:
        reasons = {200: "OK", 400: "Bad Request", 404: "Not Found", 405: "Method Not Allowed"}
        head = (
            f"HTTP/1.1 {status} {reasons.get(status, 'OK')}\r\n"
            f"Content-Type: application/json\r\n"
            f"Content-Length: {len(body)}\r\n"
            f"Connection: keep-alive\r\n"
        ).encode("ascii")
        if self._keys is not None and self._keys.suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
            # Align the full response to the AES block size: the X-Pad header
            # absorbs the slack, so the TLS layer's minimal padding becomes the
            # canonical full block the opening proofs address.
            base = len(head) + len(b"X-Pad: \r\n") + len(_CRLF) + len(body)
            pad = (16 - base % 16) % 16 or 16
            base += pad
            assert base % 16 == 0
            head += b"X-Pad: " + b"." * pad + _CRLF
        return head + _CRLF + body


def _split_chunks(data: bytes, size: int) -> list[bytes]:
    return [data[i : i + size] for i in range(0, len(data), size)] or [b""]


def serve_engine(engine: MockTlsServer, peer: str = "prover") -> Callable:
    """A fabric party function that pumps the sans-io engine: receive bytes
    from `peer`, feed them through, send whatever comes back. Meant to run as
    a daemon party — it exits when the fabric closes."""
    from ..fabric import ChannelClosed

    def party(endpoint) -> MockTlsServer:
        while True:
            try:
                data = endpoint.recv(peer)
            except ChannelClosed:
                return engine
            reply = engine.consume(data)
            if reply:
                try:
                    endpoint.send(peer, reply)
                except ChannelClosed:
                    return engine
            if engine.closed:
                return engine

    return party


def json_price_route(price: str, symbol_key: str = "symbol") -> RouteHandler:
    """A quote endpoint: echoes the requested symbol with a fixed price."""

    def handler(params: dict[str, str]) -> bytes:
        symbol = params.get(symbol_key, "UNKNOWN")
        return (
            '{"symbol": "%s", "price": "%s", "currency": "USD"}' % (symbol, price)
        ).encode("ascii")

    return handler


def global_quote_route(
    price: str, symbol_key: str = "symbol", trading_day: str = "2026-08-19"
) -> RouteHandler:
    """A quote endpoint in the numbered-field shape common to market-data
    APIs; the echoed symbol makes responses bind their queries."""

    def handler(params: dict[str, str]) -> bytes:
        symbol = params.get(symbol_key, "UNKNOWN")
        return (
            '{"01. symbol": "%s", "05. price": "%s", "07. latest trading day": "%s"}'
            % (symbol, price, trading_day)
        ).encode("ascii")

    return handler
