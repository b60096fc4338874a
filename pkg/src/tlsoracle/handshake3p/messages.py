"""TLS 1.2 handshake wire format: record framing, message builders, parsers.

Covers exactly the ECDHE_RSA handshake shape this package speaks: ClientHello
through Finished, uncompressed P-256 points, RSA-PKCS1-SHA256 signatures.
Parsers are strict — trailing bytes, bad lengths, or unexpected enum values
raise HandshakeDecodeError rather than being ignored.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from ..recordlayer import TLS12_VERSION, CipherSuite, ContentType

HS_CLIENT_HELLO = 1
HS_SERVER_HELLO = 2
HS_CERTIFICATE = 11
HS_SERVER_KEY_EXCHANGE = 12
HS_SERVER_HELLO_DONE = 14
HS_CLIENT_KEY_EXCHANGE = 16
HS_FINISHED = 20

HANDSHAKE_NAMES = {
    HS_CLIENT_HELLO: "client_hello",
    HS_SERVER_HELLO: "server_hello",
    HS_CERTIFICATE: "certificate",
    HS_SERVER_KEY_EXCHANGE: "server_key_exchange",
    HS_SERVER_HELLO_DONE: "server_hello_done",
    HS_CLIENT_KEY_EXCHANGE: "client_key_exchange",
    HS_FINISHED: "finished",
}

EXT_RENEGOTIATION_INFO = 0xFF01
EXT_SUPPORTED_GROUPS = 0x000A
EXT_EC_POINT_FORMATS = 0x000B
EXT_SIGNATURE_ALGORITHMS = 0x000D

CURVE_SECP256R1 = 0x0017
CURVE_TYPE_NAMED = 3
POINT_FORMAT_UNCOMPRESSED = 0
SIGALG_RSA_PKCS1_SHA256 = 0x0401
SCSV_RENEGOTIATION = 0x00FF

RANDOM_LEN = 32
MAX_HANDSHAKE_BODY = 1 << 20

ALERT_LEVEL_WARNING = 1
ALERT_LEVEL_FATAL = 2
ALERT_CLOSE_NOTIFY = 0
ALERT_UNEXPECTED_MESSAGE = 10
ALERT_BAD_RECORD_MAC = 20
ALERT_HANDSHAKE_FAILURE = 40
ALERT_DECODE_ERROR = 50


class HandshakeDecodeError(Exception):
    pass


# ---------------------------------------------------------------------------
# record framing (plaintext side; encrypted records live in recordlayer)


def frame_record(content_type: int, payload: bytes, version: bytes = TLS12_VERSION) -> bytes:
    if len(payload) > 1 << 14:
        raise HandshakeDecodeError("record payload too long")
    return bytes([content_type]) + version + struct.pack(">H", len(payload)) + payload


class RecordReader:
    """Incremental TLS record splitter for a raw byte stream."""

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, data: bytes) -> list[tuple[int, bytes, bytes]]:
        """Returns complete (content_type, version, payload) tuples."""
        self._buf += data
        out = []
        while len(self._buf) >= 5:
            content_type = self._buf[0]
            version = bytes(self._buf[1:3])
            (length,) = struct.unpack(">H", self._buf[3:5])
            if length > (1 << 14) + 2048:
                raise HandshakeDecodeError("record length field out of range")
            if len(self._buf) < 5 + length:
                break
            payload = bytes(self._buf[5 : 5 + length])
            del self._buf[: 5 + length]
            out.append((content_type, version, payload))
        return out

    @property
    def pending(self) -> int:
        return len(self._buf)


class HandshakeAccumulator:
    """Reassembles handshake messages across handshake-record boundaries."""

    def __init__(self) -> None:
        self._buf = bytearray()

    def feed(self, record_payload: bytes) -> list[tuple[int, bytes, bytes]]:
        """Returns complete (msg_type, body, raw_message) tuples, where
        raw_message is the header+body as it appeared on the wire (the unit
        that enters the transcript hash)."""
        self._buf += record_payload
        out = []
        while len(self._buf) >= 4:
            msg_type = self._buf[0]
            length = int.from_bytes(self._buf[1:4], "big")
            if length > MAX_HANDSHAKE_BODY:
                raise HandshakeDecodeError("handshake message too long")
            if len(self._buf) < 4 + length:
                break
            raw = bytes(self._buf[: 4 + length])
            body = raw[4:]
            del self._buf[: 4 + length]
            out.append((msg_type, body, raw))
        return out

    @property
    def pending(self) -> int:
        return len(self._buf)


def handshake_message(msg_type: int, body: bytes) -> bytes:
    if len(body) > MAX_HANDSHAKE_BODY:
        raise HandshakeDecodeError("handshake body too long")
    return bytes([msg_type]) + len(body).to_bytes(3, "big") + body


# ---------------------------------------------------------------------------
# low-level cursors


class _Cursor:
    def __init__(self, data: bytes, what: str):
        self._data = data
        self._pos = 0
        self._what = what

    def take(self, n: int) -> bytes:
        if self._pos + n > len(self._data):
            raise HandshakeDecodeError(f"{self._what}: truncated at offset {self._pos}")
        chunk = self._data[self._pos : self._pos + n]
        self._pos += n
        return chunk

    def u8(self) -> int:
        return self.take(1)[0]

    def u16(self) -> int:
        return struct.unpack(">H", self.take(2))[0]

    def u24(self) -> int:
        return int.from_bytes(self.take(3), "big")

    def vec8(self) -> bytes:
        return self.take(self.u8())

    def vec16(self) -> bytes:
        return self.take(self.u16())

    def vec24(self) -> bytes:
        return self.take(self.u24())

    def done(self) -> None:
        if self._pos != len(self._data):
            raise HandshakeDecodeError(
                f"{self._what}: {len(self._data) - self._pos} trailing bytes"
            )

    @property
    def remaining(self) -> int:
        return len(self._data) - self._pos


def _vec8(data: bytes) -> bytes:
    return bytes([len(data)]) + data


def _vec16(data: bytes) -> bytes:
    return struct.pack(">H", len(data)) + data


def _vec24(data: bytes) -> bytes:
    return len(data).to_bytes(3, "big") + data


# ---------------------------------------------------------------------------
# hello messages


@dataclass(frozen=True)
class ClientHello:
    random: bytes
    cipher_suites: tuple[int, ...]
    session_id: bytes = b""
    supported_groups: tuple[int, ...] = (CURVE_SECP256R1,)
    signature_algorithms: tuple[int, ...] = (SIGALG_RSA_PKCS1_SHA256,)
    offers_renegotiation_info: bool = True

    def to_bytes(self) -> bytes:
        suites = b"".join(struct.pack(">H", s) for s in self.cipher_suites)
        if self.offers_renegotiation_info:
            suites += struct.pack(">H", SCSV_RENEGOTIATION)
        extensions = b""
        extensions += struct.pack(">H", EXT_SUPPORTED_GROUPS) + _vec16(
            _vec16(b"".join(struct.pack(">H", g) for g in self.supported_groups))
        )
        extensions += struct.pack(">H", EXT_EC_POINT_FORMATS) + _vec16(
            _vec8(bytes([POINT_FORMAT_UNCOMPRESSED]))
        )
        extensions += struct.pack(">H", EXT_SIGNATURE_ALGORITHMS) + _vec16(
            _vec16(b"".join(struct.pack(">H", a) for a in self.signature_algorithms))
        )
        body = (
            TLS12_VERSION
            + self.random
            + _vec8(self.session_id)
            + _vec16(suites)
            + _vec8(b"\x00")  # null compression only
            + _vec16(extensions)
        )
        return handshake_message(HS_CLIENT_HELLO, body)

    @classmethod
    def parse(cls, body: bytes) -> "ClientHello":
        cur = _Cursor(body, "ClientHello")
        version = cur.take(2)
        if version != TLS12_VERSION:
            raise HandshakeDecodeError(f"ClientHello: unsupported version {version.hex()}")
        random = cur.take(RANDOM_LEN)
        session_id = cur.vec8()
        suites_raw = cur.vec16()
        if len(suites_raw) % 2:
            raise HandshakeDecodeError("ClientHello: odd cipher suite vector")
        suites = tuple(
            struct.unpack(">H", suites_raw[i : i + 2])[0] for i in range(0, len(suites_raw), 2)
        )
        compressions = cur.vec8()
        if 0 not in compressions:
            raise HandshakeDecodeError("ClientHello: null compression not offered")
        groups: tuple[int, ...] = ()
        sigalgs: tuple[int, ...] = ()
        renegotiation = SCSV_RENEGOTIATION in suites
        if cur.remaining:
            ext_block = _Cursor(cur.vec16(), "ClientHello extensions")
            while ext_block.remaining:
                ext_type = ext_block.u16()
                ext_data = ext_block.vec16()
                if ext_type == EXT_SUPPORTED_GROUPS:
                    inner = _Cursor(ext_data, "supported_groups")
                    raw = inner.vec16()
                    inner.done()
                    groups = tuple(
                        struct.unpack(">H", raw[i : i + 2])[0] for i in range(0, len(raw), 2)
                    )
                elif ext_type == EXT_SIGNATURE_ALGORITHMS:
                    inner = _Cursor(ext_data, "signature_algorithms")
                    raw = inner.vec16()
                    inner.done()
                    sigalgs = tuple(
                        struct.unpack(">H", raw[i : i + 2])[0] for i in range(0, len(raw), 2)
                    )
                elif ext_type == EXT_RENEGOTIATION_INFO:
                    renegotiation = True
            ext_block.done()
        cur.done()
        visible_suites = tuple(s for s in suites if s != SCSV_RENEGOTIATION)
        return cls(
            random=random,
            cipher_suites=visible_suites,
            session_id=session_id,
            supported_groups=groups,
            signature_algorithms=sigalgs,
            offers_renegotiation_info=renegotiation,
        )


@dataclass(frozen=True)
class ServerHello:
    random: bytes
    cipher_suite: int
    session_id: bytes = b""
    echo_renegotiation_info: bool = True

    def to_bytes(self) -> bytes:
        extensions = b""
        if self.echo_renegotiation_info:
            extensions += struct.pack(">H", EXT_RENEGOTIATION_INFO) + _vec16(_vec8(b""))
        extensions += struct.pack(">H", EXT_EC_POINT_FORMATS) + _vec16(
            _vec8(bytes([POINT_FORMAT_UNCOMPRESSED]))
        )
        body = (
            TLS12_VERSION
            + self.random
            + _vec8(self.session_id)
            + struct.pack(">H", self.cipher_suite)
            + b"\x00"
            + _vec16(extensions)
        )
        return handshake_message(HS_SERVER_HELLO, body)

    @classmethod
    def parse(cls, body: bytes) -> "ServerHello":
        cur = _Cursor(body, "ServerHello")
        version = cur.take(2)
        if version != TLS12_VERSION:
            raise HandshakeDecodeError(f"ServerHello: unsupported version {version.hex()}")
        random = cur.take(RANDOM_LEN)
        session_id = cur.vec8()
        suite = cur.u16()
        compression = cur.u8()
        if compression != 0:
            raise HandshakeDecodeError("ServerHello: compression negotiated")
        renegotiation = False
        if cur.remaining:
            ext_block = _Cursor(cur.vec16(), "ServerHello extensions")
            while ext_block.remaining:
                ext_type = ext_block.u16()
                ext_block.vec16()
                if ext_type == EXT_RENEGOTIATION_INFO:
                    renegotiation = True
            ext_block.done()
        cur.done()
        return cls(
            random=random,
            cipher_suite=suite,
            session_id=session_id,
            echo_renegotiation_info=renegotiation,
        )


# ---------------------------------------------------------------------------
# certificate / key exchange


def certificate_message(chain: list[bytes]) -> bytes:
    return handshake_message(HS_CERTIFICATE, _vec24(b"".join(_vec24(der) for der in chain)))


def parse_certificate(body: bytes) -> list[bytes]:
    cur = _Cursor(body, "Certificate")
    chain_raw = _Cursor(cur.vec24(), "Certificate list")
    cur.done()
    chain = []
    while chain_raw.remaining:
        chain.append(chain_raw.vec24())
    if not chain:
        raise HandshakeDecodeError("Certificate: empty chain")
    return chain


@dataclass(frozen=True)
class ServerKeyExchange:
    public_point: bytes  # uncompressed SEC1, 65 bytes
    signature: bytes
    named_curve: int = CURVE_SECP256R1
    signature_algorithm: int = SIGALG_RSA_PKCS1_SHA256

    @property
    def params(self) -> bytes:
        """ServerECDHParams: the bytes the signature covers (after randoms)."""
        return (
            bytes([CURVE_TYPE_NAMED])
            + struct.pack(">H", self.named_curve)
            + _vec8(self.public_point)
        )

    def signed_content(self, client_random: bytes, server_random: bytes) -> bytes:
        return client_random + server_random + self.params

    def to_bytes(self) -> bytes:
        body = (
            self.params
            + struct.pack(">H", self.signature_algorithm)
            + _vec16(self.signature)
        )
        return handshake_message(HS_SERVER_KEY_EXCHANGE, body)

    @classmethod
    def parse(cls, body: bytes) -> "ServerKeyExchange":
        cur = _Cursor(body, "ServerKeyExchange")
        curve_type = cur.u8()
        if curve_type != CURVE_TYPE_NAMED:
            raise HandshakeDecodeError(f"ServerKeyExchange: curve type {curve_type}")
        named_curve = cur.u16()
        if named_curve != CURVE_SECP256R1:
            raise HandshakeDecodeError(f"ServerKeyExchange: curve {named_curve:#06x}")
        point = cur.vec8()
        sig_alg = cur.u16()
        if sig_alg != SIGALG_RSA_PKCS1_SHA256:
            raise HandshakeDecodeError(f"ServerKeyExchange: signature algorithm {sig_alg:#06x}")
        signature = cur.vec16()
        cur.done()
        return cls(public_point=point, signature=signature, named_curve=named_curve)


def server_hello_done() -> bytes:
    return handshake_message(HS_SERVER_HELLO_DONE, b"")


def client_key_exchange(public_point: bytes) -> bytes:
    return handshake_message(HS_CLIENT_KEY_EXCHANGE, _vec8(public_point))


def parse_client_key_exchange(body: bytes) -> bytes:
    cur = _Cursor(body, "ClientKeyExchange")
    point = cur.vec8()
    cur.done()
    return point


def finished_message(verify_data: bytes) -> bytes:
    if len(verify_data) != 12:
        raise HandshakeDecodeError("Finished: verify_data must be 12 bytes")
    return handshake_message(HS_FINISHED, verify_data)


def alert(level: int, description: int) -> bytes:
    return bytes([level, description])


def parse_alert(payload: bytes) -> tuple[int, int]:
    if len(payload) != 2:
        raise HandshakeDecodeError("alert payload must be 2 bytes")
    return payload[0], payload[1]


CHANGE_CIPHER_SPEC_PAYLOAD = b"\x01"


@dataclass
class TranscriptHash:
    """Running hash over the raw handshake messages, in wire order.

    CCS and alert records never enter; Finished messages do (a server
    Finished hash covers the client Finished that preceded it).
    """

    messages: list[bytes] = field(default_factory=list)

    def add(self, raw_message: bytes) -> None:
        self.messages.append(raw_message)

    def digest(self) -> bytes:
        import hashlib

        h = hashlib.sha256()
        for m in self.messages:
            h.update(m)
        return h.digest()


def describe_record(content_type: int, payload: bytes, encrypted: bool) -> str:
    """Human-readable record label for transparency traces.

    Encrypted records are labelled by content type only; plaintext handshake
    records list their message types.
    """
    if content_type == ContentType.CHANGE_CIPHER_SPEC:
        return "change_cipher_spec"
    if content_type == ContentType.ALERT:
        return "alert" if encrypted else f"alert:{payload.hex()}"
    if content_type == ContentType.APPLICATION_DATA:
        return "application_data"
    if content_type == ContentType.HANDSHAKE:
        if encrypted:
            return "handshake(encrypted)"
        names = []
        acc = HandshakeAccumulator()
        try:
            for msg_type, _body, _raw in acc.feed(payload):
                names.append(HANDSHAKE_NAMES.get(msg_type, f"type{msg_type}"))
        except HandshakeDecodeError:
            names.append("malformed")
        return "handshake:" + "+".join(names)
    return f"type{content_type}"


__all__ = [
    "ALERT_BAD_RECORD_MAC",
    "ALERT_CLOSE_NOTIFY",
    "ALERT_DECODE_ERROR",
    "ALERT_HANDSHAKE_FAILURE",
    "ALERT_LEVEL_FATAL",
    "ALERT_LEVEL_WARNING",
    "ALERT_UNEXPECTED_MESSAGE",
    "CHANGE_CIPHER_SPEC_PAYLOAD",
    "CURVE_SECP256R1",
    "ClientHello",
    "HandshakeAccumulator",
    "HandshakeDecodeError",
    "RecordReader",
    "ServerHello",
    "ServerKeyExchange",
    "TranscriptHash",
    "alert",
    "certificate_message",
    "client_key_exchange",
    "describe_record",
    "finished_message",
    "frame_record",
    "handshake_message",
    "parse_alert",
    "parse_certificate",
    "parse_client_key_exchange",
    "server_hello_done",
]
