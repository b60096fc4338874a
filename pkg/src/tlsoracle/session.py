"""End-to-end attested-fetch sessions between a prover and a verifier.

One session drives the whole pipeline over a single fetch: the split
handshake, a templated query sealed under shared keys, response ciphertexts
collected unopened, a commitment to every record, share release, and a
selective-opening claim the verifier checks against a public statement.

The protocol phases run in a fixed order on the prover↔verifier channel:

  params     the prover announces the public query template and statement
  handshake  three-party handshake; the verifier ends up with key shares
  query      the sealed query goes to the server; the response ciphertext
             is collected unopened (one request, one response flush)
  commit     the prover pins every ciphertext record plus its key shares
  release    the verifier retires its assists and releases its shares
  claim      the prover opens the agreed response prefix and proves the
             statement; the verifier answers with a verdict bit
  done       the prover closes the session

Three operating modes share that skeleton:

  mpc          the default split-key mode described above
  proxy        server traffic is relayed through the verifier, which records
               the ciphertexts; the prover pins its key shares up front,
               receives the verifier's shares right after the handshake, and
               runs the TLS session alone. At commit time the verifier checks
               the committed records byte-for-byte against its own recording
               and the pinned shares against the commitment.
  client-keys  the verifier releases its client-direction share right after
               the handshake so queries need no per-record assists. Only
               offered for templates whose response provably echoes the
               query; otherwise nothing ties the response to the claimed Q.

The verifier's output is (verdict, server identity); the prover's output is
the query and response plaintext. Neither the query, the response, nor the
private query parameter appear in the verifier's view before the claim
phase, and the claim reveals only the agreed response prefix.
"""

from __future__ import annotations

import hashlib
import random
import struct
import threading
import urllib.parse
from dataclasses import dataclass, field
from typing import Callable, Iterable

from .commitproofs import (
    BLIND_LEN,
    DIRECTION_CLIENT,
    DIRECTION_SERVER,
    Attestation,
    CommitPhase,
    CommitmentSecrets,
    CommittedRecord,
    OpeningProof,
    OpeningRejected,
    RelationChecker,
    SessionCommitment,
    VerifiedOpening,
    VerifierOpeningKeys,
    ZkClaim,
    commit_session,
    gcm_reveal_blocks,
    redact_affix_cbc,
    reveal_record_cbc,
    verifier_opening_keys,
    verify_opening,
)
from .encoding import ByteReader, encode_bytes, encode_int
from .fabric import ChannelClosed, Fabric, TranscriptEntry, run_parties
from .frames import (
    FRAME_ABORT,
    FRAME_CLAIM,
    FRAME_CLAIM_VERDICT,
    FRAME_CLIENT_KEYS_RELEASE,
    FRAME_CLIENT_KEYS_REQUEST,
    FRAME_COMMIT,
    FRAME_COMMIT_ACK,
    FRAME_GCM_KEYSTREAM,
    FRAME_GCM_TAG_ASSIST,
    FRAME_HMAC_ASSIST,
    FRAME_KEYSHARE_COMMIT,
    FRAME_KEYSHARE_REVEAL,
    FRAME_SESSION_DONE,
    FRAME_SESSION_PARAMS,
    FRAME_SHARE_RELEASE,
    FRAME_SHARE_RELEASE_REQUEST,
    build_frame,
    split_frame,
)
from .handshake3p import HandshakeConfig, HandshakeDealer, xor_bytes
from .handshake3p.protocol import (
    ProverHandshakeResult,
    run_prover_handshake,
    run_verifier_handshake,
)
from .kvparse import (
    JSON_LIKE,
    AmbiguousScopeError,
    ContextSpec,
    KvGrammar,
    ParseError,
    TargetNotFoundError,
    UniquenessError,
    key_occurrences,
    locally_unique_reveal,
    pair_value_text,
    parse_decimal_4,
    parse_kv,
    two_stage_reveal,
)
from .recordlayer import CipherRecord, CipherSuite, ContentType
from .rendezvous import PROVER, VERIFIER
from .twopc_records import (
    GcmDealer,
    HmacTagDealer,
    RecordProtocolError,
    SessionKeyMaterial,
    open_response_single_party,
)

SERVER_PARTY = "server"
RELAY_PARTY = "relay"

MODE_MPC = "mpc"
MODE_PROXY = "proxy"
MODE_CLIENT_KEYS = "client-keys"
MODES = (MODE_MPC, MODE_PROXY, MODE_CLIENT_KEYS)

PHASE_PARAMS = "params"
PHASE_HANDSHAKE = "handshake"
PHASE_QUERY = "query"
PHASE_COMMIT = "commit"
PHASE_RELEASE = "release"
PHASE_CLAIM = "claim"
PHASE_DONE = "done"

STMT_THRESHOLD_GE = "threshold-ge"
STMT_REVEAL_PAIR = "reveal-pair"
STMT_SUBSTRING_EQUALS = "substring-equals"
STATEMENT_KINDS = (STMT_THRESHOLD_GE, STMT_REVEAL_PAIR, STMT_SUBSTRING_EQUALS)

_CBC = CipherSuite.ECDHE_RSA_AES128_CBC_SHA256
_MAC_INPUT_HEADER = 13  # seq(8) + type(1) + version(2) + length(2)
_MAC_BLOCK = 64
_GCM_BLOCK = 16
_CRLFCRLF = b"\r\n\r\n"


def _sha256(data: bytes) -> bytes:
    return hashlib.sha256(data).digest()


class SessionError(Exception):
    """A session violated the phase choreography; tagged with the phase."""

    def __init__(self, phase: str, message: str):
        super().__init__(f"[{phase}] {message}")
        self.phase = phase


class TemplateError(ValueError):
    pass


class StatementError(ValueError):
    pass


# ---------------------------------------------------------------------------
# query templates


@dataclass(frozen=True)
class QueryTemplate:
    """A public query shape with exactly one private slot.

    Both parties agree on the template before the handshake; the prover
    alone fills the slot. `response_binds_query` marks templates whose
    response provably echoes the filled query (the server repeats the slot
    value in its answer), which is what makes the client-keys mode sound.
    """

    name: str
    path: str
    host: str
    slot_param: str
    fixed_params: tuple[tuple[str, str], ...] = ()
    response_binds_query: bool = False

    def __post_init__(self):
        if not self.path.startswith("/"):
            raise TemplateError("template path must be absolute")
        if not self.slot_param:
            raise TemplateError("template needs a slot parameter name")
        for text in (self.name, self.host, self.slot_param):
            if not text or any(ch.isspace() for ch in text):
                raise TemplateError("template fields must be non-empty and unspaced")

    def to_bytes(self) -> bytes:
        out = encode_bytes(self.name.encode())
        out += encode_bytes(self.path.encode())
        out += encode_bytes(self.host.encode())
        out += encode_bytes(self.slot_param.encode())
        out += struct.pack(">I", len(self.fixed_params))
        for key, value in self.fixed_params:
            out += encode_bytes(key.encode()) + encode_bytes(value.encode())
        out += bytes([1 if self.response_binds_query else 0])
        return out

    @classmethod
    def from_bytes(cls, raw: bytes) -> "QueryTemplate":
        reader = ByteReader(raw)
        template = cls.read_from(reader)
        reader.expect_end()
        return template

    @classmethod
    def read_from(cls, reader: ByteReader) -> "QueryTemplate":
        name = reader.read_bytes().decode()
        path = reader.read_bytes().decode()
        host = reader.read_bytes().decode()
        slot = reader.read_bytes().decode()
        fixed = tuple(
            (reader.read_bytes().decode(), reader.read_bytes().decode())
            for _ in range(reader.read_u32())
        )
        binds = reader.read_u8() == 1
        return cls(name, path, host, slot, fixed, binds)


def apply_query_template(template: QueryTemplate, theta: bytes) -> bytes:
    """Deterministically render the GET request with the slot filled.

    The private parameter is percent-encoded, so arbitrary bytes cannot
    escape the value position of the query string.
    """
    if not theta:
        raise TemplateError("the private query parameter must be non-empty")
    parts = [f"{template.slot_param}={urllib.parse.quote_from_bytes(theta, safe='')}"]
    parts += [
        f"{key}={urllib.parse.quote(value, safe='')}" for key, value in template.fixed_params
    ]
    target = f"{template.path}?{'&'.join(parts)}"
    return (
        f"GET {target} HTTP/1.1\r\nHost: {template.host}\r\n\r\n"
    ).encode("ascii")


def slot_value_span(template: QueryTemplate, request: bytes) -> tuple[int, int]:
    """Byte span of the (encoded) slot value within a rendered request."""
    marker = f"?{template.slot_param}=".encode("ascii")
    begin = request.find(marker)
    if begin < 0:
        raise TemplateError("request does not carry the template's slot")
    start = begin + len(marker)
    end = start
    while end < len(request) and request[end] not in b"& ":
        end += 1
    return start, end


def align_http_request(request: bytes) -> bytes:
    """Pad an HTTP request with an X-Pad header so its byte length is a
    multiple of the AES block size (the canonical CBC record shape)."""
    if not request.endswith(_CRLFCRLF):
        raise ValueError("expected a complete HTTP request")
    base = len(request) + len(b"X-Pad: \r\n")
    pad = (16 - base % 16) % 16 or 16
    return request[:-2] + b"X-Pad: " + b"." * pad + b"\r\n\r\n"


# ---------------------------------------------------------------------------
# statements


@dataclass(frozen=True)
class Statement:
    """What the verifier learns about the response, and nothing else.

    All statements are scoped to one key-value pair of the response body,
    addressed by key plus a permissible-context path set:

      threshold-ge      the pair's decimal value is >= a committed bound;
                        the verifier knows only the bound's commitment
      reveal-pair       the pair itself is disclosed
      substring-equals  the pair's value equals a public expected string
    """

    kind: str
    key: bytes
    context_paths: tuple[tuple[str, ...], ...]
    bound_commitment: bytes = b""
    expected: bytes = b""

    def __post_init__(self):
        if self.kind not in STATEMENT_KINDS:
            raise StatementError(f"unknown statement kind {self.kind!r}")
        if not self.key:
            raise StatementError("statements address a pair by its key")
        ContextSpec(self.context_paths, key=self.key)  # validates the paths
        if self.kind == STMT_THRESHOLD_GE and len(self.bound_commitment) != 32:
            raise StatementError("threshold statements carry a 32-byte bound commitment")
        if self.kind != STMT_THRESHOLD_GE and self.bound_commitment:
            raise StatementError("only threshold statements carry a bound commitment")
        if self.kind == STMT_SUBSTRING_EQUALS and not self.expected:
            raise StatementError("equality statements carry the expected value")
        if self.kind != STMT_SUBSTRING_EQUALS and self.expected:
            raise StatementError("only equality statements carry an expected value")

    def context(self) -> ContextSpec:
        return ContextSpec(self.context_paths, key=self.key)

    def to_bytes(self) -> bytes:
        out = encode_bytes(self.kind.encode())
        out += encode_bytes(self.key)
        out += struct.pack(">I", len(self.context_paths))
        for path in self.context_paths:
            out += struct.pack(">I", len(path))
            for label in path:
                out += encode_bytes(label.encode())
        out += encode_bytes(self.bound_commitment)
        out += encode_bytes(self.expected)
        return out

    @classmethod
    def from_bytes(cls, raw: bytes) -> "Statement":
        reader = ByteReader(raw)
        statement = cls.read_from(reader)
        reader.expect_end()
        return statement

    @classmethod
    def read_from(cls, reader: ByteReader) -> "Statement":
        kind = reader.read_bytes().decode()
        key = reader.read_bytes()
        paths = tuple(
            tuple(reader.read_bytes().decode() for _ in range(reader.read_u32()))
            for _ in range(reader.read_u32())
        )
        bound_commitment = reader.read_bytes()
        expected = reader.read_bytes()
        return cls(kind, key, paths, bound_commitment, expected)


@dataclass(frozen=True)
class StatementSecrets:
    """The prover-held opening of a committed threshold bound."""

    bound_scaled: int
    blind: bytes


def committed_bound(bound_scaled: int, rng) -> tuple[bytes, StatementSecrets]:
    """Commit to a fixed-point threshold; the commitment is public, the
    bound and blind stay with the prover (checker relation `threshold-ge`)."""
    blind = bytes(rng.getrandbits(8) for _ in range(BLIND_LEN))
    commitment = _sha256(str(bound_scaled).encode() + blind)
    return commitment, StatementSecrets(bound_scaled, blind)


def threshold_statement(
    key: bytes,
    bound_scaled: int,
    rng,
    context_paths: tuple[tuple[str, ...], ...] = (("object", "pair"),),
) -> tuple[Statement, StatementSecrets]:
    commitment, secrets = committed_bound(bound_scaled, rng)
    statement = Statement(STMT_THRESHOLD_GE, key, context_paths, bound_commitment=commitment)
    return statement, secrets


def claim_statement_id(commitment_digest: bytes, statement: Statement) -> bytes:
    """Binds a statement attestation to one session commitment."""
    return _sha256(b"claim:" + commitment_digest + statement.to_bytes())


@dataclass(frozen=True)
class OpenedClaim:
    """What the claim phase established from the opened response prefix."""

    pair_text: bytes
    value_text: bytes
    value_scaled: int | None = None
    attestation: Attestation | None = None


def eval_statement(
    statement: Statement,
    opened: OpenedClaim,
    checker: RelationChecker | None = None,
    statement_id: bytes | None = None,
) -> bool:
    """Decide the statement from an already-verified opened claim.

    Threshold statements additionally need the checker and the session-bound
    statement id, because their truth rides on a sealed attestation.
    """
    if statement.kind == STMT_REVEAL_PAIR:
        return bool(opened.pair_text)
    if statement.kind == STMT_SUBSTRING_EQUALS:
        return opened.value_text == statement.expected
    if checker is None or statement_id is None:
        raise StatementError("threshold statements are decided against an attestation")
    attestation = opened.attestation
    if attestation is None or opened.value_scaled is None:
        return False
    if not checker.confirm(attestation):
        return False
    if attestation.statement_id != statement_id:
        return False
    if attestation.relation != STMT_THRESHOLD_GE:
        return False
    if attestation.public != {
        "value_scaled": opened.value_scaled,
        "commitment": statement.bound_commitment,
    }:
        return False
    return attestation.verdict


def http_body(response: bytes) -> bytes:
    """Strip the header block of a complete HTTP/1.1 200 response."""
    if not response.startswith(b"HTTP/1.1 200"):
        raise ValueError("response is not an HTTP/1.1 200")
    head, sep, body = response.partition(_CRLFCRLF)
    if not sep:
        raise ValueError("response misses the header terminator")
    return body


def statement_on_response(
    statement: Statement,
    grammar: KvGrammar,
    response: bytes,
    secrets: StatementSecrets | None = None,
) -> bool:
    """Ground-truth statement evaluation on a full plaintext response.

    This is the reference the oracle session must agree with: anyone holding
    the response (and, for thresholds, the bound) can evaluate it directly.
    """
    try:
        body = http_body(response)
        tree = parse_kv(grammar, body)
    except (ValueError, ParseError):
        return False
    spec = statement.context()
    matches = [
        (path, node)
        for path, node in tree.pairs
        if spec.admits(path) and tree.key_of(node) == statement.key
    ]
    if len(matches) != 1:
        return False
    value = pair_value_text(grammar, tree.text(matches[0][1]), key=statement.key)
    if statement.kind == STMT_REVEAL_PAIR:
        return True
    if statement.kind == STMT_SUBSTRING_EQUALS:
        return value == statement.expected
    if secrets is None:
        raise StatementError("evaluating a threshold directly needs the bound")
    if _sha256(str(secrets.bound_scaled).encode() + secrets.blind) != statement.bound_commitment:
        return False
    try:
        return parse_decimal_4(value) >= secrets.bound_scaled
    except ValueError:
        return False


# ---------------------------------------------------------------------------
# wire messages beyond the commitment


@dataclass(frozen=True)
class ClaimBundle:
    """The claim-phase payload: opening proofs plus the statement claim."""

    proofs: tuple[OpeningProof, ...]
    value_scaled: int | None = None
    attestation: Attestation | None = None

    def to_bytes(self) -> bytes:
        out = struct.pack(">I", len(self.proofs))
        for proof in self.proofs:
            out += encode_bytes(proof.to_bytes())
        if self.value_scaled is None:
            out += b"\x00"
        else:
            sign = 1 if self.value_scaled < 0 else 0
            out += bytes([1 + sign]) + encode_int(abs(self.value_scaled))
        if self.attestation is None:
            out += b"\x00"
        else:
            out += b"\x01" + encode_bytes(self.attestation.to_bytes())
        return out

    @classmethod
    def from_bytes(cls, raw: bytes) -> "ClaimBundle":
        reader = ByteReader(raw)
        proofs = tuple(
            OpeningProof.from_bytes(reader.read_bytes()) for _ in range(reader.read_u32())
        )
        value_flag = reader.read_u8()
        value_scaled = None
        if value_flag:
            value_scaled = reader.read_int() * (-1 if value_flag == 2 else 1)
        attestation = None
        if reader.read_u8():
            inner = ByteReader(reader.read_bytes())
            attestation = Attestation.read_from(inner)
            inner.expect_end()
        reader.expect_end()
        return cls(proofs, value_scaled, attestation)


def _encode_session_params(mode: str, template: QueryTemplate, statement: Statement) -> bytes:
    return (
        bytes([MODES.index(mode)])
        + encode_bytes(template.to_bytes())
        + encode_bytes(statement.to_bytes())
    )


def _decode_session_params(raw: bytes) -> tuple[str, QueryTemplate, Statement]:
    reader = ByteReader(raw)
    mode_index = reader.read_u8()
    if mode_index >= len(MODES):
        raise ValueError("unknown session mode byte")
    template = QueryTemplate.from_bytes(reader.read_bytes())
    statement = Statement.from_bytes(reader.read_bytes())
    reader.expect_end()
    return MODES[mode_index], template, statement


def _keyshare_pin(km: SessionKeyMaterial, secrets: CommitmentSecrets) -> tuple[bytes, ...]:
    """The pre-session key-share pin a relayed prover publishes.

    Under CBC the commitment later discloses the MAC shares outright, so the
    pin is one hash over both shares plus a blind revealed at commit time.
    Under GCM the pin IS the pair of share commitments the commitment will
    carry, blinds and all — equality at commit time is the whole check.
    """
    if km.suite == _CBC:
        assert secrets.client_blind is not None
        return (
            _sha256(km.client_mac_share + km.server_mac_share + secrets.client_blind),
        )
    assert secrets.client_blind is not None and secrets.server_blind is not None
    return (
        _sha256(km.client_key_share + secrets.client_blind),
        _sha256(km.server_key_share + secrets.server_blind),
    )


# ---------------------------------------------------------------------------
# the prover's session


@dataclass
class SessionSetup:
    """Everything one party needs wired up before its session function runs."""

    mode: str
    suite: CipherSuite
    template: QueryTemplate
    statement: Statement
    grammar: KvGrammar
    config: HandshakeConfig
    dealer: HandshakeDealer
    hmac_dealer: HmacTagDealer
    gcm_dealer: GcmDealer
    checker: RelationChecker
    ahe_keys: object = None
    theta: bytes = b""
    statement_secrets: StatementSecrets | None = None
    rng: random.Random = field(default_factory=random.Random)
    relay_tap: "RelayTap | None" = None


@dataclass(frozen=True)
class ProverOutcome:
    """The prover keeps the plaintext conversation plus the verdict echo."""

    query: bytes
    response: bytes
    body: bytes
    pair_text: bytes
    value_scaled: int | None
    verdict: bool
    commitment: SessionCommitment


@dataclass(frozen=True)
class VerifierOutcome:
    """The verifier learns the verdict, the server identity, and exactly the
    opened response prefix — nothing else about the conversation."""

    verdict: bool
    server_fingerprint: bytes
    revealed_prefix: bytes
    body_prefix: bytes
    pair_text: bytes
    value_scaled: int | None
    commitment: SessionCommitment
    opening_keys: VerifierOpeningKeys
    notes: tuple[str, ...] = ()


def _expect_frame(channel, wanted: int, phase: str) -> bytes:
    try:
        ftype, body = split_frame(channel.recv())
    except ChannelClosed:
        raise SessionError(phase, "peer closed the channel") from None
    if ftype == FRAME_ABORT:
        raise SessionError(phase, f"peer abort: {body.decode('utf-8', 'replace')}")
    if ftype != wanted:
        raise SessionError(phase, f"expected frame {wanted:#04x}, got {ftype:#04x}")
    return body


def _collect_response_records(result: ProverHandshakeResult, suite: CipherSuite) -> list[CipherRecord]:
    """One recv carries the whole response flush; reject anything that is
    not application data (a server alert means the fetch failed)."""
    try:
        raw = result.server_link.recv()
    except ChannelClosed:
        raise SessionError(PHASE_QUERY, "server closed before answering") from None
    records = []
    for ctype, _version, payload in result.record_reader.feed(raw):
        if ctype == ContentType.ALERT:
            raise SessionError(PHASE_QUERY, f"server alert: {payload.hex()}")
        if ctype != ContentType.APPLICATION_DATA:
            raise SessionError(PHASE_QUERY, f"unexpected record type {ctype} in response")
        records.append(
            CipherRecord.parse(
                bytes([ctype]) + b"\x03\x03" + struct.pack(">H", len(payload)) + payload,
                suite,
            )
        )
    if not records:
        raise SessionError(PHASE_QUERY, "empty response flush")
    return records


def _open_response(
    suite: CipherSuite,
    km: SessionKeyMaterial,
    server_secret: bytes,
    records: list[CipherRecord],
) -> list[bytes]:
    """Open the collected response records with the reassembled server key;
    sequence numbers start at 1 because the server's Finished was 0."""
    payloads = []
    for offset, record in enumerate(records):
        if suite == _CBC:
            plain = open_response_single_party(
                suite, km.server_enc_key, server_secret, record, 1 + offset
            )
        else:
            plain = open_response_single_party(
                suite, server_secret, km.server_salt, record, 1 + offset
            )
        payloads.append(plain.payload)
    return payloads


def _locate_pair(grammar: KvGrammar, spec: ContextSpec, body: bytes) -> tuple[int, int, bytes]:
    """Span and text of the unique statement pair within a body (prefix)."""
    cut, _ = two_stage_reveal(grammar, spec, body)
    begin = key_occurrences(grammar, body, spec.key)[0]
    return begin, begin + len(cut), cut


def _minimal_cbc_cut(need: int, payload_len: int) -> int | None:
    """Smallest suffix cut revealing at least `need` payload bytes, or None
    when only a full-record opening can (the cut would pass the record end)."""
    cut = -(-(need + _MAC_INPUT_HEADER) // _MAC_BLOCK)  # ceil division
    if cut < 1:
        cut = 1
    if cut * _MAC_BLOCK >= _MAC_INPUT_HEADER + payload_len:
        return None
    return cut


def _build_prefix_proofs(
    commitment: SessionCommitment,
    checker: RelationChecker,
    km: SessionKeyMaterial,
    secrets: CommitmentSecrets,
    server_secret: bytes,
    verifier_server_share: bytes | None,
    payloads: list[bytes],
    prefix_len: int,
) -> list[OpeningProof]:
    """Open the response's first `prefix_len` plaintext bytes, whole records
    first and a block-aligned partial opening on the last record needed."""
    proofs = []
    remaining = prefix_len
    for index, payload in enumerate(payloads):
        if remaining <= 0:
            break
        if km.suite == _CBC:
            cut = None if remaining >= len(payload) else _minimal_cbc_cut(remaining, len(payload))
            if cut is None:
                proofs.append(
                    reveal_record_cbc(
                        commitment, checker, index, payload, km.server_enc_key, server_secret
                    )
                )
            else:
                proofs.append(
                    redact_affix_cbc(
                        commitment,
                        checker,
                        index,
                        payload,
                        km.server_enc_key,
                        server_secret,
                        side="suffix",
                        cut_index=cut,
                    )
                )
        else:
            assert verifier_server_share is not None and secrets.server_blind is not None
            total = -(-len(payload) // _GCM_BLOCK)
            blocks = total if remaining >= len(payload) else -(-remaining // _GCM_BLOCK)
            proofs.append(
                gcm_reveal_blocks(
                    commitment,
                    checker,
                    index,
                    list(range(blocks)),
                    km.server_key_share,
                    verifier_server_share,
                    secrets.server_blind,
                    km.server_salt,
                )
            )
        remaining -= len(payload)
    return proofs


def prover_session(endpoint, setup: SessionSetup) -> ProverOutcome:
    """The prover's side of one complete session, start to verdict."""
    verifier = endpoint.channel(VERIFIER)
    server_link = endpoint.channel(RELAY_PARTY if setup.mode == MODE_PROXY else SERVER_PARTY)
    verifier.send(
        build_frame(
            FRAME_SESSION_PARAMS,
            _encode_session_params(setup.mode, setup.template, setup.statement),
        )
    )

    result = run_prover_handshake(
        server_link=server_link,
        verifier_channel=verifier,
        dealer=setup.dealer,
        config=setup.config,
        rng=setup.rng,
        ahe_keys=setup.ahe_keys,
        hmac_dealer=setup.hmac_dealer,
        gcm_dealer=setup.gcm_dealer,
    )
    km = result.key_material

    # -- mode-specific key arrangements before the query goes out
    secrets_hint: CommitmentSecrets | None = None
    verifier_shares: tuple[bytes, bytes] | None = None
    if setup.mode == MODE_PROXY:
        blinds = CommitmentSecrets(
            bytes(setup.rng.getrandbits(8) for _ in range(BLIND_LEN)),
            bytes(setup.rng.getrandbits(8) for _ in range(BLIND_LEN)),
        )
        pin = _keyshare_pin(km, blinds)
        verifier.send(
            build_frame(
                FRAME_KEYSHARE_COMMIT,
                bytes([len(pin)]) + b"".join(encode_bytes(part) for part in pin),
            )
        )
        body = _expect_frame(verifier, FRAME_KEYSHARE_REVEAL, PHASE_QUERY)
        reader = ByteReader(body)
        verifier_shares = (reader.read_bytes(), reader.read_bytes())
        reader.expect_end()
        result.record_layer.enable_local_client_keys(verifier_shares[0])
        secrets_hint = blinds
    elif setup.mode == MODE_CLIENT_KEYS:
        verifier.send(build_frame(FRAME_CLIENT_KEYS_REQUEST))
        body = _expect_frame(verifier, FRAME_CLIENT_KEYS_RELEASE, PHASE_QUERY)
        reader = ByteReader(body)
        result.record_layer.enable_local_client_keys(reader.read_bytes())
        reader.expect_end()

    # -- query
    query = apply_query_template(setup.template, setup.theta)
    if setup.suite == _CBC:
        query = align_http_request(query)
    sealed = result.record_layer.seal_query(ContentType.APPLICATION_DATA, query)
    server_link.send(sealed.to_wire())
    records = _collect_response_records(result, setup.suite)

    # -- commit before anything is opened
    committed = [CommittedRecord(DIRECTION_CLIENT, 1, sealed)] + [
        CommittedRecord(DIRECTION_SERVER, 1 + i, record) for i, record in enumerate(records)
    ]
    commitment, secrets = commit_session(
        committed, km, result.server_finished_hash, setup.rng, secrets=secrets_hint
    )
    commit_body = encode_bytes(commitment.to_bytes())
    if setup.mode == MODE_PROXY and setup.suite == _CBC:
        assert secrets_hint is not None and secrets_hint.client_blind is not None
        commit_body += b"\x01" + encode_bytes(secrets_hint.client_blind)
    else:
        commit_body += b"\x00"
    verifier.send(build_frame(FRAME_COMMIT, commit_body))
    _expect_frame(verifier, FRAME_COMMIT_ACK, PHASE_COMMIT)

    # -- shares: released now (mpc, client-keys) or held since the start (proxy)
    if setup.mode == MODE_PROXY:
        assert verifier_shares is not None
    else:
        verifier.send(build_frame(FRAME_SHARE_RELEASE_REQUEST))
        body = _expect_frame(verifier, FRAME_SHARE_RELEASE, PHASE_RELEASE)
        reader = ByteReader(body)
        verifier_shares = (reader.read_bytes(), reader.read_bytes())
        reader.expect_end()
    if setup.suite == _CBC:
        server_secret = xor_bytes(km.server_mac_share, verifier_shares[1])
    else:
        server_secret = xor_bytes(km.server_key_share, verifier_shares[1])

    # -- open the response and settle deferred handshake MAC checks
    payloads = _open_response(setup.suite, km, server_secret, records)
    if setup.suite == _CBC:
        result.record_layer.verify_pending_macs(server_secret)
    response = b"".join(payloads)
    try:
        body_bytes = http_body(response)
    except ValueError as bad:
        raise SessionError(PHASE_QUERY, f"unusable response: {bad}") from None

    # -- claim: open the prefix through the statement pair and prove it
    spec = setup.statement.context()
    _begin, pair_end, pair_text = _locate_pair(setup.grammar, spec, body_bytes)
    header_len = len(response) - len(body_bytes)
    prefix_len = header_len + pair_end
    proofs = _build_prefix_proofs(
        commitment,
        setup.checker,
        km,
        secrets,
        server_secret,
        None if setup.suite == _CBC else verifier_shares[1],
        payloads,
        prefix_len,
    )
    value_scaled = None
    attestation = None
    if setup.statement.kind == STMT_THRESHOLD_GE:
        if setup.statement_secrets is None:
            raise StatementError("proving a threshold needs the committed bound's opening")
        value_text = pair_value_text(setup.grammar, pair_text, key=setup.statement.key)
        value_scaled = parse_decimal_4(value_text)
        attestation = setup.checker.zk_check(
            ZkClaim(
                claim_statement_id(commitment.digest(), setup.statement),
                STMT_THRESHOLD_GE,
                public={
                    "value_scaled": value_scaled,
                    "commitment": setup.statement.bound_commitment,
                },
                witness={
                    "bound_scaled": setup.statement_secrets.bound_scaled,
                    "blind": setup.statement_secrets.blind,
                },
            )
        )
    bundle = ClaimBundle(tuple(proofs), value_scaled, attestation)
    verifier.send(build_frame(FRAME_CLAIM, bundle.to_bytes()))
    verdict_body = _expect_frame(verifier, FRAME_CLAIM_VERDICT, PHASE_CLAIM)
    verdict = verdict_body == b"\x01"

    verifier.send(build_frame(FRAME_SESSION_DONE))
    return ProverOutcome(
        query=query,
        response=response,
        body=body_bytes,
        pair_text=pair_text,
        value_scaled=value_scaled,
        verdict=verdict,
        commitment=commitment,
    )


# ---------------------------------------------------------------------------
# the verifier's session


@dataclass
class RelayTap:
    """The verifier's recording of relayed traffic, by direction."""

    up: list[bytes] = field(default_factory=list)
    down: list[bytes] = field(default_factory=list)

    def records(self, direction: str, suite: CipherSuite) -> list[CipherRecord]:
        """Application-data records seen on one direction of the relay."""
        from .handshake3p.messages import RecordReader

        chunks = self.up if direction == DIRECTION_CLIENT else self.down
        reader = RecordReader()
        records = []
        for chunk in chunks:
            for ctype, _version, payload in reader.feed(chunk):
                if ctype != ContentType.APPLICATION_DATA:
                    continue
                records.append(
                    CipherRecord.parse(
                        bytes([ctype]) + b"\x03\x03" + struct.pack(">H", len(payload)) + payload,
                        suite,
                    )
                )
        return records


def relay_party(tap: RelayTap) -> Callable:
    """A verifier-operated fabric party that forwards prover↔server bytes
    verbatim while recording both directions. Runs as a daemon."""

    def party(endpoint):
        prover_side = endpoint.channel(PROVER)
        server_side = endpoint.channel(SERVER_PARTY)

        def pump_down():
            while True:
                try:
                    data = server_side.recv()
                except ChannelClosed:
                    return
                tap.down.append(data)
                try:
                    prover_side.send(data)
                except ChannelClosed:
                    return

        thread = threading.Thread(target=pump_down, name="relay-down", daemon=True)
        thread.start()
        while True:
            try:
                data = prover_side.recv()
            except ChannelClosed:
                return tap
            tap.up.append(data)
            try:
                server_side.send(data)
            except ChannelClosed:
                return tap

    return party


def _abort(channel, phase: str, message: str, cause: Exception | None = None):
    try:
        channel.send(build_frame(FRAME_ABORT, f"{phase}: {message}".encode()))
    except ChannelClosed:
        pass
    if cause is not None:
        raise cause
    raise SessionError(phase, message)


def _contiguous_prefix(opening: VerifiedOpening) -> bytes | None:
    """Join an opening's spans if they form a gapless prefix of the payload."""
    out = b""
    for span in sorted(opening.spans, key=lambda s: s.offset):
        if span.offset != len(out):
            return None
        out += span.data
    return out


def assemble_response_prefix(
    commitment: SessionCommitment, openings: list[VerifiedOpening]
) -> bytes | None:
    """Concatenate verified server-direction openings into one plaintext
    prefix of the response: records 0..k in order, every record before the
    last fully opened, spans gapless from each record's first byte."""
    if not openings:
        return None
    openings = sorted(openings, key=lambda o: o.record_index)
    prefix = b""
    for position, opening in enumerate(openings):
        if opening.direction != DIRECTION_SERVER or opening.record_index != position:
            return None
        if opening.content_type != ContentType.APPLICATION_DATA:
            return None
        part = _contiguous_prefix(opening)
        if part is None:
            return None
        if position < len(openings) - 1 and len(part) != opening.payload_len:
            return None
        prefix += part
    return prefix


@dataclass(frozen=True)
class ClaimReview:
    """Outcome of checking one claim bundle against a commitment."""

    verdict: bool
    revealed_prefix: bytes = b""
    body_prefix: bytes = b""
    pair_text: bytes = b""
    value_scaled: int | None = None
    notes: tuple[str, ...] = ()


def verify_claim_bundle(
    commitment: SessionCommitment,
    bundle: ClaimBundle,
    statement: Statement,
    grammar: KvGrammar,
    checker: RelationChecker,
    keys: VerifierOpeningKeys,
) -> ClaimReview:
    """The verifier's whole claim check, reusable against a live session or
    a replayed transcript. Never raises for prover-attributable failures —
    those come back as a False verdict with a reason note."""

    def fail(note: str) -> ClaimReview:
        return ClaimReview(False, notes=(note,))

    openings = []
    for proof in bundle.proofs:
        try:
            openings.append(verify_opening(commitment, proof, checker, keys))
        except OpeningRejected as rejected:
            return fail(f"opening rejected: {rejected}")
    prefix = assemble_response_prefix(commitment, openings)
    if prefix is None:
        return fail("openings do not form a response prefix")
    try:
        body_prefix = http_body(prefix)
    except ValueError as bad:
        return fail(f"opened prefix is not an HTTP 200 head: {bad}")

    spec = statement.context()
    try:
        if not locally_unique_reveal(grammar, spec, body_prefix, body_prefix):
            return fail("statement pair is outside its permissible context")
        _begin, _end, pair_text = _locate_pair(grammar, spec, body_prefix)
    except (TargetNotFoundError, UniquenessError, AmbiguousScopeError, ParseError) as bad:
        return fail(f"statement pair not established by the prefix: {bad}")
    try:
        value_text = pair_value_text(grammar, pair_text, key=statement.key)
    except ParseError as bad:
        return fail(f"pair does not re-parse: {bad}")

    value_scaled = None
    if statement.kind == STMT_THRESHOLD_GE:
        try:
            value_scaled = parse_decimal_4(value_text)
        except ValueError:
            return fail("pair value is not a fixed-point decimal")
        if bundle.value_scaled != value_scaled:
            return fail("claimed value differs from the opened pair")
    opened = OpenedClaim(pair_text, value_text, value_scaled, bundle.attestation)
    verdict = eval_statement(
        statement,
        opened,
        checker=checker,
        statement_id=claim_statement_id(commitment.digest(), statement),
    )
    return ClaimReview(
        verdict,
        revealed_prefix=prefix,
        body_prefix=body_prefix,
        pair_text=pair_text,
        value_scaled=value_scaled,
        notes=() if verdict else ("statement evaluated false",),
    )


def verifier_session(endpoint, setup: SessionSetup) -> VerifierOutcome:
    """The verifier's side: serve the handshake and record-layer assists,
    enforce the commit-before-release order, check the claim, and emit the
    verdict. Any choreography violation aborts the session."""
    channel = endpoint.channel(PROVER)

    body = _expect_frame(channel, FRAME_SESSION_PARAMS, PHASE_PARAMS)
    try:
        mode, template, statement = _decode_session_params(body)
    except (ValueError, TemplateError, StatementError) as bad:
        _abort(channel, PHASE_PARAMS, f"malformed session parameters: {bad}")
    if mode != setup.mode:
        _abort(channel, PHASE_PARAMS, f"peer runs mode {mode!r}, this side {setup.mode!r}")

    result = run_verifier_handshake(
        prover_channel=channel,
        dealer=setup.dealer,
        config=setup.config,
        rng=setup.rng,
        hmac_dealer=setup.hmac_dealer,
        gcm_dealer=setup.gcm_dealer,
    )
    km = result.key_material
    record_layer = result.record_layer
    fingerprint = _sha256(result.params.certificate_chain[0])

    phase = CommitPhase()
    pin: tuple[bytes, ...] | None = None
    commitment: SessionCommitment | None = None
    pin_blind: bytes | None = None
    review: ClaimReview | None = None
    keys: VerifierOpeningKeys | None = None

    while True:
        try:
            ftype, body = split_frame(channel.recv())
        except ChannelClosed:
            raise SessionError(PHASE_DONE, "prover went away mid-session") from None

        if ftype == FRAME_ABORT:
            raise SessionError(PHASE_DONE, f"peer abort: {body.decode('utf-8', 'replace')}")

        if ftype in (FRAME_HMAC_ASSIST, FRAME_GCM_TAG_ASSIST, FRAME_GCM_KEYSTREAM):
            try:
                record_layer.handle_frame(ftype, body)
            except RecordProtocolError as bad:
                _abort(channel, PHASE_QUERY, str(bad), cause=bad)
            continue

        if ftype == FRAME_KEYSHARE_COMMIT:
            if setup.mode != MODE_PROXY:
                _abort(channel, PHASE_QUERY, "key-share pins belong to the relayed mode")
            if pin is not None or commitment is not None:
                _abort(channel, PHASE_QUERY, "key-share pin out of order")
            reader = ByteReader(body)
            pin = tuple(reader.read_bytes() for _ in range(reader.read_u8()))
            reader.expect_end()
            # from here the prover runs TLS alone; assists are over
            record_layer.retire()
            if setup.suite == _CBC:
                shares = (km.client_mac_share, km.server_mac_share)
            else:
                shares = (km.client_key_share, km.server_key_share)
            channel.send(
                build_frame(
                    FRAME_KEYSHARE_REVEAL, encode_bytes(shares[0]) + encode_bytes(shares[1])
                )
            )
            continue

        if ftype == FRAME_CLIENT_KEYS_REQUEST:
            if setup.mode != MODE_CLIENT_KEYS:
                _abort(channel, PHASE_QUERY, "client-key release not offered in this mode")
            if not template.response_binds_query:
                _abort(
                    channel,
                    PHASE_QUERY,
                    "template's response does not bind the query; keeping query assists",
                )
            if commitment is not None:
                _abort(channel, PHASE_QUERY, "client-key request after commitment")
            share = record_layer.release_client_share()
            channel.send(build_frame(FRAME_CLIENT_KEYS_RELEASE, encode_bytes(share)))
            continue

        if ftype == FRAME_COMMIT:
            try:
                reader = ByteReader(body)
                commitment = SessionCommitment.from_bytes(reader.read_bytes())
                if reader.read_u8():
                    pin_blind = reader.read_bytes()
                reader.expect_end()
            except (ValueError, struct.error) as bad:
                _abort(channel, PHASE_COMMIT, f"malformed commitment: {bad}")
            try:
                phase.commit()
            except Exception as bad:
                _abort(channel, PHASE_COMMIT, str(bad), cause=bad)
            if commitment.suite != setup.suite:
                _abort(channel, PHASE_COMMIT, "commitment names a different cipher suite")
            if commitment.handshake_digest != result.server_finished_hash:
                _abort(channel, PHASE_COMMIT, "commitment pins a different handshake")
            if len(commitment.query_records) != 1 or not commitment.response_records:
                _abort(channel, PHASE_COMMIT, "one query record and a non-empty response expected")
            if setup.mode == MODE_PROXY:
                note = _check_relayed_commitment(setup, km, commitment, pin, pin_blind)
                if note is not None:
                    _abort(channel, PHASE_COMMIT, note)
            record_layer.retire()
            channel.send(build_frame(FRAME_COMMIT_ACK))
            continue

        if ftype == FRAME_SHARE_RELEASE_REQUEST:
            try:
                phase.release()
                client_share, server_share = record_layer.release_shares()
            except Exception as bad:
                _abort(channel, PHASE_RELEASE, str(bad), cause=bad)
            channel.send(
                build_frame(
                    FRAME_SHARE_RELEASE,
                    encode_bytes(client_share) + encode_bytes(server_share),
                )
            )
            continue

        if ftype == FRAME_CLAIM:
            if commitment is None:
                _abort(channel, PHASE_CLAIM, "claim before commitment")
            try:
                bundle = ClaimBundle.from_bytes(body)
            except (ValueError, struct.error) as bad:
                _abort(channel, PHASE_CLAIM, f"malformed claim bundle: {bad}")
            keys = verifier_opening_keys(commitment, km)
            review = verify_claim_bundle(
                commitment, bundle, statement, setup.grammar, setup.checker, keys
            )
            channel.send(
                build_frame(FRAME_CLAIM_VERDICT, b"\x01" if review.verdict else b"\x00")
            )
            continue

        if ftype == FRAME_SESSION_DONE:
            if review is None:
                raise SessionError(PHASE_DONE, "session ended before any claim was decided")
            break

        _abort(channel, PHASE_DONE, f"unexpected frame {ftype:#04x}")

    assert commitment is not None and keys is not None
    return VerifierOutcome(
        verdict=review.verdict,
        server_fingerprint=fingerprint,
        revealed_prefix=review.revealed_prefix,
        body_prefix=review.body_prefix,
        pair_text=review.pair_text,
        value_scaled=review.value_scaled,
        commitment=commitment,
        opening_keys=keys,
        notes=review.notes,
    )


def _check_relayed_commitment(
    setup: SessionSetup,
    km: SessionKeyMaterial,
    commitment: SessionCommitment,
    pin: tuple[bytes, ...] | None,
    pin_blind: bytes | None,
) -> str | None:
    """Relayed-mode commit checks: the pinned key shares must match the
    commitment, and the committed ciphertexts must be byte-identical to what
    the relay recorded in both directions."""
    if pin is None:
        return "no key-share pin was published before the session"
    if setup.suite == _CBC:
        if pin_blind is None:
            return "commitment does not open the key-share pin"
        assert commitment.mac_shares is not None
        opened = _sha256(commitment.mac_shares[0] + commitment.mac_shares[1] + pin_blind)
        if (opened,) != pin:
            return "committed MAC shares differ from the pinned shares"
    else:
        if commitment.share_commitments != pin:
            return "committed key-share commitments differ from the pinned ones"
    tap = setup.relay_tap
    if tap is None:
        return "relay recording is unavailable"
    for direction in (DIRECTION_CLIENT, DIRECTION_SERVER):
        recorded = [record.to_wire() for record in tap.records(direction, setup.suite)]
        claimed = [c.record.to_wire() for c in commitment.records(direction)]
        if recorded != claimed:
            return f"committed {direction} records differ from the relayed ciphertexts"
    return None


# ---------------------------------------------------------------------------
# in-process deployment: three parties on one fabric


@dataclass
class OracleSessionConfig:
    """One knob bundle for a full in-process session run."""

    suite: CipherSuite
    identity: object  # testbed ServerIdentity
    ahe_keys: object
    mode: str = MODE_MPC
    template: QueryTemplate | None = None
    statement: Statement | None = None
    statement_secrets: StatementSecrets | None = None
    theta: bytes = b"TSLA"
    grammar: KvGrammar = JSON_LIKE
    routes: dict | None = None
    seed: int = 0xA11CE
    timeout: float = 30.0
    interceptors: tuple = ()
    checker_seed: int | None = None


@dataclass
class OracleSessionResult:
    prover: ProverOutcome
    verifier: VerifierOutcome
    fabric: Fabric
    server: object
    checker: RelationChecker
    relay_tap: RelayTap | None = None
    checker_seed: int | None = None
    hmac_dealer: HmacTagDealer | None = None
    gcm_dealer: GcmDealer | None = None


DEFAULT_TEMPLATE = QueryTemplate(
    name="stock-quote",
    path="/global-quote",
    host="localhost",
    slot_param="symbol",
    response_binds_query=True,
)

DEFAULT_STATEMENT_KEY = b"05. price"


def default_threshold_statement(
    bound_scaled: int, rng
) -> tuple[Statement, StatementSecrets]:
    return threshold_statement(DEFAULT_STATEMENT_KEY, bound_scaled, rng)


def run_oracle_session(cfg: OracleSessionConfig) -> OracleSessionResult:
    """Run prover, verifier, and the in-process server to completion."""
    # the testbed server is only needed here, not by the protocol parties
    from .testbed.mockserver import MockServerConfig, MockTlsServer, serve_engine

    if cfg.mode not in MODES:
        raise ValueError(f"unknown session mode {cfg.mode!r}")
    fabric = Fabric(timeout=cfg.timeout)
    for interceptor in cfg.interceptors:
        fabric.add_interceptor(interceptor)

    dealer_rng = random.Random(cfg.seed)
    dealer = HandshakeDealer(rng=dealer_rng, timeout=cfg.timeout)
    hmac_dealer = HmacTagDealer(timeout=cfg.timeout)
    gcm_dealer = GcmDealer(dealer_rng, timeout=cfg.timeout)
    for closeable in (dealer, hmac_dealer, gcm_dealer):
        fabric.register_closeable(closeable)

    checker = RelationChecker(
        random.Random(cfg.checker_seed) if cfg.checker_seed is not None else None
    )
    template = cfg.template if cfg.template is not None else DEFAULT_TEMPLATE
    statement, secrets = cfg.statement, cfg.statement_secrets
    if statement is None:
        statement, secrets = default_threshold_statement(
            10_000_000, random.Random(cfg.seed + 17)
        )

    config = HandshakeConfig(suite=cfg.suite, pinned_root_der=cfg.identity.certificate_der)
    routes = cfg.routes
    if routes is None:
        from .testbed.mockserver import global_quote_route, json_price_route

        routes = {
            "/quote": json_price_route("1157.7500"),
            "/global-quote": global_quote_route("1157.7500"),
        }
    server = MockTlsServer(
        MockServerConfig(
            identity=cfg.identity,
            routes=dict(routes),
            expose_keys=True,
            rng=random.Random(cfg.seed + 1),
        )
    )

    tap = RelayTap() if cfg.mode == MODE_PROXY else None

    def make_setup(rng_offset: int) -> SessionSetup:
        return SessionSetup(
            mode=cfg.mode,
            suite=cfg.suite,
            template=template,
            statement=statement,
            grammar=cfg.grammar,
            config=config,
            dealer=dealer,
            hmac_dealer=hmac_dealer,
            gcm_dealer=gcm_dealer,
            checker=checker,
            ahe_keys=cfg.ahe_keys,
            theta=cfg.theta,
            statement_secrets=secrets,
            rng=random.Random(cfg.seed + rng_offset),
            relay_tap=tap,
        )

    parties = {
        PROVER: lambda endpoint: prover_session(endpoint, make_setup(2)),
        VERIFIER: lambda endpoint: verifier_session(endpoint, make_setup(3)),
        SERVER_PARTY: serve_engine(
            server, peer=RELAY_PARTY if cfg.mode == MODE_PROXY else PROVER
        ),
    }
    daemons = {SERVER_PARTY}
    if cfg.mode == MODE_PROXY:
        parties[RELAY_PARTY] = relay_party(tap)
        daemons.add(RELAY_PARTY)

    results = run_parties(fabric, parties, daemons=daemons)
    return OracleSessionResult(
        prover=results[PROVER],
        verifier=results[VERIFIER],
        fabric=fabric,
        server=server,
        checker=checker,
        relay_tap=tap,
        checker_seed=cfg.checker_seed,
        hmac_dealer=hmac_dealer,
        gcm_dealer=gcm_dealer,
    )


def run_mpc_session(cfg: OracleSessionConfig) -> OracleSessionResult:
    cfg.mode = MODE_MPC
    return run_oracle_session(cfg)


def run_proxy_session(cfg: OracleSessionConfig) -> OracleSessionResult:
    cfg.mode = MODE_PROXY
    return run_oracle_session(cfg)


def reveal_client_keys_mode(cfg: OracleSessionConfig) -> OracleSessionResult:
    """Session variant with an unassisted query direction; the verifier only
    grants it when the template's response binds the query."""
    cfg.mode = MODE_CLIENT_KEYS
    return run_oracle_session(cfg)


# ---------------------------------------------------------------------------
# transcripts: persistence, leakage scanning, offline replay


_SUITE_NAMES = {
    CipherSuite.ECDHE_RSA_AES128_CBC_SHA256: "cbc",
    CipherSuite.ECDHE_RSA_AES128_GCM_SHA256: "gcm",
}
_SUITE_BY_NAME = {name: suite for suite, name in _SUITE_NAMES.items()}

_OPENING_KEY_FIELDS = (
    "client_mac",
    "server_mac",
    "client_share",
    "server_share",
    "client_salt",
    "server_salt",
)


@dataclass
class SessionTranscriptDoc:
    """A persisted session: fabric entries plus the post-session-public
    verifier context (opening keys, checker seed) that offline replay needs."""

    suite: CipherSuite
    mode: str
    entries: list[TranscriptEntry]
    opening_keys: VerifierOpeningKeys | None = None
    checker_seed: int | None = None

    def to_text(self) -> str:
        lines = ["tlsoracle-transcript v1", f"suite {_SUITE_NAMES[self.suite]}", f"mode {self.mode}"]
        if self.checker_seed is not None:
            lines.append(f"checker-seed {self.checker_seed:x}")
        if self.opening_keys is not None:
            for name in _OPENING_KEY_FIELDS:
                value = getattr(self.opening_keys, name)
                if value is not None:
                    lines.append(f"okey {name} {value.hex()}")
        for entry in self.entries:
            lines.append(
                f"entry {entry.index} {entry.sender} {entry.receiver} {entry.payload.hex()}"
            )
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "SessionTranscriptDoc":
        lines = [line for line in text.splitlines() if line.strip()]
        if not lines or lines[0] != "tlsoracle-transcript v1":
            raise ValueError("not a session transcript")
        suite: CipherSuite | None = None
        mode: str | None = None
        checker_seed: int | None = None
        okey: dict[str, bytes] = {}
        entries: list[TranscriptEntry] = []
        for line in lines[1:]:
            kind, _, rest = line.partition(" ")
            if kind == "suite":
                suite = _SUITE_BY_NAME[rest]
            elif kind == "mode":
                if rest not in MODES:
                    raise ValueError(f"unknown mode {rest!r}")
                mode = rest
            elif kind == "checker-seed":
                checker_seed = int(rest, 16)
            elif kind == "okey":
                name, _, hexvalue = rest.partition(" ")
                if name not in _OPENING_KEY_FIELDS:
                    raise ValueError(f"unknown opening-key field {name!r}")
                okey[name] = bytes.fromhex(hexvalue)
            elif kind == "entry":
                index, sender, receiver, payload = rest.split(" ")
                entries.append(
                    TranscriptEntry(int(index), sender, receiver, bytes.fromhex(payload))
                )
            else:
                raise ValueError(f"unknown transcript line {kind!r}")
        if suite is None or mode is None:
            raise ValueError("transcript misses the suite or mode header")
        keys = VerifierOpeningKeys(suite, **okey) if okey else None
        return cls(suite, mode, entries, keys, checker_seed)


def session_transcript_doc(result: OracleSessionResult) -> SessionTranscriptDoc:
    return SessionTranscriptDoc(
        suite=result.verifier.commitment.suite,
        mode=_mode_of(result),
        entries=list(result.fabric.transcript),
        opening_keys=result.verifier.opening_keys,
        checker_seed=result.checker_seed,
    )


def _mode_of(result: OracleSessionResult) -> str:
    for entry in result.fabric.transcript:
        if entry.sender == PROVER and entry.receiver == VERIFIER and entry.payload[:1] == bytes(
            [FRAME_SESSION_PARAMS]
        ):
            mode, _template, _statement = _decode_session_params(entry.payload[1:])
            return mode
    raise ValueError("transcript carries no session parameters")


def scan_for_plaintext(
    entries: Iterable[TranscriptEntry],
    secrets: Iterable[bytes],
    parties: set[str] | None = None,
    until_claim: bool = True,
) -> list[str]:
    """Which of `secrets` appear verbatim in the listed parties' view?

    The session's privacy invariant: before the claim frame, none of the
    query, the response, or the private parameter occur as plaintext in
    anything the verifier (or its relay) sends or receives.
    """
    hits = []
    for entry in entries:
        if until_claim and (
            entry.sender == PROVER
            and entry.receiver == VERIFIER
            and entry.payload[:1] == bytes([FRAME_CLAIM])
        ):
            break
        if parties is not None and not ({entry.sender, entry.receiver} & parties):
            continue
        for secret in secrets:
            if secret and secret in entry.payload:
                hits.append(
                    f"secret {secret[:16].hex()}… visible in {entry.sender}→{entry.receiver}"
                    f" entry {entry.index}"
                )
    return hits


@dataclass
class ReplayReport:
    """Line-item outcome of replaying a persisted session offline."""

    checks: list[tuple[str, bool, str]] = field(default_factory=list)
    verdict: bool | None = None

    def note(self, name: str, passed: bool, detail: str = "") -> None:
        self.checks.append((name, passed, detail))

    @property
    def all_passed(self) -> bool:
        return all(passed for _name, passed, _detail in self.checks)


def replay_session_transcript(doc: SessionTranscriptDoc) -> ReplayReport:
    """Re-run every verifier decision that is derivable from the transcript:
    parameter decoding, commitment parsing, pin/ciphertext consistency, the
    opening proofs, and the statement verdict. Handshake-interactive checks
    (assist budgets, live MACs) are not replayable and are out of scope."""
    report = ReplayReport()
    to_verifier = [
        e for e in doc.entries if e.sender == PROVER and e.receiver == VERIFIER and e.payload
    ]

    def first_frame(ftype: int) -> bytes | None:
        for entry in to_verifier:
            if entry.payload[0] == ftype:
                return entry.payload[1:]
        return None

    params = first_frame(FRAME_SESSION_PARAMS)
    if params is None:
        report.note("session-params", False, "no parameter frame on the wire")
        return report
    try:
        mode, template, statement = _decode_session_params(params)
        report.note("session-params", True, f"mode={mode} template={template.name}")
    except (ValueError, TemplateError, StatementError) as bad:
        report.note("session-params", False, str(bad))
        return report
    if mode != doc.mode:
        report.note("mode-match", False, f"wire says {mode}, header says {doc.mode}")

    commit_body = first_frame(FRAME_COMMIT)
    if commit_body is None:
        report.note("commitment", False, "no commitment on the wire")
        return report
    try:
        reader = ByteReader(commit_body)
        commitment = SessionCommitment.from_bytes(reader.read_bytes())
        report.note("commitment", True, f"{len(commitment.response_records)} response records")
    except (ValueError, struct.error) as bad:
        report.note("commitment", False, str(bad))
        return report
    if commitment.suite != doc.suite:
        report.note("suite-match", False, "commitment suite differs from the header")
        return report

    order_ok = _commit_precedes_release(to_verifier, doc.entries)
    report.note("commit-before-release", order_ok, "" if order_ok else "shares moved early")

    claim_body = first_frame(FRAME_CLAIM)
    if claim_body is None:
        report.note("claim", False, "no claim on the wire")
        return report
    try:
        bundle = ClaimBundle.from_bytes(claim_body)
        report.note("claim", True, f"{len(bundle.proofs)} opening proofs")
    except (ValueError, struct.error) as bad:
        report.note("claim", False, str(bad))
        return report

    if doc.opening_keys is None:
        report.note("openings", False, "transcript carries no opening keys")
        return report
    if doc.checker_seed is None:
        report.note("attestations", False, "transcript carries no checker seed")
        return report
    checker = RelationChecker(random.Random(doc.checker_seed))
    review = verify_claim_bundle(
        commitment, bundle, statement, JSON_LIKE, checker, doc.opening_keys
    )
    report.note(
        "claim-verification",
        review.verdict or not review.notes,
        "; ".join(review.notes) if review.notes else "openings and statement check out",
    )
    report.verdict = review.verdict

    wire_verdict = _verdict_on_wire(doc.entries)
    if wire_verdict is not None:
        report.note(
            "verdict-match",
            wire_verdict == review.verdict,
            f"wire={wire_verdict} replay={review.verdict}",
        )
    return report


def _commit_precedes_release(to_verifier: list[TranscriptEntry], entries) -> bool:
    """Share releases must follow the commitment. Relayed-mode key-share
    reveals are exempt: their safety rests on the relay recording plus the
    pre-published pin, not on the release ordering."""
    commit_index = None
    for entry in to_verifier:
        if entry.payload[0] == FRAME_COMMIT:
            commit_index = entry.index
            break
    for entry in entries:
        if (
            entry.sender == VERIFIER
            and entry.receiver == PROVER
            and entry.payload[:1] == bytes([FRAME_SHARE_RELEASE])
        ):
            if commit_index is None or entry.index < commit_index:
                return False
    return True


def _verdict_on_wire(entries) -> bool | None:
    for entry in entries:
        if (
            entry.sender == VERIFIER
            and entry.receiver == PROVER
            and entry.payload[:1] == bytes([FRAME_CLAIM_VERDICT])
        ):
            return entry.payload[1:] == b"\x01"
    return None
