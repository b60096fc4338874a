"""Session-data commitments and selective-opening proofs over TLS records.

After the split-key session ends, the prover owns ciphertexts it could not
have forged while the verifier still withheld its key shares. This module
implements the machinery that turns those ciphertexts into checkable
statements:

* ``SessionCommitment`` freezes the query/response ciphertexts, binds them
  to the handshake, and — before any share is released — pins the prover's
  MAC-key shares (CBC) or a hash commitment to its AEAD key share (GCM,
  whose tags are not committing to the key, so the share must be pinned
  first).
* ``RelationChecker`` plays the trusted proof functionality: the prover
  submits a claim with its witness, the checker evaluates the relation and
  hands back a sealed attestation carrying only the public inputs and the
  verdict. Witnesses never travel further; counters on the checker account
  for every AES block and SHA-256 compression it evaluates, so tests can
  pin the advertised proof budgets exactly. A real zero-knowledge backend
  could replace the checker without touching any caller.
* Opening builders produce ``OpeningProof`` objects for five modes —
  reveal a whole CBC record, redact one block, redact a prefix or suffix,
  or reveal chosen GCM blocks — and ``verify_opening`` replays the
  verifier's side of each construction.

Block coordinates
-----------------
CBC redaction modes address SHA-256 blocks of the *MAC input stream*: the
64-byte inner-pad block (index 0) followed by the 13-byte TLS pseudo-header
and the payload, 64 bytes per block (indices 1..m). A cut at block ``i``
means blocks 1..i are revealed and blocks i+1..m (plus the length padding)
stay hidden; the checker charges exactly one compression per hidden block,
so a 16304-byte payload (m = 256) redacted from cut ``i`` costs 256 − i
compressions. The outer-pad transform of HMAC is metered separately under
``hmac_outer`` and AES work under ``aes_block``, keeping each advertised
budget visible in its own counter.
"""

from __future__ import annotations

import hmac as std_hmac
import struct
from dataclasses import dataclass, replace

from .encoding import ByteReader, encode_bytes, encode_int
from .gf128 import block_to_int, ghash
from .handshake3p.keymaterial import SessionKeyMaterial, xor_bytes
from .recordlayer import (
    FULL_PAD_BLOCK,
    GCM_TAG_LEN,
    MAC_LEN,
    CipherRecord,
    CipherSuite,
    GcmAdditionalData,
    aes_block,
    cbc_encrypt,
    gcm_counter_blocks,
    gcm_j0,
    mac_input,
)
from .rng import Rng, rand_bytes, system_rng
from .sha256core import (
    BLOCK_SIZE,
    SHA256_IV,
    compress,
    compress_chain,
    digest_from_midstate,
    sha256,
)
from .twopc_records import DIRECTION_CLIENT, DIRECTION_SERVER

__all__ = [
    "Attestation",
    "CommitOrderError",
    "CommitPhase",
    "CommitmentSecrets",
    "CommittedRecord",
    "OpeningProof",
    "OpeningRejected",
    "ProofError",
    "RelationChecker",
    "RevealedSpan",
    "SessionCommitment",
    "UnknownRelationError",
    "VerifiedOpening",
    "VerifierOpeningKeys",
    "ZkClaim",
    "commit_session",
    "gcm_reveal_blocks",
    "hmac_inner_start",
    "hmac_outer_digest",
    "redact_affix_cbc",
    "redact_block_cbc",
    "reveal_record_cbc",
    "verifier_opening_keys",
    "verify_opening",
]


class ProofError(Exception):
    """Malformed proof structure or a failed construction step."""


class OpeningRejected(ProofError):
    """The verifier's replay of an opening did not check out."""


class CommitOrderError(Exception):
    """A share moved (or was asked to move) out of phase."""


class UnknownRelationError(Exception):
    """A claim named a relation the checker does not evaluate."""


DIRECTIONS = (DIRECTION_CLIENT, DIRECTION_SERVER)

MODE_REVEAL_RECORD = "reveal-record"
MODE_REDACT_BLOCK = "redact-block"
MODE_REDACT_PREFIX = "redact-prefix"
MODE_REDACT_SUFFIX = "redact-suffix"
MODE_GCM_REVEAL = "gcm-reveal-blocks"

MODES = (
    MODE_REVEAL_RECORD,
    MODE_REDACT_BLOCK,
    MODE_REDACT_PREFIX,
    MODE_REDACT_SUFFIX,
    MODE_GCM_REVEAL,
)

SIDE_PREFIX = "prefix"
SIDE_SUFFIX = "suffix"

BLIND_LEN = 32
SESSION_ID_LEN = 16
_HEADER_LEN = 13  # seq(8) + type(1) + version(2) + length(2)
_IPAD = bytes([0x36]) * BLOCK_SIZE
_OPAD = bytes([0x5C]) * BLOCK_SIZE
_ZERO_BLOCK = bytes(16)


# -- HMAC plumbing at compression granularity ----------------------------------


def _key_block(k_mac: bytes) -> bytes:
    if len(k_mac) != MAC_LEN:
        raise ValueError("MAC key must be 32 bytes")
    return k_mac + b"\x00" * (BLOCK_SIZE - MAC_LEN)


def hmac_inner_start(k_mac: bytes) -> bytes:
    """Midstate s0 after absorbing the inner-pad key block."""
    return compress(SHA256_IV, xor_bytes(_key_block(k_mac), _IPAD))


def hmac_outer_digest(k_mac: bytes, inner_hash: bytes) -> bytes:
    """Finish HMAC from a completed inner hash."""
    start = compress(SHA256_IV, xor_bytes(_key_block(k_mac), _OPAD))
    return digest_from_midstate(start, inner_hash, BLOCK_SIZE)


# -- claims, attestations, and the relation checker -----------------------------


@dataclass(frozen=True)
class ZkClaim:
    """One relation instance: public inputs for everyone, witness for the
    checker only."""

    statement_id: bytes
    relation: str
    public: dict
    witness: dict | None = None

    def strip_witness(self) -> "ZkClaim":
        return replace(self, witness=None)


@dataclass(frozen=True)
class Attestation:
    """The checker's sealed answer: public inputs, verdict, nothing else."""

    statement_id: bytes
    relation: str
    public: dict
    verdict: bool
    seal: bytes

    def to_bytes(self) -> bytes:
        return (
            encode_bytes(self.statement_id)
            + encode_bytes(self.relation.encode())
            + encode_bytes(encode_public(self.public))
            + bytes([1 if self.verdict else 0])
            + encode_bytes(self.seal)
        )

    @classmethod
    def read_from(cls, reader: ByteReader) -> "Attestation":
        statement_id = reader.read_bytes()
        relation = reader.read_bytes().decode()
        public = decode_public(reader.read_bytes())
        verdict = reader.read_u8() == 1
        seal = reader.read_bytes()
        return cls(statement_id, relation, public, verdict, seal)


def _encode_value(value) -> bytes:
    if isinstance(value, bytes):
        return b"B" + encode_bytes(value)
    if isinstance(value, bool):
        raise ValueError("booleans are not public-input values")
    if isinstance(value, int):
        return b"I" + encode_int(value)
    if isinstance(value, tuple):
        return (
            b"T"
            + struct.pack(">I", len(value))
            + b"".join(_encode_value(item) for item in value)
        )
    raise ValueError(f"unencodable public value of type {type(value).__name__}")


def _decode_value(reader: ByteReader):
    tag = reader.take(1)
    if tag == b"B":
        return reader.read_bytes()
    if tag == b"I":
        return reader.read_int()
    if tag == b"T":
        count = reader.read_u32()
        return tuple(_decode_value(reader) for _ in range(count))
    raise ValueError(f"unknown public value tag {tag!r}")


def encode_public(public: dict) -> bytes:
    """Canonical (sorted-key) encoding of a claim's public inputs."""
    out = struct.pack(">I", len(public))
    for key in sorted(public):
        out += encode_bytes(key.encode()) + _encode_value(public[key])
    return out


def decode_public(raw: bytes) -> dict:
    reader = ByteReader(raw)
    count = reader.read_u32()
    public = {}
    for _ in range(count):
        key = reader.read_bytes().decode()
        public[key] = _decode_value(reader)
    reader.expect_end()
    return public


def _want(mapping: dict, name: str, kind, length: int | None = None):
    """Fetch a claim field, rejecting missing keys and wrong shapes."""
    if name not in mapping:
        raise ValueError(f"claim is missing field {name!r}")
    value = mapping[name]
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ValueError(f"claim field {name!r} must be an integer")
        return value
    if not isinstance(value, kind):
        raise ValueError(f"claim field {name!r} must be {kind.__name__}")
    if length is not None and len(value) != length:
        raise ValueError(f"claim field {name!r} must be {length} bytes")
    return value


def _want_direction(public: dict) -> str:
    direction = _want(public, "direction", bytes).decode()
    if direction not in DIRECTIONS:
        raise ValueError("claim names an unknown record direction")
    return direction


class RelationChecker:
    """Trusted relation evaluator standing in for a proof system.

    The prover hands it claims with witnesses; everyone else only ever sees
    the sealed attestations it emits. Each AES block, SHA-256 compression,
    HMAC outer transform, and commitment opening it evaluates bumps a
    counter, so proof-size budgets are observable facts rather than
    documentation.
    """

    def __init__(self, rng: Rng | None = None):
        self._seal_key = rand_bytes(rng if rng is not None else system_rng(), 32)
        self.counters = {
            "aes_block": 0,
            "sha256_compression": 0,
            "hmac_outer": 0,
            "commitment_opening": 0,
        }
        self._relations = {
            "aes-block": self._check_aes_block,
            "cbc-tag-encrypt": self._check_cbc_tag,
            "sha256-compress": self._check_compress,
            "cbc-prefix-chain": self._check_prefix_chain,
            "cbc-outer-tag": self._check_outer_tag,
            "cbc-suffix-tag": self._check_suffix_tag,
            "gcm-blocks": self._check_gcm_blocks,
            "commitment-opening": self._check_commitment_opening,
            "threshold-ge": self._check_threshold,
        }

    # -- lifecycle -------------------------------------------------------------

    def reset_counters(self) -> None:
        for key in self.counters:
            self.counters[key] = 0

    def zk_check(self, claim: ZkClaim) -> Attestation:
        """Evaluate one claim and return the sealed (public, verdict) pair."""
        if claim.relation not in self._relations:
            raise UnknownRelationError(f"no relation registered as {claim.relation!r}")
        if claim.witness is None:
            raise ValueError("claims are checked with their witness attached")
        verdict = self._relations[claim.relation](claim.public, claim.witness)
        return Attestation(
            claim.statement_id,
            claim.relation,
            claim.public,
            verdict,
            self._seal(claim.statement_id, claim.relation, claim.public, verdict),
        )

    def confirm(self, attestation: Attestation) -> bool:
        """Did this attestation really come out of this checker?"""
        expect = self._seal(
            attestation.statement_id,
            attestation.relation,
            attestation.public,
            attestation.verdict,
        )
        return std_hmac.compare_digest(expect, attestation.seal)

    def _seal(self, statement_id: bytes, relation: str, public: dict, verdict: bool) -> bytes:
        body = (
            encode_bytes(statement_id)
            + encode_bytes(relation.encode())
            + encode_public(public)
            + bytes([1 if verdict else 0])
        )
        return std_hmac.new(self._seal_key, body, "sha256").digest()

    # -- relations ---------------------------------------------------------------

    def _check_aes_block(self, public: dict, witness: dict) -> bool:
        block_in = _want(public, "input", bytes, 16)
        block_out = _want(public, "output", bytes, 16)
        key = _want(witness, "key", bytes, 16)
        self.counters["aes_block"] += 1
        return aes_block(key, block_in) == block_out

    def _check_cbc_tag(self, public: dict, witness: dict) -> bool:
        """The record's last 3 ciphertext blocks encrypt tag ∥ pad block."""
        _want(public, "record_index", int)
        _want_direction(public)
        prev = _want(public, "prev_block", bytes, 16)
        blocks = _want(public, "cipher_blocks", bytes, 48)
        sigma = _want(public, "sigma", bytes, MAC_LEN)
        k_enc = _want(witness, "k_enc", bytes, 16)
        self.counters["aes_block"] += 3
        return cbc_encrypt(k_enc, prev, sigma + FULL_PAD_BLOCK) == blocks

    def _check_compress(self, public: dict, witness: dict) -> bool:
        _want(public, "record_index", int)
        _want_direction(public)
        _want(public, "block_index", int)
        s_prev = _want(public, "s_prev", bytes, 32)
        s_next = _want(public, "s_next", bytes, 32)
        block = _want(witness, "block", bytes, BLOCK_SIZE)
        self.counters["sha256_compression"] += 1
        return compress(s_prev, block) == s_next

    def _check_prefix_chain(self, public: dict, witness: dict) -> bool:
        """A hidden run of blocks chains s_start to s_end."""
        _want(public, "record_index", int)
        _want_direction(public)
        s_start = _want(public, "s_start", bytes, 32)
        s_end = _want(public, "s_end", bytes, 32)
        _want(public, "first_block_index", int)
        count = _want(public, "block_count", int)
        blocks = _want(witness, "blocks", bytes)
        if count <= 0 or len(blocks) != count * BLOCK_SIZE:
            raise ValueError("hidden block run does not match its declared count")
        self.counters["sha256_compression"] += count
        return compress_chain(s_start, blocks) == s_end

    def _check_outer_tag(self, public: dict, witness: dict) -> bool:
        """HMAC outer transform of a public inner hash, then the CBC tail."""
        _want(public, "record_index", int)
        _want_direction(public)
        inner_hash = _want(public, "inner_hash", bytes, 32)
        k_mac = _want(public, "k_mac", bytes, MAC_LEN)
        prev = _want(public, "prev_block", bytes, 16)
        blocks = _want(public, "cipher_blocks", bytes, 48)
        k_enc = _want(witness, "k_enc", bytes, 16)
        self.counters["hmac_outer"] += 1
        sigma = hmac_outer_digest(k_mac, inner_hash)
        self.counters["aes_block"] += 3
        return cbc_encrypt(k_enc, prev, sigma + FULL_PAD_BLOCK) == blocks

    def _check_suffix_tag(self, public: dict, witness: dict) -> bool:
        """A hidden suffix finishes the inner hash, whose HMAC the record's
        CBC tail encrypts — one compression per hidden block."""
        _want(public, "record_index", int)
        _want_direction(public)
        cut = _want(public, "cut_index", int)
        s_cut = _want(public, "s_cut", bytes, 32)
        total_len = _want(public, "inner_total_len", int)
        k_mac = _want(public, "k_mac", bytes, MAC_LEN)
        prev = _want(public, "prev_block", bytes, 16)
        blocks = _want(public, "cipher_blocks", bytes, 48)
        suffix = _want(witness, "suffix", bytes)
        k_enc = _want(witness, "k_enc", bytes, 16)
        processed = BLOCK_SIZE * (cut + 1)  # inner-pad block + cut message blocks
        if cut < 1 or processed + len(suffix) != total_len or not suffix:
            raise ValueError("suffix does not sit at the declared cut")
        padded_tail_blocks = (len(suffix) + _padding_len(total_len)) // BLOCK_SIZE
        self.counters["sha256_compression"] += padded_tail_blocks
        inner_hash = digest_from_midstate(s_cut, suffix, processed)
        self.counters["hmac_outer"] += 1
        sigma = hmac_outer_digest(k_mac, inner_hash)
        self.counters["aes_block"] += 3
        return cbc_encrypt(k_enc, prev, sigma + FULL_PAD_BLOCK) == blocks

    def _check_gcm_blocks(self, public: dict, witness: dict) -> bool:
        """The prover's committed key share, joined with the verifier's,
        evaluates AES on every listed counter block."""
        _want(public, "record_index", int)
        _want_direction(public)
        verifier_share = _want(public, "verifier_share", bytes, 16)
        commitment = _want(public, "commitment", bytes, 32)
        pairs = _want(public, "pairs", tuple)
        key_share = _want(witness, "key_share", bytes, 16)
        blind = _want(witness, "blind", bytes, BLIND_LEN)
        if not pairs:
            raise ValueError("claim lists no counter blocks")
        self.counters["commitment_opening"] += 1
        if sha256(key_share + blind) != commitment:
            return False
        key = xor_bytes(key_share, verifier_share)
        good = True
        for pair in pairs:
            if not isinstance(pair, tuple) or len(pair) != 2:
                raise ValueError("counter pairs must be (input, output) tuples")
            block_in, block_out = pair
            if not isinstance(block_in, bytes) or len(block_in) != 16:
                raise ValueError("counter input must be a 16-byte block")
            if not isinstance(block_out, bytes) or len(block_out) != 16:
                raise ValueError("counter output must be a 16-byte block")
            self.counters["aes_block"] += 1
            good = good and aes_block(key, block_in) == block_out
        return good

    def _check_commitment_opening(self, public: dict, witness: dict) -> bool:
        commitment = _want(public, "commitment", bytes, 32)
        value = _want(witness, "value", bytes)
        blind = _want(witness, "blind", bytes, BLIND_LEN)
        self.counters["commitment_opening"] += 1
        return sha256(value + blind) == commitment

    def _check_threshold(self, public: dict, witness: dict) -> bool:
        """A committed bound is met by the public value: the statement
        'value ≥ bound' where only a commitment to the bound is public."""
        value = _want(public, "value_scaled", int)
        commitment = _want(public, "commitment", bytes, 32)
        bound = _want(witness, "bound_scaled", int)
        blind = _want(witness, "blind", bytes, BLIND_LEN)
        self.counters["commitment_opening"] += 1
        if sha256(str(bound).encode() + blind) != commitment:
            return False
        return value >= bound


def _padding_len(total_len: int) -> int:
    return 1 + ((55 - total_len) % 64) + 8


# -- the session commitment ------------------------------------------------------


@dataclass(frozen=True)
class CommittedRecord:
    """One ciphertext record pinned by the commitment."""

    direction: str
    seq: int
    record: CipherRecord

    def __post_init__(self):
        if self.direction not in DIRECTIONS:
            raise ValueError(f"bad record direction {self.direction!r}")
        if self.seq < 0:
            raise ValueError("sequence numbers are non-negative")


@dataclass(frozen=True)
class CommitmentSecrets:
    """Prover-side blinds behind a GCM commitment (None for CBC)."""

    client_blind: bytes | None = None
    server_blind: bytes | None = None


@dataclass(frozen=True)
class SessionCommitment:
    """Everything the prover pins down before the verifier releases shares.

    CBC sessions disclose the prover's MAC-key shares outright (the MAC key
    alone decrypts nothing, and handing it over lets the verifier finish
    HMAC checks itself). GCM tags do not commit to the key, so the prover
    instead pins a hash commitment to each of its AES key shares; the
    opening proofs later bind those shares to every revealed block.
    """

    session_id: bytes
    suite: CipherSuite
    query_records: tuple[CommittedRecord, ...]
    response_records: tuple[CommittedRecord, ...]
    handshake_digest: bytes
    mac_shares: tuple[bytes, bytes] | None = None
    share_commitments: tuple[bytes, bytes] | None = None

    def __post_init__(self):
        if len(self.session_id) != SESSION_ID_LEN:
            raise ValueError("session id must be 16 bytes")
        if len(self.handshake_digest) != 32:
            raise ValueError("handshake digest must be 32 bytes")
        if self.suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
            if self.mac_shares is None or self.share_commitments is not None:
                raise ValueError("CBC commitments carry exactly the MAC shares")
            if any(len(share) != MAC_LEN for share in self.mac_shares):
                raise ValueError("MAC shares must be 32 bytes")
        else:
            if self.share_commitments is None or self.mac_shares is not None:
                raise ValueError("GCM commitments carry exactly the share commitments")
            if any(len(com) != 32 for com in self.share_commitments):
                raise ValueError("share commitments must be 32 bytes")

    def records(self, direction: str) -> tuple[CommittedRecord, ...]:
        if direction == DIRECTION_CLIENT:
            return self.query_records
        if direction == DIRECTION_SERVER:
            return self.response_records
        raise ValueError(f"bad record direction {direction!r}")

    def digest(self) -> bytes:
        return sha256(self.to_bytes())

    def to_bytes(self) -> bytes:
        out = encode_bytes(self.session_id)
        out += struct.pack(">H", int(self.suite))
        out += encode_bytes(self.handshake_digest)
        for records in (self.query_records, self.response_records):
            out += struct.pack(">I", len(records))
            for committed in records:
                out += bytes([0 if committed.direction == DIRECTION_CLIENT else 1])
                out += struct.pack(">Q", committed.seq)
                out += encode_bytes(committed.record.to_wire())
        if self.mac_shares is not None:
            out += b"\x01" + encode_bytes(self.mac_shares[0]) + encode_bytes(self.mac_shares[1])
        else:
            out += b"\x02" + encode_bytes(self.share_commitments[0]) + encode_bytes(
                self.share_commitments[1]
            )
        return out

    @classmethod
    def from_bytes(cls, raw: bytes) -> "SessionCommitment":
        reader = ByteReader(raw)
        session_id = reader.read_bytes()
        (suite_value,) = struct.unpack(">H", reader.take(2))
        suite = CipherSuite(suite_value)
        handshake_digest = reader.read_bytes()
        lists: list[tuple[CommittedRecord, ...]] = []
        for _ in range(2):
            count = reader.read_u32()
            records = []
            for _ in range(count):
                direction = DIRECTION_CLIENT if reader.read_u8() == 0 else DIRECTION_SERVER
                (seq,) = struct.unpack(">Q", reader.take(8))
                record = CipherRecord.parse(reader.read_bytes(), suite)
                records.append(CommittedRecord(direction, seq, record))
            lists.append(tuple(records))
        marker = reader.read_u8()
        mac_shares = share_commitments = None
        if marker == 1:
            mac_shares = (reader.read_bytes(), reader.read_bytes())
        elif marker == 2:
            share_commitments = (reader.read_bytes(), reader.read_bytes())
        else:
            raise ValueError("unknown commitment key-material marker")
        reader.expect_end()
        return cls(
            session_id,
            suite,
            lists[0],
            lists[1],
            handshake_digest,
            mac_shares,
            share_commitments,
        )


def commit_session(
    records: list[CommittedRecord],
    key_material: SessionKeyMaterial,
    handshake_digest: bytes,
    rng: Rng,
    secrets: CommitmentSecrets | None = None,
) -> tuple[SessionCommitment, CommitmentSecrets]:
    """Freeze the session ciphertexts and the prover's key-share pins.

    Emits the commitment to send and the blinds (GCM) the prover must keep
    to open its share commitments inside later proofs. Passing `secrets`
    reuses existing blinds, so a share pin published before the session
    (the relayed-session defense) and the committed shares provably match.
    """
    query = tuple(rec for rec in records if rec.direction == DIRECTION_CLIENT)
    response = tuple(rec for rec in records if rec.direction == DIRECTION_SERVER)
    session_id = rand_bytes(rng, SESSION_ID_LEN)
    if key_material.suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
        commitment = SessionCommitment(
            session_id,
            key_material.suite,
            query,
            response,
            handshake_digest,
            mac_shares=(key_material.client_mac_share, key_material.server_mac_share),
        )
        return commitment, secrets if secrets is not None else CommitmentSecrets()
    if secrets is not None:
        if secrets.client_blind is None or secrets.server_blind is None:
            raise ValueError("GCM commitments need both blinds")
        client_blind, server_blind = secrets.client_blind, secrets.server_blind
    else:
        client_blind = rand_bytes(rng, BLIND_LEN)
        server_blind = rand_bytes(rng, BLIND_LEN)
    commitment = SessionCommitment(
        session_id,
        key_material.suite,
        query,
        response,
        handshake_digest,
        share_commitments=(
            sha256(key_material.client_key_share + client_blind),
            sha256(key_material.server_key_share + server_blind),
        ),
    )
    return commitment, CommitmentSecrets(client_blind, server_blind)


class CommitPhase:
    """Tiny ordering guard both session loops drive.

    The entire security argument of the post-handshake phase is a single
    ordering fact — commitments exist before shares move — so the guard is
    deliberately unbypassable: every transition asserts the phase it leaves.
    """

    COLLECTING = "collecting"
    COMMITTED = "committed"
    RELEASED = "released"

    def __init__(self):
        self.phase = self.COLLECTING

    def commit(self) -> None:
        if self.phase != self.COLLECTING:
            raise CommitOrderError(f"commit out of phase ({self.phase})")
        self.phase = self.COMMITTED

    def release(self) -> None:
        if self.phase != self.COMMITTED:
            raise CommitOrderError("share release before commitment")
        self.phase = self.RELEASED

    def require(self, phase: str) -> None:
        if self.phase != phase:
            raise CommitOrderError(f"expected phase {phase}, in {self.phase}")


# -- opening proofs ----------------------------------------------------------------


@dataclass(frozen=True)
class RevealedSpan:
    """A run of plaintext bytes at a byte offset within the record payload."""

    offset: int
    data: bytes


@dataclass(frozen=True)
class OpeningProof:
    """One selective opening of one committed record."""

    mode: str
    record_index: int
    direction: str
    revealed: tuple[RevealedSpan, ...] = ()
    midstates: tuple[bytes, ...] = ()
    counter_blocks: tuple[bytes, ...] = ()
    block_indices: tuple[int, ...] = ()
    sigma: bytes = b""
    attestations: tuple[Attestation, ...] = ()

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown opening mode {self.mode!r}")
        if self.direction not in DIRECTIONS:
            raise ValueError(f"bad record direction {self.direction!r}")

    def to_bytes(self) -> bytes:
        out = bytes([MODES.index(self.mode)])
        out += struct.pack(">I", self.record_index)
        out += bytes([0 if self.direction == DIRECTION_CLIENT else 1])
        out += struct.pack(">I", len(self.revealed))
        for span in self.revealed:
            out += struct.pack(">I", span.offset) + encode_bytes(span.data)
        out += struct.pack(">I", len(self.midstates))
        for state in self.midstates:
            out += encode_bytes(state)
        out += struct.pack(">I", len(self.counter_blocks))
        for block in self.counter_blocks:
            out += encode_bytes(block)
        out += struct.pack(">I", len(self.block_indices))
        for index in self.block_indices:
            out += struct.pack(">I", index)
        out += encode_bytes(self.sigma)
        out += struct.pack(">I", len(self.attestations))
        for attestation in self.attestations:
            out += encode_bytes(attestation.to_bytes())
        return out

    @classmethod
    def from_bytes(cls, raw: bytes) -> "OpeningProof":
        reader = ByteReader(raw)
        mode_index = reader.read_u8()
        if mode_index >= len(MODES):
            raise ValueError("unknown opening mode byte")
        record_index = reader.read_u32()
        direction = DIRECTION_CLIENT if reader.read_u8() == 0 else DIRECTION_SERVER
        revealed = tuple(
            RevealedSpan(reader.read_u32(), reader.read_bytes())
            for _ in range(reader.read_u32())
        )
        midstates = tuple(reader.read_bytes() for _ in range(reader.read_u32()))
        counter_blocks = tuple(reader.read_bytes() for _ in range(reader.read_u32()))
        block_indices = tuple(reader.read_u32() for _ in range(reader.read_u32()))
        sigma = reader.read_bytes()
        attestations = tuple(
            Attestation.read_from(ByteReader(reader.read_bytes()))
            for _ in range(reader.read_u32())
        )
        reader.expect_end()
        return cls(
            MODES[mode_index],
            record_index,
            direction,
            revealed,
            midstates,
            counter_blocks,
            block_indices,
            sigma,
            attestations,
        )


@dataclass(frozen=True)
class VerifiedOpening:
    """What an accepted proof establishes: these payload bytes, at these
    offsets, in this committed record."""

    record_index: int
    direction: str
    seq: int
    content_type: int
    payload_len: int
    spans: tuple[RevealedSpan, ...]

    def text(self) -> bytes:
        return b"".join(span.data for span in self.spans)


def _statement_id(commitment_digest: bytes, mode: str, direction: str, record_index: int) -> bytes:
    return sha256(
        b"opening:"
        + commitment_digest
        + mode.encode()
        + b"|"
        + direction.encode()
        + struct.pack(">I", record_index)
    )


def _lookup(commitment: SessionCommitment, direction: str, record_index: int) -> CommittedRecord:
    records = commitment.records(direction)
    if not 0 <= record_index < len(records):
        raise ProofError(f"record index {record_index} out of range")
    return records[record_index]


def _cbc_tail(record: CipherRecord) -> tuple[bytes, bytes]:
    """(previous ciphertext block, final 3 ciphertext blocks) of a CBC body."""
    body = record.body
    if len(body) < 48 or len(body) % 16:
        raise ProofError("CBC body is not in canonical shape")
    prev = record.explicit if len(body) == 48 else body[-64:-48]
    return prev, body[-48:]


def _cbc_payload_len(record: CipherRecord) -> int:
    return len(record.body) - 48


def _require_cbc(commitment: SessionCommitment) -> None:
    if commitment.suite != CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
        raise ProofError("this opening mode requires the CBC suite")


def _require_gcm(commitment: SessionCommitment) -> None:
    if commitment.suite != CipherSuite.ECDHE_RSA_AES128_GCM_SHA256:
        raise ProofError("this opening mode requires the GCM suite")


# -- builders (prover side) ---------------------------------------------------------


def reveal_record_cbc(
    commitment: SessionCommitment,
    checker: RelationChecker,
    record_index: int,
    payload: bytes,
    k_enc: bytes,
    k_mac: bytes,
    direction: str = DIRECTION_SERVER,
) -> OpeningProof:
    """Open one whole CBC record: reveal the plaintext and its tag, and
    claim only that the trailing 3 ciphertext blocks encrypt the tag."""
    _require_cbc(commitment)
    committed = _lookup(commitment, direction, record_index)
    if len(payload) != _cbc_payload_len(committed.record):
        raise ProofError("payload length does not match the committed record")
    sigma = std_hmac.new(
        k_mac,
        mac_input(committed.seq, committed.record.content_type, committed.record.version, payload),
        "sha256",
    ).digest()
    prev, blocks = _cbc_tail(committed.record)
    claim = ZkClaim(
        _statement_id(commitment.digest(), MODE_REVEAL_RECORD, direction, record_index),
        "cbc-tag-encrypt",
        {
            "record_index": record_index,
            "direction": direction.encode(),
            "prev_block": prev,
            "cipher_blocks": blocks,
            "sigma": sigma,
        },
        witness={"k_enc": k_enc},
    )
    return OpeningProof(
        MODE_REVEAL_RECORD,
        record_index,
        direction,
        revealed=(RevealedSpan(0, payload),),
        sigma=sigma,
        attestations=(checker.zk_check(claim),),
    )


def _stream_prefix_state(k_mac: bytes, stream_prefix: bytes) -> bytes:
    """Chain the inner hash over the inner-pad block plus a stream prefix."""
    return compress_chain(hmac_inner_start(k_mac), stream_prefix)


def redact_block_cbc(
    commitment: SessionCommitment,
    checker: RelationChecker,
    record_index: int,
    payload: bytes,
    k_enc: bytes,
    k_mac: bytes,
    block_index: int,
    direction: str = DIRECTION_SERVER,
) -> OpeningProof:
    """Hide one 64-byte MAC-input block behind its midstates.

    The midstates s_{i-1}, s_i around the hidden block become public, so
    this mode is only private when the hidden block carries enough entropy
    that it cannot be brute-forced from the midstate pair — a 16-byte API
    key qualifies, a 'yes'/'no' field does not. Callers assert that; the
    builder cannot test it.
    """
    _require_cbc(commitment)
    committed = _lookup(commitment, direction, record_index)
    if len(payload) != _cbc_payload_len(committed.record):
        raise ProofError("payload length does not match the committed record")
    mi = mac_input(committed.seq, committed.record.content_type, committed.record.version, payload)
    if not 2 <= block_index <= len(mi) // BLOCK_SIZE:
        raise ProofError("hidden block must be a whole payload block past the header")
    lo = (block_index - 1) * BLOCK_SIZE  # MAC-input coordinates
    hi = block_index * BLOCK_SIZE
    s_prev = _stream_prefix_state(k_mac, mi[:lo])
    s_next = compress(s_prev, mi[lo:hi])
    inner_hash = digest_from_midstate(s_next, mi[hi:], BLOCK_SIZE * (block_index + 1))
    sigma = hmac_outer_digest(k_mac, inner_hash)
    prev, blocks = _cbc_tail(committed.record)
    digest = commitment.digest()
    compress_claim = ZkClaim(
        _statement_id(digest, MODE_REDACT_BLOCK, direction, record_index),
        "sha256-compress",
        {
            "record_index": record_index,
            "direction": direction.encode(),
            "block_index": block_index,
            "s_prev": s_prev,
            "s_next": s_next,
        },
        witness={"block": mi[lo:hi]},
    )
    tag_claim = ZkClaim(
        _statement_id(digest, MODE_REDACT_BLOCK, direction, record_index),
        "cbc-tag-encrypt",
        {
            "record_index": record_index,
            "direction": direction.encode(),
            "prev_block": prev,
            "cipher_blocks": blocks,
            "sigma": sigma,
        },
        witness={"k_enc": k_enc},
    )
    return OpeningProof(
        MODE_REDACT_BLOCK,
        record_index,
        direction,
        revealed=(
            RevealedSpan(0, payload[: lo - _HEADER_LEN]),
            RevealedSpan(hi - _HEADER_LEN, payload[hi - _HEADER_LEN :]),
        ),
        midstates=(s_prev, s_next),
        block_indices=(block_index,),
        sigma=sigma,
        attestations=(checker.zk_check(compress_claim), checker.zk_check(tag_claim)),
    )


def redact_affix_cbc(
    commitment: SessionCommitment,
    checker: RelationChecker,
    record_index: int,
    payload: bytes,
    k_enc: bytes,
    k_mac: bytes,
    side: str,
    cut_index: int,
    direction: str = DIRECTION_SERVER,
) -> OpeningProof:
    """Hide everything on one side of a block cut.

    ``side='suffix'`` reveals MAC-input blocks 1..cut and hides the rest;
    one composite claim chains the hidden tail into the inner hash, applies
    the outer transform, and matches the CBC tail — costing one compression
    per hidden block, one outer transform, and 3 AES blocks.
    ``side='prefix'`` hides blocks 1..cut and reveals the rest; a chain
    claim walks the hidden blocks to the midstate the verifier continues
    from, and a second claim finishes outer transform plus CBC tail.
    """
    _require_cbc(commitment)
    committed = _lookup(commitment, direction, record_index)
    if len(payload) != _cbc_payload_len(committed.record):
        raise ProofError("payload length does not match the committed record")
    mi = mac_input(committed.seq, committed.record.content_type, committed.record.version, payload)
    if not 1 <= cut_index or cut_index * BLOCK_SIZE >= len(mi):
        raise ProofError("cut index past the record end")
    split = cut_index * BLOCK_SIZE
    prev, blocks = _cbc_tail(committed.record)
    digest = commitment.digest()

    if side == SIDE_SUFFIX:
        s_cut = _stream_prefix_state(k_mac, mi[:split])
        claim = ZkClaim(
            _statement_id(digest, MODE_REDACT_SUFFIX, direction, record_index),
            "cbc-suffix-tag",
            {
                "record_index": record_index,
                "direction": direction.encode(),
                "cut_index": cut_index,
                "s_cut": s_cut,
                "inner_total_len": BLOCK_SIZE + len(mi),
                "k_mac": k_mac,
                "prev_block": prev,
                "cipher_blocks": blocks,
            },
            witness={"suffix": mi[split:], "k_enc": k_enc},
        )
        return OpeningProof(
            MODE_REDACT_SUFFIX,
            record_index,
            direction,
            revealed=(RevealedSpan(0, payload[: split - _HEADER_LEN]),),
            midstates=(s_cut,),
            block_indices=(cut_index,),
            attestations=(checker.zk_check(claim),),
        )

    if side == SIDE_PREFIX:
        s0 = hmac_inner_start(k_mac)
        s_cut = compress_chain(s0, mi[:split])
        inner_hash = digest_from_midstate(s_cut, mi[split:], BLOCK_SIZE * (cut_index + 1))
        chain_claim = ZkClaim(
            _statement_id(digest, MODE_REDACT_PREFIX, direction, record_index),
            "cbc-prefix-chain",
            {
                "record_index": record_index,
                "direction": direction.encode(),
                "s_start": s0,
                "s_end": s_cut,
                "first_block_index": 1,
                "block_count": cut_index,
            },
            witness={"blocks": mi[:split]},
        )
        tag_claim = ZkClaim(
            _statement_id(digest, MODE_REDACT_PREFIX, direction, record_index),
            "cbc-outer-tag",
            {
                "record_index": record_index,
                "direction": direction.encode(),
                "inner_hash": inner_hash,
                "k_mac": k_mac,
                "prev_block": prev,
                "cipher_blocks": blocks,
            },
            witness={"k_enc": k_enc},
        )
        return OpeningProof(
            MODE_REDACT_PREFIX,
            record_index,
            direction,
            revealed=(RevealedSpan(split - _HEADER_LEN, payload[split - _HEADER_LEN :]),),
            midstates=(s_cut,),
            block_indices=(cut_index,),
            attestations=(checker.zk_check(chain_claim), checker.zk_check(tag_claim)),
        )

    raise ValueError(f"side must be 'prefix' or 'suffix', not {side!r}")


def gcm_reveal_blocks(
    commitment: SessionCommitment,
    checker: RelationChecker,
    record_index: int,
    block_indices: list[int],
    key_share: bytes,
    verifier_share: bytes,
    blind: bytes,
    record_salt: bytes,
    direction: str = DIRECTION_SERVER,
) -> OpeningProof:
    """Open chosen GCM plaintext blocks by revealing their counter-mode
    keystream blocks, plus the two blocks the tag check needs, all bound to
    the committed key share."""
    _require_gcm(commitment)
    committed = _lookup(commitment, direction, record_index)
    body = committed.record.body
    n_blocks = (len(body) + 15) // 16
    indices = sorted(set(block_indices))
    if not indices:
        raise ProofError("no blocks requested")
    if indices[0] < 0 or indices[-1] >= n_blocks:
        raise ProofError("block index past the record end")
    key = xor_bytes(key_share, verifier_share)
    j0 = gcm_j0(record_salt, committed.record.explicit)
    counters = gcm_counter_blocks(j0, n_blocks)
    inputs = [j0, _ZERO_BLOCK] + [counters[j] for j in indices]
    outputs = [aes_block(key, block) for block in inputs]
    which = DIRECTIONS.index(direction)
    claim = ZkClaim(
        _statement_id(commitment.digest(), MODE_GCM_REVEAL, direction, record_index),
        "gcm-blocks",
        {
            "record_index": record_index,
            "direction": direction.encode(),
            "verifier_share": verifier_share,
            "commitment": commitment.share_commitments[which],
            "pairs": tuple(zip(inputs, outputs)),
        },
        witness={"key_share": key_share, "blind": blind},
    )
    return OpeningProof(
        MODE_GCM_REVEAL,
        record_index,
        direction,
        counter_blocks=tuple(outputs),
        block_indices=tuple(indices),
        attestations=(checker.zk_check(claim),),
    )


# -- verification (verifier side) -----------------------------------------------------


@dataclass(frozen=True)
class VerifierOpeningKeys:
    """What the verifier knows when it checks openings: reassembled MAC
    keys under CBC, or its own key shares and the public salts under GCM."""

    suite: CipherSuite
    client_mac: bytes | None = None
    server_mac: bytes | None = None
    client_share: bytes | None = None
    server_share: bytes | None = None
    client_salt: bytes | None = None
    server_salt: bytes | None = None

    def mac_key(self, direction: str) -> bytes:
        key = self.client_mac if direction == DIRECTION_CLIENT else self.server_mac
        if key is None:
            raise ProofError(f"no MAC key for direction {direction!r}")
        return key

    def share(self, direction: str) -> bytes:
        share = self.client_share if direction == DIRECTION_CLIENT else self.server_share
        if share is None:
            raise ProofError(f"no key share for direction {direction!r}")
        return share

    def salt(self, direction: str) -> bytes:
        salt = self.client_salt if direction == DIRECTION_CLIENT else self.server_salt
        if salt is None:
            raise ProofError(f"no record salt for direction {direction!r}")
        return salt


def verifier_opening_keys(
    commitment: SessionCommitment, key_material: SessionKeyMaterial
) -> VerifierOpeningKeys:
    """Join the verifier's own material with what the commitment disclosed."""
    if commitment.suite != key_material.suite:
        raise ProofError("commitment and key material disagree on the suite")
    if commitment.suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
        return VerifierOpeningKeys(
            commitment.suite,
            client_mac=xor_bytes(key_material.client_mac_share, commitment.mac_shares[0]),
            server_mac=xor_bytes(key_material.server_mac_share, commitment.mac_shares[1]),
        )
    return VerifierOpeningKeys(
        commitment.suite,
        client_share=key_material.client_key_share,
        server_share=key_material.server_key_share,
        client_salt=key_material.client_salt,
        server_salt=key_material.server_salt,
    )


def _reject(reason: str) -> OpeningRejected:
    return OpeningRejected(reason)


def _confirm_attestations(
    proof: OpeningProof,
    checker: RelationChecker,
    commitment: SessionCommitment,
    expected: list[tuple[str, dict]],
) -> None:
    """Every attestation must be checker-sealed, true, bound to this exact
    statement, and carry byte-identical public inputs."""
    if len(proof.attestations) != len(expected):
        raise _reject(
            f"{proof.mode} proofs carry {len(expected)} claims, got {len(proof.attestations)}"
        )
    statement = _statement_id(
        commitment.digest(), proof.mode, proof.direction, proof.record_index
    )
    for attestation, (relation, public) in zip(proof.attestations, expected):
        if not checker.confirm(attestation):
            raise _reject("attestation seal is not the checker's")
        if not attestation.verdict:
            raise _reject(f"relation {relation} evaluated false")
        if attestation.statement_id != statement:
            raise _reject("attestation bound to a different statement")
        if attestation.relation != relation:
            raise _reject(f"expected relation {relation}, got {attestation.relation}")
        if attestation.public != public:
            raise _reject(f"public inputs of {relation} do not match the record")


def _verified(
    proof: OpeningProof, committed: CommittedRecord, payload_len: int, spans
) -> VerifiedOpening:
    return VerifiedOpening(
        proof.record_index,
        proof.direction,
        committed.seq,
        committed.record.content_type,
        payload_len,
        tuple(spans),
    )


def _check_span_bounds(spans: tuple[RevealedSpan, ...], payload_len: int) -> None:
    last = 0
    for span in spans:
        if span.offset < last or span.offset + len(span.data) > payload_len:
            raise _reject("revealed spans overlap or run past the payload")
        last = span.offset + len(span.data)


def verify_opening(
    commitment: SessionCommitment,
    proof: OpeningProof,
    checker: RelationChecker,
    keys: VerifierOpeningKeys,
) -> VerifiedOpening:
    """Replay the verifier's side of one opening; raises OpeningRejected
    with the first discrepancy, returns the established spans otherwise."""
    committed = _lookup(commitment, proof.direction, proof.record_index)
    if commitment.suite != keys.suite:
        raise _reject("verifier keys are for a different suite")
    if proof.mode == MODE_GCM_REVEAL:
        _require_gcm(commitment)
        return _verify_gcm_reveal(commitment, proof, checker, keys, committed)
    _require_cbc(commitment)
    payload_len = _cbc_payload_len(committed.record)
    _check_span_bounds(proof.revealed, payload_len)
    if proof.mode == MODE_REVEAL_RECORD:
        return _verify_reveal_record(commitment, proof, checker, keys, committed, payload_len)
    if proof.mode == MODE_REDACT_BLOCK:
        return _verify_redact_block(commitment, proof, checker, keys, committed, payload_len)
    if proof.mode in (MODE_REDACT_PREFIX, MODE_REDACT_SUFFIX):
        return _verify_redact_affix(commitment, proof, checker, keys, committed, payload_len)
    raise _reject(f"unknown proof mode {proof.mode!r}")


def _verify_reveal_record(
    commitment, proof, checker, keys, committed, payload_len
) -> VerifiedOpening:
    if len(proof.revealed) != 1 or proof.revealed[0].offset != 0:
        raise _reject("reveal-record proofs carry exactly the full payload")
    payload = proof.revealed[0].data
    if len(payload) != payload_len:
        raise _reject("revealed payload length differs from the committed record")
    k_mac = keys.mac_key(proof.direction)
    expect = std_hmac.new(
        k_mac,
        mac_input(committed.seq, committed.record.content_type, committed.record.version, payload),
        "sha256",
    ).digest()
    if not std_hmac.compare_digest(expect, proof.sigma):
        raise _reject("recomputed record MAC differs from the revealed tag")
    prev, blocks = _cbc_tail(committed.record)
    _confirm_attestations(
        proof,
        checker,
        commitment,
        [
            (
                "cbc-tag-encrypt",
                {
                    "record_index": proof.record_index,
                    "direction": proof.direction.encode(),
                    "prev_block": prev,
                    "cipher_blocks": blocks,
                    "sigma": proof.sigma,
                },
            )
        ],
    )
    return _verified(proof, committed, payload_len, proof.revealed)


def _rebuild_mac_input_prefix(committed: CommittedRecord, payload_len: int) -> bytes:
    """The 13 pseudo-header bytes, reconstructed from committed facts."""
    return (
        struct.pack(">Q", committed.seq)
        + bytes([committed.record.content_type])
        + committed.record.version
        + struct.pack(">H", payload_len)
    )


def _verify_redact_block(
    commitment, proof, checker, keys, committed, payload_len
) -> VerifiedOpening:
    if len(proof.block_indices) != 1 or len(proof.midstates) != 2:
        raise _reject("redact-block proofs carry one block index and two midstates")
    block_index = proof.block_indices[0]
    mi_len = _HEADER_LEN + payload_len
    if not 2 <= block_index <= mi_len // BLOCK_SIZE:
        raise _reject("hidden block index out of range")
    lo = (block_index - 1) * BLOCK_SIZE
    hi = block_index * BLOCK_SIZE
    if len(proof.revealed) != 2:
        raise _reject("redact-block proofs reveal the two surrounding spans")
    head, tail = proof.revealed
    if head.offset != 0 or len(head.data) != lo - _HEADER_LEN:
        raise _reject("revealed head does not abut the hidden block")
    if tail.offset != hi - _HEADER_LEN or tail.offset + len(tail.data) != payload_len:
        raise _reject("revealed tail does not abut the hidden block")
    k_mac = keys.mac_key(proof.direction)
    header = _rebuild_mac_input_prefix(committed, payload_len)
    s_prev, s_next = proof.midstates
    if _stream_prefix_state(k_mac, header + head.data) != s_prev:
        raise _reject("midstate before the hidden block does not match the prefix")
    inner_hash = digest_from_midstate(s_next, tail.data, BLOCK_SIZE * (block_index + 1))
    if hmac_outer_digest(k_mac, inner_hash) != proof.sigma:
        raise _reject("recomputed record MAC differs from the revealed tag")
    prev, blocks = _cbc_tail(committed.record)
    _confirm_attestations(
        proof,
        checker,
        commitment,
        [
            (
                "sha256-compress",
                {
                    "record_index": proof.record_index,
                    "direction": proof.direction.encode(),
                    "block_index": block_index,
                    "s_prev": s_prev,
                    "s_next": s_next,
                },
            ),
            (
                "cbc-tag-encrypt",
                {
                    "record_index": proof.record_index,
                    "direction": proof.direction.encode(),
                    "prev_block": prev,
                    "cipher_blocks": blocks,
                    "sigma": proof.sigma,
                },
            ),
        ],
    )
    return _verified(proof, committed, payload_len, proof.revealed)


def _verify_redact_affix(
    commitment, proof, checker, keys, committed, payload_len
) -> VerifiedOpening:
    if len(proof.block_indices) != 1 or len(proof.midstates) != 1:
        raise _reject("affix proofs carry one cut index and one midstate")
    cut = proof.block_indices[0]
    mi_len = _HEADER_LEN + payload_len
    if not 1 <= cut or cut * BLOCK_SIZE >= mi_len:
        raise _reject("cut index past the record end")
    split = cut * BLOCK_SIZE
    if len(proof.revealed) != 1:
        raise _reject("affix proofs reveal exactly one span")
    span = proof.revealed[0]
    k_mac = keys.mac_key(proof.direction)
    header = _rebuild_mac_input_prefix(committed, payload_len)
    prev, blocks = _cbc_tail(committed.record)
    midstate = proof.midstates[0]

    if proof.mode == MODE_REDACT_SUFFIX:
        if proof.sigma:
            raise _reject("suffix proofs never reveal the tag")
        if span.offset != 0 or len(span.data) != split - _HEADER_LEN:
            raise _reject("revealed prefix does not reach the cut")
        if _stream_prefix_state(k_mac, header + span.data) != midstate:
            raise _reject("midstate at the cut does not match the revealed prefix")
        _confirm_attestations(
            proof,
            checker,
            commitment,
            [
                (
                    "cbc-suffix-tag",
                    {
                        "record_index": proof.record_index,
                        "direction": proof.direction.encode(),
                        "cut_index": cut,
                        "s_cut": midstate,
                        "inner_total_len": BLOCK_SIZE + mi_len,
                        "k_mac": k_mac,
                        "prev_block": prev,
                        "cipher_blocks": blocks,
                    },
                )
            ],
        )
        return _verified(proof, committed, payload_len, proof.revealed)

    if proof.sigma:
        raise _reject("prefix proofs never reveal the tag")
    if span.offset != split - _HEADER_LEN or span.offset + len(span.data) != payload_len:
        raise _reject("revealed suffix does not start at the cut")
    inner_hash = digest_from_midstate(midstate, span.data, BLOCK_SIZE * (cut + 1))
    _confirm_attestations(
        proof,
        checker,
        commitment,
        [
            (
                "cbc-prefix-chain",
                {
                    "record_index": proof.record_index,
                    "direction": proof.direction.encode(),
                    "s_start": hmac_inner_start(k_mac),
                    "s_end": midstate,
                    "first_block_index": 1,
                    "block_count": cut,
                },
            ),
            (
                "cbc-outer-tag",
                {
                    "record_index": proof.record_index,
                    "direction": proof.direction.encode(),
                    "inner_hash": inner_hash,
                    "k_mac": k_mac,
                    "prev_block": prev,
                    "cipher_blocks": blocks,
                },
            ),
        ],
    )
    return _verified(proof, committed, payload_len, proof.revealed)


def _verify_gcm_reveal(commitment, proof, checker, keys, committed) -> VerifiedOpening:
    body = committed.record.body
    n_blocks = (len(body) + 15) // 16
    indices = proof.block_indices
    if not indices or list(indices) != sorted(set(indices)):
        raise _reject("revealed block indices must be unique and sorted")
    if indices[0] < 0 or indices[-1] >= n_blocks:
        raise _reject("block index past the record end")
    if len(proof.counter_blocks) != 2 + len(indices):
        raise _reject("counter block count does not match the revealed set")
    if any(len(block) != 16 for block in proof.counter_blocks):
        raise _reject("counter blocks must be 16 bytes")
    which = DIRECTIONS.index(proof.direction)
    j0 = gcm_j0(keys.salt(proof.direction), committed.record.explicit)
    counters = gcm_counter_blocks(j0, n_blocks)
    inputs = [j0, _ZERO_BLOCK] + [counters[j] for j in indices]
    _confirm_attestations(
        proof,
        checker,
        commitment,
        [
            (
                "gcm-blocks",
                {
                    "record_index": proof.record_index,
                    "direction": proof.direction.encode(),
                    "verifier_share": keys.share(proof.direction),
                    "commitment": commitment.share_commitments[which],
                    "pairs": tuple(zip(inputs, proof.counter_blocks)),
                },
            )
        ],
    )
    e_j0, e_zero = proof.counter_blocks[:2]
    aad = GcmAdditionalData(
        committed.seq, committed.record.content_type, committed.record.version, len(body)
    ).to_bytes()
    masked = ghash(block_to_int(e_zero), aad, body)
    if xor_bytes(e_j0, masked) != committed.record.tag:
        raise _reject("recomputed tag differs from the committed record tag")
    spans = []
    for index, keystream in zip(indices, proof.counter_blocks[2:]):
        chunk = body[16 * index : 16 * index + 16]
        spans.append(RevealedSpan(16 * index, xor_bytes(chunk, keystream[: len(chunk)])))
    return _verified(proof, committed, len(body), spans)
