"""Split (two-party) record protection.

After the handshake, record keys exist only as shares between prover and
verifier. This module implements the record path on top of two dealer
functionalities plus a short assist dialogue between the parties:

* HMAC tags (CBC suite). One-time setup hands the prover the inner-pad
  midstate s0 = compress(IV, (k ⊕ ipad)); per tag the prover hashes the
  record locally from s0 and a single dealer call finishes the outer hash
  SHA256((k ⊕ opad) ∥ inner). The dealer never sees the record bytes — its
  per-tag inputs are one 32-byte midstate from the prover and a bare
  direction label from the verifier — and the outer-pad midstate never
  leaves the dealer, so neither party can tag alone.

* AES-GCM. A preprocessing call encrypts the zero block under the joint key
  and deals XOR shares of the GHASH powers h^1..h^N to both parties. Per
  record, counter-mode blocks come from an equality-checked AES oracle: both
  parties submit their key share and the same counter block; for the tag
  block J0 each party receives a share of AES_k(J0), for keystream blocks
  the prover alone receives the output. The verifier funnels every counter
  value through a replay store first, so no IV/counter is ever evaluated
  twice — that is what stops the classic two-time-pad and tag-forgery games
  a malicious prover could otherwise play.

The verifier side is reactive: `VerifierRecordLayer.handle_frame` serves the
assist requests the prover's `seal_query` / `open_response` emit.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

from .encoding import ByteReader, encode_bytes
from .frames import (
    FRAME_GCM_KEYSTREAM,
    FRAME_GCM_TAG_ASSIST,
    FRAME_GCM_TAG_REPLY,
    FRAME_HMAC_ASSIST,
    build_frame,
    split_frame,
)
from .gf128 import block_to_int, ghash_block_sequence, ghash_power_sum, gf128_mul, int_to_block
from .handshake3p.keymaterial import SessionKeyMaterial, xor_bytes
from .recordlayer import (
    CipherSuite,
    GCM_EXPLICIT_LEN,
    GCM_TAG_LEN,
    GcmAdditionalData,
    MAC_LEN,
    MAX_PAYLOAD,
    BadMacError,
    BadTagError,
    CipherRecord,
    PlainRecord,
    aes_block,
    assemble_cbc_record,
    gcm_counter_blocks,
    gcm_j0,
    mac_input,
    open_cbc_hmac,
    open_gcm,
    seal_cbc_hmac,
    seal_gcm,
    strip_cbc_layers,
)
from .rendezvous import PROVER, VERIFIER, DealerAbort, RendezvousDealer
from .rng import Rng, rand_below
from .sha256core import SHA256_IV, compress, digest_from_midstate

DIRECTION_CLIENT = "client"
DIRECTION_SERVER = "server"
DIRECTIONS = (DIRECTION_CLIENT, DIRECTION_SERVER)

# GHASH power-table length: one slot beyond the largest block count a
# maximum-size record can need (1 AAD block + 2^14/16 ciphertext blocks + 1
# length block).
GCM_TABLE_LEN = 1027

OP_HMAC_SETUP = "record/hmac-setup"
OP_HMAC_OUTER = "record/hmac-outer"
OP_GCM_PREPROCESS = "record/gcm-preprocess"
OP_AES_EQM = "record/aes-eqm"
OP_AES_EQM_ASYM = "record/aes-eqm-asym"

RECORD_FRAME_TYPES = (FRAME_HMAC_ASSIST, FRAME_GCM_TAG_ASSIST, FRAME_GCM_KEYSTREAM)

_HMAC_BLOCK = 64
_IPAD = bytes([0x36]) * _HMAC_BLOCK
_OPAD = bytes([0x5C]) * _HMAC_BLOCK


class RecordProtocolError(Exception):
    pass


class IvReplayError(RecordProtocolError):
    """A counter/IV value was presented for AES evaluation a second time."""


def _direction_byte(direction: str) -> bytes:
    return bytes([DIRECTIONS.index(direction)])


def _parse_direction(b: int) -> str:
    if b >= len(DIRECTIONS):
        raise RecordProtocolError(f"bad direction byte {b}")
    return DIRECTIONS[b]


# ---------------------------------------------------------------------------
# dealers


class HmacTagDealer(RendezvousDealer):
    """Per-direction HMAC-SHA256 evaluation from XOR key shares."""

    def __init__(self, timeout: float = 60.0):
        super().__init__(timeout=timeout)
        self._outer_midstate: dict[str, bytes] = {}

    def setup(self, role: str, direction: str, key_share: bytes) -> bytes | None:
        """Returns the inner-pad midstate s0 to the prover, None to the verifier."""
        payload = {"direction": direction, "key_share": key_share}
        return self.paired_call(OP_HMAC_SETUP, role, payload, self._compute_setup)

    def _compute_setup(self, inputs: dict) -> dict:
        p, v = inputs[PROVER], inputs[VERIFIER]
        if p["direction"] != v["direction"]:
            raise DealerAbort("parties disagree on the MAC direction")
        direction = p["direction"]
        if direction not in DIRECTIONS:
            raise DealerAbort(f"unknown direction {direction!r}")
        for side in (p, v):
            if len(side["key_share"]) != MAC_LEN:
                raise DealerAbort("MAC key shares must be 32 bytes")
        key = xor_bytes(p["key_share"], v["key_share"])
        key_block = key + b"\x00" * (_HMAC_BLOCK - len(key))
        inner_midstate = compress(SHA256_IV, xor_bytes(key_block, _IPAD))
        self._outer_midstate[direction] = compress(SHA256_IV, xor_bytes(key_block, _OPAD))
        return {PROVER: inner_midstate, VERIFIER: None}

    def outer(self, role: str, direction: str, inner_hash: bytes | None = None) -> bytes | None:
        """One call per tag: prover brings the inner hash, verifier consents.
        Returns the finished tag to the prover, None to the verifier."""
        payload: dict = {"direction": direction}
        if role == PROVER:
            payload["inner_hash"] = inner_hash
        return self.paired_call(OP_HMAC_OUTER, role, payload, self._compute_outer)

    def _compute_outer(self, inputs: dict) -> dict:
        p, v = inputs[PROVER], inputs[VERIFIER]
        if p["direction"] != v["direction"]:
            raise DealerAbort("parties disagree on the MAC direction")
        direction = p["direction"]
        midstate = self._outer_midstate.get(direction)
        if midstate is None:
            raise DealerAbort(f"no HMAC setup for direction {direction!r}")
        inner = p.get("inner_hash")
        if not isinstance(inner, bytes) or len(inner) != 32:
            raise DealerAbort("prover must supply the 32-byte inner hash")
        tag = digest_from_midstate(midstate, inner, _HMAC_BLOCK)
        return {PROVER: tag, VERIFIER: None}

    def tag_call_count(self) -> int:
        return self.call_count(OP_HMAC_OUTER)


class GcmDealer(RendezvousDealer):
    """Joint-key AES evaluations and GHASH power-share preprocessing."""

    def __init__(self, rng: Rng, timeout: float = 60.0):
        super().__init__(timeout=timeout)
        self._rng = rng

    def preprocess(self, role: str, direction: str, key_share: bytes) -> list[int]:
        """Deals each party its additive share table of h^1 .. h^TABLE_LEN."""
        payload = {"direction": direction, "key_share": key_share}
        result = self.paired_call(OP_GCM_PREPROCESS, role, payload, self._compute_preprocess)
        assert isinstance(result, list)
        return result

    def _compute_preprocess(self, inputs: dict) -> dict:
        key = self._joint_key(inputs)
        h = block_to_int(aes_block(key, b"\x00" * 16))
        prover_shares: list[int] = []
        verifier_shares: list[int] = []
        power = 1 << 127  # multiplicative identity; loop yields h^1 first
        for _ in range(GCM_TABLE_LEN):
            power = gf128_mul(power, h)
            mask = rand_below(self._rng, 1 << 128)
            verifier_shares.append(mask)
            prover_shares.append(power ^ mask)
        return {PROVER: prover_shares, VERIFIER: verifier_shares}

    def aes_eqm(self, role: str, direction: str, key_share: bytes, block: bytes) -> bytes:
        """Equality-checked AES on one block; each party gets an XOR share of
        the output (the tag-mask path)."""
        payload = {"direction": direction, "key_share": key_share, "block": block}
        result = self.paired_call(OP_AES_EQM, role, payload, self._compute_eqm)
        assert isinstance(result, bytes)
        return result

    def _compute_eqm(self, inputs: dict) -> dict:
        key = self._joint_key(inputs)
        p, v = inputs[PROVER], inputs[VERIFIER]
        if p["block"] != v["block"]:
            raise DealerAbort("parties disagree on the AES input block")
        if len(p["block"]) != 16:
            raise DealerAbort("AES blocks are 16 bytes")
        out = aes_block(key, p["block"])
        mask = rand_below(self._rng, 1 << 128).to_bytes(16, "big")
        return {PROVER: mask, VERIFIER: xor_bytes(out, mask)}

    def aes_eqm_asym(
        self, role: str, direction: str, key_share: bytes, blocks: list[bytes]
    ) -> list[bytes] | None:
        """Equality-checked AES on a batch; outputs go to the prover alone
        (the keystream path)."""
        payload = {"direction": direction, "key_share": key_share, "blocks": tuple(blocks)}
        return self.paired_call(OP_AES_EQM_ASYM, role, payload, self._compute_eqm_asym)

    def _compute_eqm_asym(self, inputs: dict) -> dict:
        key = self._joint_key(inputs)
        p, v = inputs[PROVER], inputs[VERIFIER]
        if p["blocks"] != v["blocks"]:
            raise DealerAbort("parties disagree on the AES input blocks")
        if not p["blocks"]:
            raise DealerAbort("empty AES batch")
        if len(p["blocks"]) > MAX_PAYLOAD // 16 + 2:
            raise DealerAbort("AES batch exceeds the record bound")
        if any(len(b) != 16 for b in p["blocks"]):
            raise DealerAbort("AES blocks are 16 bytes")
        out = [aes_block(key, b) for b in p["blocks"]]
        return {PROVER: out, VERIFIER: None}

    @staticmethod
    def _joint_key(inputs: dict) -> bytes:
        p, v = inputs[PROVER], inputs[VERIFIER]
        if p["direction"] != v["direction"]:
            raise DealerAbort("parties disagree on the key direction")
        if p["direction"] not in DIRECTIONS:
            raise DealerAbort(f"unknown direction {p['direction']!r}")
        for side in (p, v):
            if len(side["key_share"]) != 16:
                raise DealerAbort("AES key shares must be 16 bytes")
        return xor_bytes(p["key_share"], v["key_share"])


@dataclass
class IvStore:
    """Verifier-side uniqueness guard over every AES counter input.

    One store serves the whole session — tag blocks and keystream counters,
    both directions, verify and encrypt alike — so a value can never be
    evaluated under two pretexts.
    """

    _seen: set[bytes] = field(default_factory=set)

    def check_and_add(self, counter_block: bytes) -> None:
        if len(counter_block) != 16:
            raise RecordProtocolError("counter blocks are 16 bytes")
        if counter_block in self._seen:
            raise IvReplayError(f"counter/IV replay: {counter_block.hex()}")
        self._seen.add(counter_block)

    def __len__(self) -> int:
        return len(self._seen)


# ---------------------------------------------------------------------------
# prover side


@dataclass
class PendingMacCheck:
    """A CBC response whose HMAC check waits for the server MAC key."""

    seq: int
    content_type: int
    version: bytes
    payload: bytes
    tag: bytes


class ProverRecordLayer:
    """Seals outbound records and opens responses from the prover's seat.

    Queries go through the dealers (or locally, once the verifier has
    released the client-direction keys); CBC responses are decrypted locally
    with the MAC deferred, GCM responses are tag-checked online.
    """

    def __init__(
        self,
        suite: CipherSuite,
        key_material: SessionKeyMaterial,
        channel,
        rng: Rng,
        hmac_dealer: HmacTagDealer | None = None,
        gcm_dealer: GcmDealer | None = None,
    ):
        self.suite = suite
        self.km = key_material
        self.chan = channel
        self.rng = rng
        self.hmac_dealer = hmac_dealer
        self.gcm_dealer = gcm_dealer
        self.seq_out = 0
        self.seq_in = 0
        self.client_s0: bytes | None = None
        self.client_table: list[int] | None = None
        self.server_table: list[int] | None = None
        self.pending_mac_checks: list[PendingMacCheck] = []
        self._local_client_mac_key: bytes | None = None
        self._local_client_aes_key: bytes | None = None

    # -- setup ---------------------------------------------------------------

    def setup(self) -> None:
        """Run the offline phase: HMAC setup (CBC) or power tables (GCM).
        The verifier must run its own setup() concurrently."""
        if self.suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
            assert self.hmac_dealer is not None and self.km.client_mac_share is not None
            self.client_s0 = self.hmac_dealer.setup(
                PROVER, DIRECTION_CLIENT, self.km.client_mac_share
            )
        else:
            assert self.gcm_dealer is not None
            assert self.km.client_key_share is not None and self.km.server_key_share is not None
            self.client_table = self.gcm_dealer.preprocess(
                PROVER, DIRECTION_CLIENT, self.km.client_key_share
            )
            self.server_table = self.gcm_dealer.preprocess(
                PROVER, DIRECTION_SERVER, self.km.server_key_share
            )

    def enable_local_client_keys(self, verifier_client_share: bytes) -> None:
        """Client-keys mode: combine with the released share; queries no
        longer touch the dealers."""
        if self.suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
            assert self.km.client_mac_share is not None
            self._local_client_mac_key = xor_bytes(
                self.km.client_mac_share, verifier_client_share
            )
        else:
            assert self.km.client_key_share is not None
            self._local_client_aes_key = xor_bytes(
                self.km.client_key_share, verifier_client_share
            )

    @property
    def local_client_keys(self) -> bool:
        return self._local_client_mac_key is not None or self._local_client_aes_key is not None

    # -- outbound ------------------------------------------------------------

    def seal_query(self, content_type: int, payload: bytes) -> CipherRecord:
        seq = self.seq_out
        if self.suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
            record = PlainRecord(content_type, b"\x03\x03", seq, payload)
            if self._local_client_mac_key is not None:
                assert self.km.client_enc_key is not None
                sealed = seal_cbc_hmac(
                    self.km.client_enc_key, self._local_client_mac_key, record, self.rng
                )
            else:
                sealed = self._seal_cbc_dealer(record)
        else:
            record = PlainRecord(content_type, b"\x03\x03", seq, payload)
            explicit = struct.pack(">Q", seq)
            if self._local_client_aes_key is not None:
                assert self.km.client_salt is not None
                sealed = seal_gcm(self._local_client_aes_key, self.km.client_salt, record, explicit)
            else:
                sealed = self._seal_gcm_dealer(record, explicit)
        self.seq_out += 1
        return sealed

    def _seal_cbc_dealer(self, record: PlainRecord) -> CipherRecord:
        assert self.hmac_dealer is not None and self.client_s0 is not None
        assert self.km.client_enc_key is not None
        message = mac_input(record.seq, record.content_type, record.version, record.payload)
        inner = digest_from_midstate(self.client_s0, message, _HMAC_BLOCK)
        self.chan.send(build_frame(FRAME_HMAC_ASSIST, _direction_byte(DIRECTION_CLIENT)))
        tag = self.hmac_dealer.outer(PROVER, DIRECTION_CLIENT, inner)
        assert tag is not None
        return assemble_cbc_record(self.km.client_enc_key, record, tag, self.rng)

    def _seal_gcm_dealer(self, record: PlainRecord, explicit: bytes) -> CipherRecord:
        assert self.gcm_dealer is not None and self.client_table is not None
        assert self.km.client_key_share is not None and self.km.client_salt is not None
        j0 = gcm_j0(self.km.client_salt, explicit)
        n_blocks = (len(record.payload) + 15) // 16
        counters = gcm_counter_blocks(j0, n_blocks)
        body = _counters_body(DIRECTION_CLIENT, counters)
        self.chan.send(build_frame(FRAME_GCM_KEYSTREAM, body))
        keystream = self.gcm_dealer.aes_eqm_asym(
            PROVER, DIRECTION_CLIENT, self.km.client_key_share, counters
        )
        assert keystream is not None
        stream = b"".join(keystream)[: len(record.payload)]
        ciphertext = xor_bytes(record.payload, stream)
        aad = GcmAdditionalData(
            record.seq, record.content_type, record.version, len(record.payload)
        ).to_bytes()
        tag = self._joint_tag(DIRECTION_CLIENT, j0, aad, ciphertext)
        return CipherRecord(record.content_type, record.version, explicit, ciphertext, tag)

    def _joint_tag(self, direction: str, j0: bytes, aad: bytes, ciphertext: bytes) -> bytes:
        assert self.gcm_dealer is not None
        table = self.client_table if direction == DIRECTION_CLIENT else self.server_table
        key_share = (
            self.km.client_key_share
            if direction == DIRECTION_CLIENT
            else self.km.server_key_share
        )
        assert table is not None and key_share is not None
        blocks = ghash_block_sequence(aad, ciphertext)
        body = _tag_assist_body(direction, j0, blocks)
        self.chan.send(build_frame(FRAME_GCM_TAG_ASSIST, body))
        mask_share = self.gcm_dealer.aes_eqm(PROVER, direction, key_share, j0)
        ftype, reply = split_frame(self.chan.recv())
        if ftype != FRAME_GCM_TAG_REPLY or len(reply) != 16:
            raise RecordProtocolError("malformed tag-assist reply")
        own = ghash_power_sum(blocks, table)
        return int_to_block(own ^ block_to_int(mask_share) ^ block_to_int(reply))

    # -- inbound -------------------------------------------------------------

    def open_response(self, record: CipherRecord) -> PlainRecord:
        seq = self.seq_in
        if self.suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
            assert self.km.server_enc_key is not None
            payload, tag = strip_cbc_layers(self.km.server_enc_key, record)
            self.pending_mac_checks.append(
                PendingMacCheck(seq, record.content_type, record.version, payload, tag)
            )
            plain = PlainRecord(record.content_type, record.version, seq, payload)
        else:
            plain = self._open_gcm_dealer(record, seq)
        self.seq_in += 1
        return plain

    def _open_gcm_dealer(self, record: CipherRecord, seq: int) -> PlainRecord:
        assert self.gcm_dealer is not None and self.km.server_salt is not None
        assert self.km.server_key_share is not None
        if len(record.explicit) != GCM_EXPLICIT_LEN or len(record.tag) != GCM_TAG_LEN:
            raise BadTagError("malformed GCM record")
        j0 = gcm_j0(self.km.server_salt, record.explicit)
        aad = GcmAdditionalData(
            seq, record.content_type, record.version, len(record.body)
        ).to_bytes()
        tag = self._joint_tag(DIRECTION_SERVER, j0, aad, record.body)
        if tag != record.tag:
            raise BadTagError("record tag mismatch")
        counters = gcm_counter_blocks(j0, (len(record.body) + 15) // 16)
        body = _counters_body(DIRECTION_SERVER, counters)
        self.chan.send(build_frame(FRAME_GCM_KEYSTREAM, body))
        keystream = self.gcm_dealer.aes_eqm_asym(
            PROVER, DIRECTION_SERVER, self.km.server_key_share, counters
        )
        assert keystream is not None
        payload = xor_bytes(record.body, b"".join(keystream)[: len(record.body)])
        return PlainRecord(record.content_type, record.version, seq, payload)

    # -- deferred CBC MAC checks ----------------------------------------------

    def verify_pending_macs(self, server_mac_key: bytes) -> None:
        """Run once the server MAC key is reassembled after share release."""
        import hmac as std_hmac

        for pending in self.pending_mac_checks:
            expect = std_hmac.new(
                server_mac_key,
                mac_input(pending.seq, pending.content_type, pending.version, pending.payload),
                "sha256",
            ).digest()
            if not std_hmac.compare_digest(expect, pending.tag):
                raise BadMacError(f"deferred MAC check failed for record {pending.seq}")


# ---------------------------------------------------------------------------
# verifier side


class VerifierRecordLayer:
    """Serves the prover's record-phase assist requests."""

    def __init__(
        self,
        suite: CipherSuite,
        key_material: SessionKeyMaterial,
        channel,
        hmac_dealer: HmacTagDealer | None = None,
        gcm_dealer: GcmDealer | None = None,
        iv_store: IvStore | None = None,
    ):
        self.suite = suite
        self.km = key_material
        self.chan = channel
        self.hmac_dealer = hmac_dealer
        self.gcm_dealer = gcm_dealer
        self.iv_store = iv_store if iv_store is not None else IvStore()
        self.client_table: list[int] | None = None
        self.server_table: list[int] | None = None
        self.client_keys_released = False
        self.server_direction_locked = False
        self.retired = False
        self.assists_served = 0

    def setup(self) -> None:
        if self.suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
            assert self.hmac_dealer is not None and self.km.client_mac_share is not None
            self.hmac_dealer.setup(VERIFIER, DIRECTION_CLIENT, self.km.client_mac_share)
        else:
            assert self.gcm_dealer is not None
            assert self.km.client_key_share is not None and self.km.server_key_share is not None
            self.client_table = self.gcm_dealer.preprocess(
                VERIFIER, DIRECTION_CLIENT, self.km.client_key_share
            )
            self.server_table = self.gcm_dealer.preprocess(
                VERIFIER, DIRECTION_SERVER, self.km.server_key_share
            )

    def release_client_share(self) -> bytes:
        """Hand over the client-direction share (client-keys mode); from this
        point the verifier refuses to assist the client direction."""
        self.client_keys_released = True
        if self.suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
            assert self.km.client_mac_share is not None
            return self.km.client_mac_share
        assert self.km.client_key_share is not None
        return self.km.client_key_share

    def lock_server_direction(self) -> None:
        """Stop assisting the server direction once the handshake is done.

        The only legitimate server-direction assist is checking the server
        Finished. Serving one afterwards would evaluate the server cipher
        on attacker-chosen input, i.e. act as a forgery oracle for records
        the server never sent.
        """
        self.server_direction_locked = True

    def retire(self) -> None:
        """Stop serving assists entirely; the response is now committed."""
        self.retired = True

    def release_shares(self) -> tuple[bytes, bytes]:
        """Hand over both direction shares so the peer can open locally.

        Refuses until the layer is retired: a release while assists are
        still live would combine full keys with an active evaluation
        oracle, which is exactly the state the commitment step exists to
        prevent.
        """
        if not self.retired:
            raise RecordProtocolError("share release before commitment")
        if self.suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
            assert self.km.client_mac_share is not None
            assert self.km.server_mac_share is not None
            return self.km.client_mac_share, self.km.server_mac_share
        assert self.km.client_key_share is not None
        assert self.km.server_key_share is not None
        return self.km.client_key_share, self.km.server_key_share

    def handle_frame(self, ftype: int, body: bytes) -> bool:
        """Dispatch one frame; returns False if it is not a record-layer frame."""
        if ftype == FRAME_HMAC_ASSIST:
            self._serve_hmac(body)
        elif ftype == FRAME_GCM_TAG_ASSIST:
            self._serve_tag_assist(body)
        elif ftype == FRAME_GCM_KEYSTREAM:
            self._serve_keystream(body)
        else:
            return False
        self.assists_served += 1
        return True

    def _check_direction(self, direction: str) -> None:
        if self.retired:
            raise RecordProtocolError("assist requested after commitment")
        if direction == DIRECTION_SERVER and self.server_direction_locked:
            raise RecordProtocolError(
                "server-direction assist requested after handshake"
            )
        if direction == DIRECTION_CLIENT and self.client_keys_released:
            raise RecordProtocolError(
                "client-direction assist requested after key release"
            )

    def _serve_hmac(self, body: bytes) -> None:
        if len(body) != 1:
            raise RecordProtocolError("malformed HMAC assist frame")
        direction = _parse_direction(body[0])
        self._check_direction(direction)
        assert self.hmac_dealer is not None
        self.hmac_dealer.outer(VERIFIER, direction)

    def _serve_tag_assist(self, body: bytes) -> None:
        direction, j0, blocks = _parse_tag_assist_body(body)
        self._check_direction(direction)
        assert self.gcm_dealer is not None
        self.iv_store.check_and_add(j0)
        key_share, table = self._direction_material(direction)
        mask_share = self.gcm_dealer.aes_eqm(VERIFIER, direction, key_share, j0)
        own = ghash_power_sum(blocks, table)
        reply = int_to_block(own ^ block_to_int(mask_share))
        self.chan.send(build_frame(FRAME_GCM_TAG_REPLY, reply))

    def _serve_keystream(self, body: bytes) -> None:
        direction, counters = _parse_counters_body(body)
        self._check_direction(direction)
        assert self.gcm_dealer is not None
        for counter in counters:
            self.iv_store.check_and_add(counter)
        key_share, _table = self._direction_material(direction)
        self.gcm_dealer.aes_eqm_asym(VERIFIER, direction, key_share, counters)

    def _direction_material(self, direction: str) -> tuple[bytes, list[int]]:
        if direction == DIRECTION_CLIENT:
            share, table = self.km.client_key_share, self.client_table
        else:
            share, table = self.km.server_key_share, self.server_table
        if share is None or table is None:
            raise RecordProtocolError(f"no material for direction {direction!r}")
        return share, table


# ---------------------------------------------------------------------------
# frame bodies


def _tag_assist_body(direction: str, j0: bytes, blocks: list[int]) -> bytes:
    packed = b"".join(int_to_block(b) for b in blocks)
    return _direction_byte(direction) + j0 + encode_bytes(packed)


def _parse_tag_assist_body(body: bytes) -> tuple[str, bytes, list[int]]:
    if len(body) < 17:
        raise RecordProtocolError("malformed tag assist frame")
    direction = _parse_direction(body[0])
    j0 = body[1:17]
    reader = ByteReader(body[17:])
    packed = reader.read_bytes()
    reader.expect_end()
    if len(packed) % 16:
        raise RecordProtocolError("GHASH blocks must be 16-byte aligned")
    blocks = [block_to_int(packed[i : i + 16]) for i in range(0, len(packed), 16)]
    if not blocks:
        raise RecordProtocolError("empty GHASH block sequence")
    return direction, j0, blocks


def _counters_body(direction: str, counters: list[bytes]) -> bytes:
    return _direction_byte(direction) + encode_bytes(b"".join(counters))


def _parse_counters_body(body: bytes) -> tuple[str, list[bytes]]:
    if not body:
        raise RecordProtocolError("malformed keystream frame")
    direction = _parse_direction(body[0])
    reader = ByteReader(body[1:])
    packed = reader.read_bytes()
    reader.expect_end()
    if len(packed) % 16 or not packed:
        raise RecordProtocolError("counter blocks must be 16-byte aligned")
    counters = [packed[i : i + 16] for i in range(0, len(packed), 16)]
    return direction, counters


def open_response_single_party(
    suite: CipherSuite,
    server_key: bytes,
    server_mac_or_salt: bytes,
    record: CipherRecord,
    seq: int,
) -> PlainRecord:
    """Reference single-key opening, used by tests and the post-release
    re-verification path."""
    if suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
        return open_cbc_hmac(server_key, server_mac_or_salt, record, seq)
    return open_gcm(server_key, server_mac_or_salt, record, seq)
