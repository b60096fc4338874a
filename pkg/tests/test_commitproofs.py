"""Session commitments, the relation checker, and selective record openings.

Budgets asserted here are checker-counter facts: every AES block and SHA-256
compression the checker evaluates is metered, so "a suffix redaction costs
256 − i compressions" is a test, not a comment.
"""

from __future__ import annotations

import random

import pytest

from tlsoracle.commitproofs import (
    Attestation,
    CommitOrderError,
    CommitPhase,
    CommittedRecord,
    OpeningProof,
    OpeningRejected,
    ProofError,
    RelationChecker,
    RevealedSpan,
    SessionCommitment,
    UnknownRelationError,
    VerifierOpeningKeys,
    ZkClaim,
    commit_session,
    gcm_reveal_blocks,
    redact_affix_cbc,
    redact_block_cbc,
    reveal_record_cbc,
    verifier_opening_keys,
    verify_opening,
)
from tlsoracle.handshake3p.keymaterial import SessionKeyMaterial, xor_bytes
from tlsoracle.recordlayer import (
    CipherSuite,
    ContentType,
    PlainRecord,
    seal_cbc_hmac,
    seal_gcm,
)
from tlsoracle.rendezvous import PROVER
from tlsoracle.rng import rand_bytes
from tlsoracle.sha256core import message_blocks
from tlsoracle.twopc_records import DIRECTION_CLIENT, DIRECTION_SERVER

from .oracles import hmac_sha256_oracle, sha256_oracle

CBC = CipherSuite.ECDHE_RSA_AES128_CBC_SHA256
GCM = CipherSuite.ECDHE_RSA_AES128_GCM_SHA256


# -- synthetic committed sessions ----------------------------------------------


class CbcSession:
    """A committed CBC session synthesized without running the handshake."""

    def __init__(self, rng, payloads):
        self.rng = rng
        self.keys = {
            DIRECTION_CLIENT: (rand_bytes(rng, 16), rand_bytes(rng, 32)),
            DIRECTION_SERVER: (rand_bytes(rng, 16), rand_bytes(rng, 32)),
        }
        self.payloads = {DIRECTION_CLIENT: [], DIRECTION_SERVER: []}
        records = []
        seqs = {DIRECTION_CLIENT: 1, DIRECTION_SERVER: 1}
        for direction, payload in payloads:
            assert len(payload) % 16 == 0, "CBC test payloads sit on block boundaries"
            k_enc, k_mac = self.keys[direction]
            seq = seqs[direction]
            seqs[direction] += 1
            record = seal_cbc_hmac(
                k_enc, k_mac, PlainRecord(ContentType.APPLICATION_DATA, b"\x03\x03", seq, payload), rng
            )
            records.append(CommittedRecord(direction, seq, record))
            self.payloads[direction].append(payload)
        # split the true MAC keys into prover/verifier shares
        self.mac_shares = {
            direction: rand_bytes(rng, 32) for direction in (DIRECTION_CLIENT, DIRECTION_SERVER)
        }
        prover_km = SessionKeyMaterial(
            role=PROVER,
            suite=CBC,
            master_share=bytes(48),
            client_enc_key=self.keys[DIRECTION_CLIENT][0],
            server_enc_key=self.keys[DIRECTION_SERVER][0],
            client_mac_share=xor_bytes(self.keys[DIRECTION_CLIENT][1], self.mac_shares[DIRECTION_CLIENT]),
            server_mac_share=xor_bytes(self.keys[DIRECTION_SERVER][1], self.mac_shares[DIRECTION_SERVER]),
        )
        self.commitment, self.secrets = commit_session(records, prover_km, rand_bytes(rng, 32), rng)
        self.checker = RelationChecker(rng)
        self.verifier_keys = VerifierOpeningKeys(
            CBC,
            client_mac=self.keys[DIRECTION_CLIENT][1],
            server_mac=self.keys[DIRECTION_SERVER][1],
        )

    def enc_mac(self, direction):
        return self.keys[direction]


class GcmSession:
    """A committed GCM session synthesized without running the handshake."""

    def __init__(self, rng, payloads):
        self.rng = rng
        self.shares = {
            DIRECTION_CLIENT: (rand_bytes(rng, 16), rand_bytes(rng, 16)),
            DIRECTION_SERVER: (rand_bytes(rng, 16), rand_bytes(rng, 16)),
        }
        self.salts = {DIRECTION_CLIENT: rand_bytes(rng, 4), DIRECTION_SERVER: rand_bytes(rng, 4)}
        self.payloads = {DIRECTION_CLIENT: [], DIRECTION_SERVER: []}
        records = []
        seqs = {DIRECTION_CLIENT: 1, DIRECTION_SERVER: 1}
        for direction, payload in payloads:
            own, other = self.shares[direction]
            seq = seqs[direction]
            seqs[direction] += 1
            record = seal_gcm(
                xor_bytes(own, other),
                self.salts[direction],
                PlainRecord(ContentType.APPLICATION_DATA, b"\x03\x03", seq, payload),
                rand_bytes(rng, 8),
            )
            records.append(CommittedRecord(direction, seq, record))
            self.payloads[direction].append(payload)
        prover_km = SessionKeyMaterial(
            role=PROVER,
            suite=GCM,
            master_share=bytes(48),
            client_key_share=self.shares[DIRECTION_CLIENT][0],
            server_key_share=self.shares[DIRECTION_SERVER][0],
            client_salt=self.salts[DIRECTION_CLIENT],
            server_salt=self.salts[DIRECTION_SERVER],
        )
        self.commitment, self.secrets = commit_session(records, prover_km, rand_bytes(rng, 32), rng)
        self.checker = RelationChecker(rng)
        self.verifier_keys = VerifierOpeningKeys(
            GCM,
            client_share=self.shares[DIRECTION_CLIENT][1],
            server_share=self.shares[DIRECTION_SERVER][1],
            client_salt=self.salts[DIRECTION_CLIENT],
            server_salt=self.salts[DIRECTION_SERVER],
        )

    def open_args(self, direction):
        own, other = self.shares[direction]
        blind = (
            self.secrets.client_blind if direction == DIRECTION_CLIENT else self.secrets.server_blind
        )
        return own, other, blind, self.salts[direction]


def _random_payload(rng, max_blocks=64):
    return rand_bytes(rng, 16 * rng.randint(1, max_blocks))


# -- relation checker ------------------------------------------------------------


def test_unregistered_relation_rejected(rng):
    checker = RelationChecker(rng)
    claim = ZkClaim(b"x" * 32, "quantum-leap", {}, witness={})
    with pytest.raises(UnknownRelationError):
        checker.zk_check(claim)


def test_claim_without_witness_rejected(rng):
    checker = RelationChecker(rng)
    claim = ZkClaim(b"x" * 32, "aes-block", {"input": bytes(16), "output": bytes(16)})
    with pytest.raises(ValueError):
        checker.zk_check(claim)


def test_malformed_public_input_shapes_rejected(rng):
    checker = RelationChecker(rng)
    # wrong length
    with pytest.raises(ValueError, match="16 bytes"):
        checker.zk_check(
            ZkClaim(b"x" * 32, "aes-block", {"input": bytes(15), "output": bytes(16)}, {"key": bytes(16)})
        )
    # missing field
    with pytest.raises(ValueError, match="missing"):
        checker.zk_check(ZkClaim(b"x" * 32, "aes-block", {"input": bytes(16)}, {"key": bytes(16)}))
    # wrong type
    with pytest.raises(ValueError, match="integer"):
        checker.zk_check(
            ZkClaim(
                b"x" * 32,
                "sha256-compress",
                {
                    "record_index": b"zero",
                    "direction": b"server",
                    "block_index": 1,
                    "s_prev": bytes(32),
                    "s_next": bytes(32),
                },
                {"block": bytes(64)},
            )
        )


def test_aes_block_relation_true_and_false(rng):
    from tlsoracle.recordlayer import aes_block

    checker = RelationChecker(rng)
    key, block = rand_bytes(rng, 16), rand_bytes(rng, 16)
    good = ZkClaim(
        b"s" * 32, "aes-block", {"input": block, "output": aes_block(key, block)}, {"key": key}
    )
    assert checker.zk_check(good).verdict is True
    bad = ZkClaim(
        b"s" * 32, "aes-block", {"input": block, "output": bytes(16)}, {"key": key}
    )
    assert checker.zk_check(bad).verdict is False
    assert checker.counters["aes_block"] == 2


def test_commitment_opening_relation(rng):
    checker = RelationChecker(rng)
    value, blind = b"1157.7500", rand_bytes(rng, 32)
    com = sha256_oracle(value + blind)
    good = ZkClaim(b"c" * 32, "commitment-opening", {"commitment": com}, {"value": value, "blind": blind})
    assert checker.zk_check(good).verdict is True
    bad = ZkClaim(
        b"c" * 32, "commitment-opening", {"commitment": com}, {"value": b"9.9999", "blind": blind}
    )
    assert checker.zk_check(bad).verdict is False
    assert checker.counters["commitment_opening"] == 2


def test_threshold_relation_compares_against_committed_bound(rng):
    checker = RelationChecker(rng)
    bound = 10000000  # 1000.0000 in 4-digit fixed point
    blind = rand_bytes(rng, 32)
    com = sha256_oracle(str(bound).encode() + blind)
    meets = ZkClaim(
        b"t" * 32,
        "threshold-ge",
        {"value_scaled": 11577500, "commitment": com},
        {"bound_scaled": bound, "blind": blind},
    )
    assert checker.zk_check(meets).verdict is True
    below = ZkClaim(
        b"t" * 32,
        "threshold-ge",
        {"value_scaled": 9999999, "commitment": com},
        {"bound_scaled": bound, "blind": blind},
    )
    assert checker.zk_check(below).verdict is False
    wrong_blind = ZkClaim(
        b"t" * 32,
        "threshold-ge",
        {"value_scaled": 11577500, "commitment": com},
        {"bound_scaled": bound, "blind": bytes(32)},
    )
    assert checker.zk_check(wrong_blind).verdict is False


def test_attestation_seal_binds_contents(rng):
    from tlsoracle.recordlayer import aes_block

    checker = RelationChecker(rng)
    key, block = rand_bytes(rng, 16), rand_bytes(rng, 16)
    attestation = checker.zk_check(
        ZkClaim(
            b"s" * 32, "aes-block", {"input": block, "output": aes_block(key, block)}, {"key": key}
        )
    )
    assert checker.confirm(attestation)
    from dataclasses import replace

    assert not checker.confirm(replace(attestation, verdict=False))
    assert not checker.confirm(replace(attestation, public={"input": block, "output": bytes(16)}))
    assert not checker.confirm(replace(attestation, statement_id=b"y" * 32))
    other_checker = RelationChecker(rng)
    assert not other_checker.confirm(attestation)


def test_checker_is_deaf_to_witness_free_forgery(rng):
    """Building an Attestation by hand (without the checker) cannot pass
    confirm(): the realization of the proof functionality is the seal."""
    forged = Attestation(b"f" * 32, "cbc-tag-encrypt", {"anything": b""}, True, bytes(32))
    assert not RelationChecker(rng).confirm(forged)


# -- commitment and ordering -------------------------------------------------------


def test_commit_phase_ordering():
    phase = CommitPhase()
    with pytest.raises(CommitOrderError, match="before commitment"):
        phase.release()
    phase.commit()
    with pytest.raises(CommitOrderError):
        phase.commit()
    phase.release()
    with pytest.raises(CommitOrderError):
        phase.release()


def test_session_commitment_round_trip(rng):
    session = CbcSession(rng, [(DIRECTION_CLIENT, bytes(48)), (DIRECTION_SERVER, bytes(160))])
    raw = session.commitment.to_bytes()
    assert SessionCommitment.from_bytes(raw) == session.commitment
    with pytest.raises(ValueError):
        SessionCommitment.from_bytes(raw + b"\x00")


def test_commitment_suite_fields_are_mutually_exclusive(rng):
    cbc = CbcSession(rng, [(DIRECTION_SERVER, bytes(64))]).commitment
    assert cbc.mac_shares is not None and cbc.share_commitments is None
    gcm = GcmSession(rng, [(DIRECTION_SERVER, bytes(64))]).commitment
    assert gcm.share_commitments is not None and gcm.mac_shares is None
    with pytest.raises(ValueError):
        SessionCommitment(bytes(16), CBC, (), (), bytes(32))


def test_gcm_commitment_pins_the_prover_share(rng):
    session = GcmSession(rng, [(DIRECTION_SERVER, bytes(64))])
    own, _, blind, _ = session.open_args(DIRECTION_SERVER)
    assert session.commitment.share_commitments[1] == sha256_oracle(own + blind)
    # and the share itself never appears in the commitment bytes
    assert own not in session.commitment.to_bytes()


# -- reveal-record --------------------------------------------------------------


def test_reveal_record_accepts_and_spends_three_aes(rng):
    payload = _random_payload(rng)
    session = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    k_enc, k_mac = session.enc_mac(DIRECTION_SERVER)
    proof = reveal_record_cbc(session.commitment, session.checker, 0, payload, k_enc, k_mac)
    session.checker.reset_counters()
    # verification re-checks nothing through the checker beyond the seal
    out = verify_opening(session.commitment, proof, session.checker, session.verifier_keys)
    assert out.text() == payload
    assert out.seq == 1 and out.direction == DIRECTION_SERVER
    # the builder spent exactly 3 AES calls, nothing else
    builder_checker = RelationChecker(rng)
    reveal_record_cbc(session.commitment, builder_checker, 0, payload, k_enc, k_mac)
    assert builder_checker.counters == {
        "aes_block": 3,
        "sha256_compression": 0,
        "hmac_outer": 0,
        "commitment_opening": 0,
    }


def test_reveal_record_sigma_matches_reference_hmac(rng):
    payload = _random_payload(rng)
    session = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    k_enc, k_mac = session.enc_mac(DIRECTION_SERVER)
    proof = reveal_record_cbc(session.commitment, session.checker, 0, payload, k_enc, k_mac)
    from tlsoracle.recordlayer import mac_input

    assert proof.sigma == hmac_sha256_oracle(k_mac, mac_input(1, 23, b"\x03\x03", payload))


def test_reveal_record_works_for_the_query_direction(rng):
    payload = _random_payload(rng)
    session = CbcSession(rng, [(DIRECTION_CLIENT, payload), (DIRECTION_SERVER, bytes(64))])
    k_enc, k_mac = session.enc_mac(DIRECTION_CLIENT)
    proof = reveal_record_cbc(
        session.commitment, session.checker, 0, payload, k_enc, k_mac, direction=DIRECTION_CLIENT
    )
    out = verify_opening(session.commitment, proof, session.checker, session.verifier_keys)
    assert out.text() == payload and out.direction == DIRECTION_CLIENT


def test_reveal_record_rejects_altered_byte(rng):
    payload = _random_payload(rng)
    session = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    k_enc, k_mac = session.enc_mac(DIRECTION_SERVER)
    proof = reveal_record_cbc(session.commitment, session.checker, 0, payload, k_enc, k_mac)
    doctored = bytearray(payload)
    doctored[5] ^= 0x01
    from dataclasses import replace

    forged = replace(proof, revealed=(RevealedSpan(0, bytes(doctored)),))
    with pytest.raises(OpeningRejected, match="MAC"):
        verify_opening(session.commitment, forged, session.checker, session.verifier_keys)


def test_reveal_record_rejects_cross_record_claim_swap(rng):
    """σ and its claim from record 0 cannot vouch for record 1."""
    payloads = [_random_payload(rng), _random_payload(rng)]
    session = CbcSession(rng, [(DIRECTION_SERVER, p) for p in payloads])
    k_enc, k_mac = session.enc_mac(DIRECTION_SERVER)
    proof0 = reveal_record_cbc(session.commitment, session.checker, 0, payloads[0], k_enc, k_mac)
    from dataclasses import replace

    spliced = replace(proof0, record_index=1, revealed=(RevealedSpan(0, payloads[1]),))
    with pytest.raises(OpeningRejected):
        verify_opening(session.commitment, spliced, session.checker, session.verifier_keys)


def test_reveal_record_rejects_cross_session_claims(rng):
    payload = _random_payload(rng)
    session_a = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    session_b = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    k_enc, k_mac = session_a.enc_mac(DIRECTION_SERVER)
    proof = reveal_record_cbc(session_a.commitment, session_a.checker, 0, payload, k_enc, k_mac)
    with pytest.raises(OpeningRejected):
        verify_opening(session_b.commitment, proof, session_b.checker, session_b.verifier_keys)


def test_reveal_record_rejects_wrong_length_payload(rng):
    payload = _random_payload(rng)
    session = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    k_enc, k_mac = session.enc_mac(DIRECTION_SERVER)
    with pytest.raises(ProofError, match="length"):
        reveal_record_cbc(session.commitment, session.checker, 0, payload + bytes(16), k_enc, k_mac)


# -- redact-block ----------------------------------------------------------------


def test_redact_block_hides_exactly_one_block(rng):
    payload = bytearray(_random_payload(rng, max_blocks=32))
    if len(payload) < 192:
        payload.extend(bytes(192 - len(payload)))
    payload = bytes(payload)
    session = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    k_enc, k_mac = session.enc_mac(DIRECTION_SERVER)
    block_index = 2  # covers payload bytes [51, 115)
    proof = redact_block_cbc(
        session.commitment, session.checker, 0, payload, k_enc, k_mac, block_index
    )
    out = verify_opening(session.commitment, proof, session.checker, session.verifier_keys)
    assert out.spans[0].data == payload[:51]
    assert out.spans[1].offset == 115 and out.spans[1].data == payload[115:]
    # hidden block bytes are absent from the serialized proof
    assert payload[51:115] not in proof.to_bytes()


def test_redact_block_budget_is_one_compression(rng):
    payload = bytes(range(256)) * 2  # 512 bytes
    session = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    k_enc, k_mac = session.enc_mac(DIRECTION_SERVER)
    checker = RelationChecker(rng)
    redact_block_cbc(session.commitment, checker, 0, payload, k_enc, k_mac, 3)
    assert checker.counters["sha256_compression"] == 1
    assert checker.counters["aes_block"] == 3
    assert checker.counters["hmac_outer"] == 0


def test_redact_block_rejects_midstate_inconsistent_with_claim(rng):
    payload = bytes(512)
    session = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    k_enc, k_mac = session.enc_mac(DIRECTION_SERVER)
    proof = redact_block_cbc(session.commitment, session.checker, 0, payload, k_enc, k_mac, 3)
    from dataclasses import replace

    forged = replace(proof, midstates=(rand_bytes(rng, 32), proof.midstates[1]))
    with pytest.raises(OpeningRejected):
        verify_opening(session.commitment, forged, session.checker, session.verifier_keys)


def test_redact_block_rejects_tampered_suffix(rng):
    payload = _random_payload(rng, max_blocks=16)
    if len(payload) < 192:
        payload = payload + bytes(192 - len(payload))
    session = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    k_enc, k_mac = session.enc_mac(DIRECTION_SERVER)
    proof = redact_block_cbc(session.commitment, session.checker, 0, payload, k_enc, k_mac, 2)
    tail = bytearray(proof.revealed[1].data)
    tail[0] ^= 0x80
    from dataclasses import replace

    forged = replace(proof, revealed=(proof.revealed[0], RevealedSpan(115, bytes(tail))))
    with pytest.raises(OpeningRejected, match="MAC"):
        verify_opening(session.commitment, forged, session.checker, session.verifier_keys)


def test_redact_block_refuses_header_and_padding_blocks(rng):
    payload = bytes(256)
    session = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    k_enc, k_mac = session.enc_mac(DIRECTION_SERVER)
    with pytest.raises(ProofError):
        redact_block_cbc(session.commitment, session.checker, 0, payload, k_enc, k_mac, 1)
    with pytest.raises(ProofError):
        redact_block_cbc(session.commitment, session.checker, 0, payload, k_enc, k_mac, 5)


# -- affix redaction --------------------------------------------------------------


def test_redact_suffix_budget_formula(rng):
    """A 16304-byte payload spans exactly 256 MAC-input blocks, so hiding
    everything after cut i costs 256 − i compressions, 3 AES, 1 outer."""
    payload = rand_bytes(rng, 16304)
    mi_blocks = message_blocks(b"\x00" * (13 + len(payload)), 64)
    assert len(mi_blocks) == 256  # the coordinate fact the formula relies on
    session = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    k_enc, k_mac = session.enc_mac(DIRECTION_SERVER)
    # valid cuts run 1..254: the MAC input is 16317 bytes, so block 255 is
    # partial and the chain cannot stop inside it
    for cut in (1, 17, 128, 254):
        checker = RelationChecker(rng)
        proof = redact_affix_cbc(
            session.commitment, checker, 0, payload, k_enc, k_mac, "suffix", cut
        )
        assert checker.counters == {
            "aes_block": 3,
            "sha256_compression": 256 - cut,
            "hmac_outer": 1,
            "commitment_opening": 0,
        }
        out = verify_opening(session.commitment, proof, checker, session.verifier_keys)
        assert out.text() == payload[: 64 * cut - 13]


def test_redact_prefix_accepts_and_costs_one_compression_per_hidden_block(rng):
    payload = rand_bytes(rng, 2048)
    session = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    k_enc, k_mac = session.enc_mac(DIRECTION_SERVER)
    for cut in (1, 7, 20):
        checker = RelationChecker(rng)
        proof = redact_affix_cbc(
            session.commitment, checker, 0, payload, k_enc, k_mac, "prefix", cut
        )
        assert checker.counters["sha256_compression"] == cut
        assert checker.counters["aes_block"] == 3
        assert checker.counters["hmac_outer"] == 1
        out = verify_opening(session.commitment, proof, checker, session.verifier_keys)
        assert out.text() == payload[64 * cut - 13 :]


def test_redact_suffix_hides_the_tail_bytes(rng):
    secret = b"ACCT 9981-7365-22 BAL $321,009.55" + bytes(31)
    payload = rand_bytes(rng, 1024) + secret
    session = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    k_enc, k_mac = session.enc_mac(DIRECTION_SERVER)
    proof = redact_affix_cbc(session.commitment, session.checker, 0, payload, k_enc, k_mac, "suffix", 16)
    blob = proof.to_bytes()
    assert secret[:16] not in blob
    out = verify_opening(session.commitment, proof, session.checker, session.verifier_keys)
    assert secret not in out.text()


def test_affix_cut_bounds_rejected(rng):
    payload = bytes(256)
    session = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    k_enc, k_mac = session.enc_mac(DIRECTION_SERVER)
    for side in ("prefix", "suffix"):
        with pytest.raises(ProofError, match="past the record end"):
            redact_affix_cbc(session.commitment, session.checker, 0, payload, k_enc, k_mac, side, 5)
        with pytest.raises(ProofError):
            redact_affix_cbc(session.commitment, session.checker, 0, payload, k_enc, k_mac, side, 0)
    with pytest.raises(ValueError, match="side"):
        redact_affix_cbc(session.commitment, session.checker, 0, payload, k_enc, k_mac, "middle", 1)


def test_suffix_proof_carrying_a_tag_is_rejected(rng):
    """Hiding the suffix hides the MAC; a proof that also discloses a tag
    is malformed and must not be accepted on the strength of its claim."""
    payload = bytes(512)
    session = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    k_enc, k_mac = session.enc_mac(DIRECTION_SERVER)
    proof = redact_affix_cbc(session.commitment, session.checker, 0, payload, k_enc, k_mac, "suffix", 2)
    from dataclasses import replace

    with pytest.raises(OpeningRejected, match="never reveal"):
        verify_opening(
            session.commitment,
            replace(proof, sigma=bytes(32)),
            session.checker,
            session.verifier_keys,
        )


# -- GCM openings ------------------------------------------------------------------


def test_gcm_reveal_one_block_budget(rng):
    payload = rand_bytes(rng, 1024)
    session = GcmSession(rng, [(DIRECTION_SERVER, payload)])
    checker = RelationChecker(rng)
    own, other, blind, salt = session.open_args(DIRECTION_SERVER)
    proof = gcm_reveal_blocks(session.commitment, checker, 0, [5], own, other, blind, salt)
    assert checker.counters == {
        "aes_block": 3,
        "sha256_compression": 0,
        "hmac_outer": 0,
        "commitment_opening": 1,
    }
    out = verify_opening(session.commitment, proof, checker, session.verifier_keys)
    assert out.spans[0].offset == 80
    assert out.spans[0].data == payload[80:96]


def test_gcm_reveal_full_record_is_514_aes(rng):
    payload = rand_bytes(rng, 8192)  # exactly 512 AES blocks
    session = GcmSession(rng, [(DIRECTION_SERVER, payload)])
    checker = RelationChecker(rng)
    own, other, blind, salt = session.open_args(DIRECTION_SERVER)
    proof = gcm_reveal_blocks(
        session.commitment, checker, 0, list(range(512)), own, other, blind, salt
    )
    assert checker.counters["aes_block"] == 514
    assert checker.counters["commitment_opening"] == 1
    out = verify_opening(session.commitment, proof, checker, session.verifier_keys)
    assert out.text() == payload


def test_gcm_reveal_rejects_share_not_matching_commitment(rng):
    payload = rand_bytes(rng, 256)
    session = GcmSession(rng, [(DIRECTION_SERVER, payload)])
    own, other, blind, salt = session.open_args(DIRECTION_SERVER)
    wrong_share = xor_bytes(own, b"\x01" + bytes(15))
    # a cheating prover shifts its share (and compensates in the verifier
    # share so the joined key still decrypts) — the commitment pins it
    proof = gcm_reveal_blocks(
        session.commitment,
        session.checker,
        0,
        [0],
        wrong_share,
        xor_bytes(other, b"\x01" + bytes(15)),
        blind,
        salt,
    )
    with pytest.raises(OpeningRejected):
        verify_opening(session.commitment, proof, session.checker, session.verifier_keys)


def test_gcm_reveal_rejects_tampered_keystream_block(rng):
    payload = rand_bytes(rng, 256)
    session = GcmSession(rng, [(DIRECTION_SERVER, payload)])
    own, other, blind, salt = session.open_args(DIRECTION_SERVER)
    proof = gcm_reveal_blocks(session.commitment, session.checker, 0, [1], own, other, blind, salt)
    from dataclasses import replace

    doctored = list(proof.counter_blocks)
    doctored[2] = xor_bytes(doctored[2], b"\x01" + bytes(15))
    forged = replace(proof, counter_blocks=tuple(doctored))
    with pytest.raises(OpeningRejected):
        verify_opening(session.commitment, forged, session.checker, session.verifier_keys)


def test_gcm_reveal_rejects_out_of_range_blocks(rng):
    payload = rand_bytes(rng, 128)
    session = GcmSession(rng, [(DIRECTION_SERVER, payload)])
    own, other, blind, salt = session.open_args(DIRECTION_SERVER)
    with pytest.raises(ProofError, match="past the record end"):
        gcm_reveal_blocks(session.commitment, session.checker, 0, [8], own, other, blind, salt)


def test_gcm_modes_refuse_cbc_sessions_and_vice_versa(rng):
    payload = bytes(256)
    cbc = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    gcm = GcmSession(rng, [(DIRECTION_SERVER, payload)])
    k_enc, k_mac = cbc.enc_mac(DIRECTION_SERVER)
    with pytest.raises(ProofError, match="GCM"):
        gcm_reveal_blocks(cbc.commitment, cbc.checker, 0, [0], bytes(16), bytes(16), bytes(32), bytes(4))
    with pytest.raises(ProofError, match="CBC"):
        reveal_record_cbc(gcm.commitment, gcm.checker, 0, payload, k_enc, k_mac)


# -- randomized completeness -------------------------------------------------------


def test_every_mode_accepts_across_randomized_sessions():
    """Fifty synthesized sessions, alternating suites, random payloads and
    record mixes; every applicable opening mode must accept."""
    rng = random.Random(0xC0FFEE)
    for trial in range(50):
        payloads = [
            (rng.choice((DIRECTION_CLIENT, DIRECTION_SERVER)), _random_payload(rng, 24))
            for _ in range(rng.randint(1, 3))
        ]
        payloads.append((DIRECTION_SERVER, _random_payload(rng, 24)))
        if trial % 2 == 0:
            session = CbcSession(rng, payloads)
            for direction in (DIRECTION_CLIENT, DIRECTION_SERVER):
                for index, payload in enumerate(session.payloads[direction]):
                    k_enc, k_mac = session.enc_mac(direction)
                    mi_len = 13 + len(payload)
                    proof = reveal_record_cbc(
                        session.commitment, session.checker, index, payload, k_enc, k_mac,
                        direction=direction,
                    )
                    out = verify_opening(
                        session.commitment, proof, session.checker, session.verifier_keys
                    )
                    assert out.text() == payload
                    max_cut = (mi_len - 1) // 64
                    if max_cut >= 1:
                        cut = rng.randint(1, max_cut)
                        side = rng.choice(("prefix", "suffix"))
                        proof = redact_affix_cbc(
                            session.commitment, session.checker, index, payload,
                            k_enc, k_mac, side, cut, direction=direction,
                        )
                        verify_opening(
                            session.commitment, proof, session.checker, session.verifier_keys
                        )
                    if mi_len // 64 >= 2:
                        block = rng.randint(2, mi_len // 64)
                        proof = redact_block_cbc(
                            session.commitment, session.checker, index, payload,
                            k_enc, k_mac, block, direction=direction,
                        )
                        verify_opening(
                            session.commitment, proof, session.checker, session.verifier_keys
                        )
        else:
            session = GcmSession(rng, payloads)
            for direction in (DIRECTION_CLIENT, DIRECTION_SERVER):
                for index, payload in enumerate(session.payloads[direction]):
                    n_blocks = (len(payload) + 15) // 16
                    count = rng.randint(1, n_blocks)
                    blocks = rng.sample(range(n_blocks), count)
                    own, other, blind, salt = session.open_args(direction)
                    proof = gcm_reveal_blocks(
                        session.commitment, session.checker, index, blocks,
                        own, other, blind, salt, direction=direction,
                    )
                    out = verify_opening(
                        session.commitment, proof, session.checker, session.verifier_keys
                    )
                    for span in out.spans:
                        assert span.data == payload[span.offset : span.offset + len(span.data)]


# -- serialization and witness isolation ---------------------------------------------


def test_opening_proof_serialization_round_trips_every_mode(rng):
    payload = rand_bytes(rng, 512)
    cbc = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    k_enc, k_mac = cbc.enc_mac(DIRECTION_SERVER)
    gcm = GcmSession(rng, [(DIRECTION_SERVER, payload)])
    own, other, blind, salt = gcm.open_args(DIRECTION_SERVER)
    proofs = [
        reveal_record_cbc(cbc.commitment, cbc.checker, 0, payload, k_enc, k_mac),
        redact_block_cbc(cbc.commitment, cbc.checker, 0, payload, k_enc, k_mac, 3),
        redact_affix_cbc(cbc.commitment, cbc.checker, 0, payload, k_enc, k_mac, "prefix", 2),
        redact_affix_cbc(cbc.commitment, cbc.checker, 0, payload, k_enc, k_mac, "suffix", 2),
        gcm_reveal_blocks(gcm.commitment, gcm.checker, 0, [0, 7], own, other, blind, salt),
    ]
    for proof in proofs:
        raw = proof.to_bytes()
        assert OpeningProof.from_bytes(raw) == proof
        with pytest.raises(ValueError):
            OpeningProof.from_bytes(raw + b"\x00")


def test_serialized_proofs_never_carry_witness_material(rng):
    payload = rand_bytes(rng, 1024)
    cbc = CbcSession(rng, [(DIRECTION_SERVER, payload)])
    k_enc, k_mac = cbc.enc_mac(DIRECTION_SERVER)
    gcm = GcmSession(rng, [(DIRECTION_SERVER, payload)])
    own, other, blind, salt = gcm.open_args(DIRECTION_SERVER)
    blobs = [
        reveal_record_cbc(cbc.commitment, cbc.checker, 0, payload, k_enc, k_mac).to_bytes(),
        redact_block_cbc(cbc.commitment, cbc.checker, 0, payload, k_enc, k_mac, 4).to_bytes(),
        redact_affix_cbc(cbc.commitment, cbc.checker, 0, payload, k_enc, k_mac, "suffix", 8).to_bytes(),
        gcm_reveal_blocks(gcm.commitment, gcm.checker, 0, [3], own, other, blind, salt).to_bytes(),
    ]
    for blob in blobs:
        assert k_enc not in blob
        assert own not in blob
        assert blind not in blob
    # the redacted regions stay out of their proofs: block 4 hides payload
    # bytes [179, 243), a suffix cut at 8 hides everything from byte 499 on
    assert payload[179:243] not in blobs[1]
    assert payload[499 : 499 + 64] not in blobs[2]
