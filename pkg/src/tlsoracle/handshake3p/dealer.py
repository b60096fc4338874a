"""Trusted-dealer functionality for the handshake key schedule.

Given additive shares of the premaster x-coordinate (one from each party),
the dealer reconstructs the premaster internally, runs the TLS 1.2 schedule,
and hands each party a masked view of the key block: fresh XOR masks for the
shared keys, full AES keys to the prover only where the suite demands it.
It also evaluates the two Finished PRFs from XOR shares of the master
secret, so neither party ever holds the master secret itself.

Both parties submit to every operation; the dealer cross-checks all public
inputs (randoms, suite, transcript hashes) and aborts on any disagreement.
"""

from __future__ import annotations

from dataclasses import dataclass

from ..recordlayer import CipherSuite
from ..rendezvous import PROVER, VERIFIER, DealerAbort, RendezvousDealer
from ..rng import Rng, rand_bytes
from ..shares.ec import COORD_BYTES, P as FIELD_PRIME
from . import prf
from .keymaterial import KeyBlock, SessionKeyMaterial, xor_bytes

OP_DERIVE = "handshake/derive-session-shares"
OP_CLIENT_FINISHED = "handshake/finished-client"
OP_SERVER_FINISHED = "handshake/finished-server"


@dataclass(frozen=True)
class DeriveRequest:
    role: str
    z_share: int
    client_random: bytes
    server_random: bytes
    suite: CipherSuite


class HandshakeDealer(RendezvousDealer):
    def __init__(self, rng: Rng, timeout: float = 60.0):
        super().__init__(timeout=timeout)
        self._rng = rng

    # -- key derivation ----------------------------------------------------

    def derive_session_shares(
        self,
        role: str,
        z_share: int,
        client_random: bytes,
        server_random: bytes,
        suite: CipherSuite,
    ) -> SessionKeyMaterial:
        request = DeriveRequest(
            role=role,
            z_share=z_share,
            client_random=client_random,
            server_random=server_random,
            suite=suite,
        )
        return self.paired_call(OP_DERIVE, role, request, self._compute_derive)

    def _compute_derive(self, inputs: dict) -> dict:
        p: DeriveRequest = inputs[PROVER]
        v: DeriveRequest = inputs[VERIFIER]
        for req in (p, v):
            if not 0 <= req.z_share < FIELD_PRIME:
                raise DealerAbort("premaster share out of field range")
            if len(req.client_random) != 32 or len(req.server_random) != 32:
                raise DealerAbort("randoms must be 32 bytes")
        if (p.client_random, p.server_random, p.suite) != (
            v.client_random,
            v.server_random,
            v.suite,
        ):
            raise DealerAbort("parties disagree on handshake parameters")
        premaster = ((p.z_share + v.z_share) % FIELD_PRIME).to_bytes(COORD_BYTES, "big")
        master = prf.master_secret(premaster, p.client_random, p.server_random)
        block = KeyBlock.derive(p.suite, master, p.client_random, p.server_random)

        master_mask = rand_bytes(self._rng, prf.MASTER_SECRET_LEN)
        common = {"suite": p.suite}
        if p.suite == CipherSuite.ECDHE_RSA_AES128_CBC_SHA256:
            client_mac_mask = rand_bytes(self._rng, len(block.client_mac))
            server_mac_mask = rand_bytes(self._rng, len(block.server_mac))
            prover_km = SessionKeyMaterial(
                role=PROVER,
                master_share=master_mask,
                client_enc_key=block.client_key,
                server_enc_key=block.server_key,
                client_mac_share=client_mac_mask,
                server_mac_share=server_mac_mask,
                **common,
            )
            verifier_km = SessionKeyMaterial(
                role=VERIFIER,
                master_share=xor_bytes(master_mask, master),
                client_mac_share=xor_bytes(client_mac_mask, block.client_mac),
                server_mac_share=xor_bytes(server_mac_mask, block.server_mac),
                **common,
            )
        else:
            client_key_mask = rand_bytes(self._rng, len(block.client_key))
            server_key_mask = rand_bytes(self._rng, len(block.server_key))
            prover_km = SessionKeyMaterial(
                role=PROVER,
                master_share=master_mask,
                client_key_share=client_key_mask,
                server_key_share=server_key_mask,
                client_salt=block.client_iv,
                server_salt=block.server_iv,
                **common,
            )
            verifier_km = SessionKeyMaterial(
                role=VERIFIER,
                master_share=xor_bytes(master_mask, master),
                client_key_share=xor_bytes(client_key_mask, block.client_key),
                server_key_share=xor_bytes(server_key_mask, block.server_key),
                client_salt=block.client_iv,
                server_salt=block.server_iv,
                **common,
            )
        return {PROVER: prover_km, VERIFIER: verifier_km}

    # -- finished messages ---------------------------------------------------

    def client_finished(
        self, role: str, master_share: bytes, transcript_hash: bytes
    ) -> bytes | None:
        """Returns the 12-byte verify_data to the prover, None to the verifier."""
        payload = {"master_share": master_share, "hash": transcript_hash}
        return self.paired_call(OP_CLIENT_FINISHED, role, payload, self._compute_client_finished)

    def _compute_client_finished(self, inputs: dict) -> dict:
        master, transcript_hash = self._combine_finished_inputs(inputs)
        verify_data = prf.finished_verify_data(master, prf.LABEL_CLIENT_FINISHED, transcript_hash)
        return {PROVER: verify_data, VERIFIER: None}

    def server_finished_check(
        self,
        role: str,
        master_share: bytes,
        transcript_hash: bytes,
        candidate: bytes | None = None,
    ) -> bool:
        """Both parties learn whether the server's verify_data is correct.

        The prover supplies the candidate it decrypted from the server's
        Finished record; the verifier has no candidate of its own.
        """
        payload = {"master_share": master_share, "hash": transcript_hash}
        if role == PROVER:
            payload["candidate"] = candidate
        result = self.paired_call(OP_SERVER_FINISHED, role, payload, self._compute_server_finished)
        assert isinstance(result, bool)
        return result

    def _compute_server_finished(self, inputs: dict) -> dict:
        master, transcript_hash = self._combine_finished_inputs(inputs)
        candidate = inputs[PROVER].get("candidate")
        if not isinstance(candidate, bytes) or len(candidate) != prf.VERIFY_DATA_LEN:
            raise DealerAbort("prover must supply a 12-byte candidate")
        expected = prf.finished_verify_data(master, prf.LABEL_SERVER_FINISHED, transcript_hash)
        ok = candidate == expected
        return {PROVER: ok, VERIFIER: ok}

    @staticmethod
    def _combine_finished_inputs(inputs: dict) -> tuple[bytes, bytes]:
        p, v = inputs[PROVER], inputs[VERIFIER]
        for side in (p, v):
            if len(side["master_share"]) != prf.MASTER_SECRET_LEN:
                raise DealerAbort("master share must be 48 bytes")
            if len(side["hash"]) != 32:
                raise DealerAbort("transcript hash must be 32 bytes")
        if p["hash"] != v["hash"]:
            raise DealerAbort("parties disagree on the transcript hash")
        master = xor_bytes(p["master_share"], v["master_share"])
        return master, p["hash"]
