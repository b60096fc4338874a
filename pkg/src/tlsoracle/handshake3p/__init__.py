"""Three-party TLS 1.2 handshake: split key derivation between prover and
verifier, with the server running unmodified TLS."""

from .dealer import HandshakeDealer
from .keymaterial import KeyBlock, SessionKeyMaterial, xor_bytes
from .protocol import (
    HandshakeAbort,
    HandshakeConfig,
    HandshakeParams,
    ProverHandshakeResult,
    VerifierHandshakeResult,
    run_prover_handshake,
    run_verifier_handshake,
)

__all__ = [
    "HandshakeAbort",
    "HandshakeConfig",
    "HandshakeDealer",
    "HandshakeParams",
    "KeyBlock",
    "ProverHandshakeResult",
    "SessionKeyMaterial",
    "VerifierHandshakeResult",
    "run_prover_handshake",
    "run_verifier_handshake",
    "xor_bytes",
]
