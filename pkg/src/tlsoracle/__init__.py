"""Decentralized TLS 1.2 oracle.

A prover and a verifier jointly act as one TLS 1.2 client toward a server:
session keys come out of a three-party handshake secret-shared between the
two, the query runs under two-party record protocols, the ciphertext
transcript is committed before the verifier releases its key share, and
substrings of the response are then revealed or redacted with proofs that
they sit at a verifier-approved position in the response's parse tree.

Subpackage map:

- ``shares``        field/curve arithmetic, additively homomorphic encryption,
                    multiplicative-to-additive conversion, EC-point-to-field
                    share conversion
- ``handshake3p``   the three-party ECDHE handshake and dealer key derivation
- ``recordlayer``   bit-exact TLS 1.2 record cryptography (CBC-HMAC, AES-GCM)
- ``twopc_records`` two-party HMAC and GCM record protocols
- ``commitproofs``  transcript commitments, relation checker, selective opening
- ``kvparse``       key-value grammar engine and context-integrity checks
- ``session``       end-to-end session orchestration (mpc / proxy / client-keys)
- ``testbed``       mock TLS server, network fabric, tamper harness, CLI
"""

__version__ = "0.1.0"
