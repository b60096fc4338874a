"""Self-signed server identities for the local testbed.

One RSA-2048 key plus a self-signed certificate (CA:TRUE, SAN localhost)
that doubles as its own pinned trust root. Clients pin the DER; the external
TLS stack used in interop tests loads the PEM into its trust store.
"""

from __future__ import annotations

import datetime
from dataclasses import dataclass

from cryptography import x509
from cryptography.hazmat.primitives import hashes, serialization
from cryptography.hazmat.primitives.asymmetric import padding, rsa
from cryptography.x509.oid import NameOID

DEFAULT_HOSTNAME = "localhost"
_KEY_BITS = 2048


@dataclass(frozen=True)
class ServerIdentity:
    certificate_der: bytes
    private_key: rsa.RSAPrivateKey
    hostname: str

    @property
    def certificate_pem(self) -> bytes:
        return x509.load_der_x509_certificate(self.certificate_der).public_bytes(
            serialization.Encoding.PEM
        )

    @property
    def private_key_pem(self) -> bytes:
        return self.private_key.private_bytes(
            serialization.Encoding.PEM,
            serialization.PrivateFormat.PKCS8,
            serialization.NoEncryption(),
        )

    def sign_key_exchange(self, signed_content: bytes) -> bytes:
        """RSA-PKCS1-SHA256 over client_random ∥ server_random ∥ params."""
        return self.private_key.sign(signed_content, padding.PKCS1v15(), hashes.SHA256())


def generate_server_identity(hostname: str = DEFAULT_HOSTNAME) -> ServerIdentity:
    key = rsa.generate_private_key(public_exponent=65537, key_size=_KEY_BITS)
    name = x509.Name(
        [
            x509.NameAttribute(NameOID.COMMON_NAME, hostname),
            x509.NameAttribute(NameOID.ORGANIZATION_NAME, "tlsoracle testbed"),
        ]
    )
    now = datetime.datetime.now(datetime.timezone.utc)
    cert = (
        x509.CertificateBuilder()
        .subject_name(name)
        .issuer_name(name)
        .public_key(key.public_key())
        .serial_number(x509.random_serial_number())
        .not_valid_before(now - datetime.timedelta(hours=1))
        .not_valid_after(now + datetime.timedelta(days=7))
        .add_extension(x509.BasicConstraints(ca=True, path_length=None), critical=True)
        .add_extension(
            x509.SubjectAlternativeName([x509.DNSName(hostname)]), critical=False
        )
        .sign(key, hashes.SHA256())
    )
    return ServerIdentity(
        certificate_der=cert.public_bytes(serialization.Encoding.DER),
        private_key=key,
        hostname=hostname,
    )


def verify_pinned_chain(chain_der: list[bytes], pinned_root_der: bytes, hostname: str) -> None:
    """Check the presented chain against the pinned root.

    Accepts either the pinned certificate itself or a leaf directly issued
    by it; enforces the SAN and validity window. Raises ValueError on any
    failure.
    """
    if not chain_der:
        raise ValueError("empty certificate chain")
    leaf = x509.load_der_x509_certificate(chain_der[0])
    root = x509.load_der_x509_certificate(pinned_root_der)
    if chain_der[0] != pinned_root_der:
        root_key = root.public_key()
        if not isinstance(root_key, rsa.RSAPublicKey):
            raise ValueError("pinned root must carry an RSA key")
        try:
            root_key.verify(
                leaf.signature,
                leaf.tbs_certificate_bytes,
                padding.PKCS1v15(),
                leaf.signature_hash_algorithm,  # type: ignore[arg-type]
            )
        except Exception as exc:
            raise ValueError("leaf not issued by the pinned root") from exc
    now = datetime.datetime.now(datetime.timezone.utc)
    if not leaf.not_valid_before_utc <= now <= leaf.not_valid_after_utc:
        raise ValueError("certificate outside its validity window")
    try:
        san = leaf.extensions.get_extension_for_class(x509.SubjectAlternativeName)
        names = san.value.get_values_for_type(x509.DNSName)
    except x509.ExtensionNotFound:
        names = []
    if hostname not in names:
        raise ValueError(f"hostname {hostname!r} not in certificate SAN {names}")


def verify_key_exchange_signature(
    leaf_der: bytes, signed_content: bytes, signature: bytes
) -> None:
    """RSA-PKCS1-SHA256 verification with the leaf's public key; raises
    ValueError on failure."""
    leaf = x509.load_der_x509_certificate(leaf_der)
    public_key = leaf.public_key()
    if not isinstance(public_key, rsa.RSAPublicKey):
        raise ValueError("server certificate must carry an RSA key")
    try:
        public_key.verify(signature, signed_content, padding.PKCS1v15(), hashes.SHA256())
    except Exception as exc:
        raise ValueError("key-exchange signature invalid") from exc
