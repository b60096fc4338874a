"""Self-contained test bed: throwaway certificates, a sans-io TLS 1.2 mock
server, tamper scripting, and the command-line demo."""

from .certs import ServerIdentity, generate_server_identity
from .mockserver import MockServerConfig, MockTlsServer, json_price_route

__all__ = [
    "MockServerConfig",
    "MockTlsServer",
    "ServerIdentity",
    "generate_server_identity",
    "json_price_route",
]
