"""Frame tagging for the prover↔verifier control channel.

Everything the two oracle parties exchange (outside the lockstep share-
conversion subprotocol, whose messages are untagged) is a one-byte type
followed by the body. Type ranges: 0x0x record-layer assists, 0x1x
handshake, 0x2x proxy relay, 0x3x commitment/proof phase, 0x7F abort.
"""

from __future__ import annotations

# record-layer assists (served by VerifierRecordLayer)
FRAME_HMAC_ASSIST = 0x01
FRAME_GCM_TAG_ASSIST = 0x02
FRAME_GCM_TAG_REPLY = 0x03
FRAME_GCM_KEYSTREAM = 0x04

# three-party handshake
FRAME_HS_PARAMS = 0x10
FRAME_HS_POINT_REVEAL = 0x11
FRAME_HS_CLIENT_FINISHED_HASH = 0x12
FRAME_HS_SERVER_FINISHED_HASH = 0x13

# proxy relay (prover-bound server traffic through the verifier)
FRAME_RELAY_UP = 0x20
FRAME_RELAY_DOWN = 0x21

# commitment / release / proof phase
FRAME_COMMIT = 0x30
FRAME_COMMIT_ACK = 0x31
FRAME_SHARE_RELEASE_REQUEST = 0x32
FRAME_SHARE_RELEASE = 0x33
FRAME_CLAIM = 0x34
FRAME_CLAIM_VERDICT = 0x35
FRAME_CLIENT_KEYS_REQUEST = 0x36
FRAME_CLIENT_KEYS_RELEASE = 0x37
FRAME_SESSION_DONE = 0x38
FRAME_SESSION_PARAMS = 0x39
FRAME_KEYSHARE_COMMIT = 0x3A
FRAME_KEYSHARE_REVEAL = 0x3B

FRAME_ABORT = 0x7F


class FrameError(Exception):
    pass


def build_frame(ftype: int, body: bytes = b"") -> bytes:
    if not 0 <= ftype <= 0xFF:
        raise FrameError("frame type out of range")
    return bytes([ftype]) + body


def split_frame(raw: bytes) -> tuple[int, bytes]:
    if not raw:
        raise FrameError("empty frame")
    return raw[0], raw[1:]
