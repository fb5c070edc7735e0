"""Transport framing: 1-byte message type, 2-byte big-endian length, payload."""

from __future__ import annotations

import enum
import struct
from dataclasses import dataclass

from ..errors import FormatError

MAX_FRAME = 1024
HEADER_LEN = 3


class MsgType(enum.IntEnum):
    CHALLENGE = 0xA1
    EVIDENCE = 0xA2
    RESULT_TO_ATTESTER = 0xA3
    RESULT_TO_RP = 0xA4
    KDC_HASH = 0xB0
    KDC_CHALLENGE = 0xB1
    KDC_EVIDENCE = 0xB2
    KDC_RESULT_TO_ATTESTER = 0xB3
    KDC_RESULT_TO_RP = 0xB4
    KEY_REQUEST = 0xC0
    KEY_MATERIAL = 0xC1


# protocol-letter names used by adversary scripts, per variant
LETTERS = {
    "lpm": {
        "a": MsgType.CHALLENGE,
        "b": MsgType.EVIDENCE,
        "c": MsgType.RESULT_TO_ATTESTER,
        "d": MsgType.RESULT_TO_RP,
    },
    "kdc": {
        "a": MsgType.KDC_HASH,
        "b": MsgType.KDC_CHALLENGE,
        "c": MsgType.KDC_EVIDENCE,
        "d": MsgType.KDC_RESULT_TO_ATTESTER,
        "e": MsgType.KDC_RESULT_TO_RP,
    },
}


@dataclass(frozen=True)
class Frame:
    type: MsgType
    payload: bytes

    def to_bytes(self) -> bytes:
        if HEADER_LEN + len(self.payload) > MAX_FRAME:
            raise FormatError(f"frame exceeds {MAX_FRAME} bytes")
        return struct.pack(">BH", self.type, len(self.payload)) + self.payload

    @classmethod
    def from_bytes(cls, data: bytes) -> "Frame":
        if len(data) < HEADER_LEN:
            raise FormatError("frame shorter than header")
        if len(data) > MAX_FRAME:
            raise FormatError(f"frame exceeds {MAX_FRAME} bytes")
        kind, length = struct.unpack(">BH", data[:HEADER_LEN])
        if length != len(data) - HEADER_LEN:
            raise FormatError(f"declared length {length} != payload length {len(data) - HEADER_LEN}")
        try:
            msg_type = MsgType(kind)
        except ValueError as exc:
            raise FormatError(f"unknown message type 0x{kind:02x}") from exc
        return cls(msg_type, bytes(data[HEADER_LEN:]))


def frame(msg_type: MsgType, payload: bytes) -> bytes:
    return Frame(MsgType(msg_type), bytes(payload)).to_bytes()


def unframe(data: bytes) -> Frame:
    return Frame.from_bytes(data)
