"""EAR-style attestation result object and its CBOR encoding."""

from __future__ import annotations

import enum
from dataclasses import dataclass

from ..crypto import ID_LEN
from ..errors import FormatError
from . import cbor

EAR_PROFILE = "tag:github.com,2023:veraison/ear"

# claim names on the wire
_PROFILE = "eat_profile"
_IAT = "iat"
_VERIFIER = "ear.verifier-id"
_STATUS = "ear.status"
_ATTESTER = "ueid"
_FIELDS = {_PROFILE, _IAT, _VERIFIER, _STATUS, _ATTESTER}


class EarStatus(enum.Enum):
    """Trustworthiness tiers, encoded with the EAR tier integers."""

    AFFIRMING = 2
    WARNING = 32
    CONTRAINDICATED = 96


@dataclass(frozen=True)
class EarResult:
    ear_version: str
    issued_at: int
    verifier_id: str
    attester_id: bytes
    verdict: EarStatus

    def __post_init__(self) -> None:
        if len(self.attester_id) != ID_LEN:
            raise ValueError("attester_id must be 16 bytes")
        if not isinstance(self.verdict, EarStatus):
            raise ValueError(f"unknown verdict {self.verdict!r}")


def encode_ear(r: EarResult) -> bytes:
    return cbor.dumps({
        _PROFILE: r.ear_version,
        _IAT: r.issued_at,
        _VERIFIER: r.verifier_id,
        _STATUS: r.verdict.value,
        _ATTESTER: bytes(r.attester_id),
    })


def decode_ear(data: bytes) -> EarResult:
    obj = cbor.loads(data)
    if not isinstance(obj, dict):
        raise FormatError("EAR must be a CBOR map")
    if set(obj) != _FIELDS:
        raise FormatError(f"EAR claims mismatch: {sorted(map(str, obj))}")
    try:
        status = EarStatus(obj[_STATUS])
    except ValueError as exc:
        raise FormatError(f"unknown EAR status {obj[_STATUS]!r}") from exc
    expected = {_PROFILE: str, _IAT: int, _VERIFIER: str, _ATTESTER: bytes}
    for name, kind in expected.items():
        if not isinstance(obj[name], kind):
            raise FormatError(f"EAR claim {name} has wrong type")
    if len(obj[_ATTESTER]) != ID_LEN:
        raise FormatError("EAR attester id must be 16 bytes")
    return EarResult(obj[_PROFILE], obj[_IAT], obj[_VERIFIER], obj[_ATTESTER], status)
