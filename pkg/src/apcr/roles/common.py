from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Any, Callable, Optional

from ..crypto import SymKey
from ..errors import ApcrError
from ..wire import EarResult, EarStatus

Observer = Callable[..., None]


def _quiet(event: str, **params: Any) -> None:
    pass


class Decision(enum.Enum):
    TRUST = "trust"
    NO_TRUST = "no-trust"


class RejectReason(enum.Enum):
    TAMPER_OR_WRONG_VERIFIER = "tamper-or-wrong-verifier"
    REPLAY = "replay"
    WRONG_ATTESTER = "wrong-attester"
    HASH_MISMATCH = "hash-mismatch"
    MALFORMED = "malformed"
    TIMEOUT = "timeout"


@dataclass(frozen=True)
class Verdict:
    decision: Decision
    result: EarResult
    session_key: Optional[SymKey] = None


def validate_attestation_result(result: EarResult) -> Decision:
    """Relying-party trust rule: only an affirming verdict earns trust."""
    return Decision.TRUST if result.verdict is EarStatus.AFFIRMING else Decision.NO_TRUST


class RpRejected(ApcrError):
    def __init__(self, reason: RejectReason) -> None:
        super().__init__(reason.value)
        self.reason = reason


class AbortReason(enum.Enum):
    BAD_SIGNATURE = "bad-signature"
    BAD_ENVELOPE = "bad-envelope"
    BAD_CHALLENGE = "bad-challenge"
    DUPLICATE_CHALLENGE = "duplicate-challenge"
    BAD_KEY_ATTESTATION = "bad-key-attestation"
    ID_BINDING_MISMATCH = "id-binding-mismatch"
    HASH_BINDING_MISMATCH = "hash-binding-mismatch"


class VerifierAbort(ApcrError):
    def __init__(self, reason: AbortReason, step: int) -> None:
        super().__init__(f"step ({step}): {reason.value}")
        self.reason = reason
        self.step = step


# session states -------------------------------------------------------------

@dataclass(frozen=True)
class Idle:
    pass


@dataclass(frozen=True)
class AwaitingResult:
    c: bytes
    deadline: Optional[float] = None
    h: Optional[bytes] = None


@dataclass(frozen=True)
class Accepted:
    verdict: Verdict


@dataclass(frozen=True)
class Rejected:
    reason: RejectReason


TERMINAL = (Accepted, Rejected)
