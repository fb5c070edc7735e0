from .attester import AttesterSession, AwaitingVerdict, Done, MetricsProvider
from .common import (
    AbortReason,
    Accepted,
    AwaitingResult,
    Decision,
    Idle,
    Rejected,
    RejectReason,
    RpRejected,
    Verdict,
    VerifierAbort,
    validate_attestation_result,
)
from .policy import Policy, appraise, validate_metrics
from .rp import RpSession
from .verifier import DEFAULT_VERIFIER_ID, SeenSet, TrustedAttester, VerifierContext

__all__ = [name for name in dir() if not name.startswith("_")]
