"""Variant without a pre-shared attester key.

The verifier doubles as key distribution centre: it generates the session
key K_S and hands it to the relying party inside Res_RP (sealed under K_V)
and to the attester inside Res_A (hybrid-encrypted to PK_A').

Neither side confirms possession of K_S to the other; the first application
message under K_S is the only (implicit) confirmation.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable, Optional, Union

from .crypto import (
    KemKeyPair,
    SigKeyPair,
    SymKey,
    ct_equal,
    hash_bytes,
    rand_nonce,
    system_rng,
)
from .crypto.symmetric import EntropySource
from .errors import FormatError, IntegrityError, NotIdle, SignatureError, StateError
from .roles.attester import MetricsProvider
from .roles.common import (
    TERMINAL,
    AbortReason,
    Accepted,
    AwaitingResult,
    Idle,
    Observer,
    Rejected,
    RejectReason,
    RpRejected,
    Verdict,
    VerifierAbort,
    _quiet,
    validate_attestation_result,
)
from .roles.policy import validate_metrics
from .roles.rp import DEFAULT_TIMEOUT
from .roles.verifier import VerifierBase
from .wire import (
    EvidenceMsg,
    KdcVerdictMsg,
    decode_kdc_challenge,
    decode_kdc_evidence,
    decode_kdc_result_attester,
    decode_kdc_result_rp,
    encode_kdc_challenge,
    encode_kdc_evidence,
    encode_kdc_result_attester,
    encode_kdc_result_rp,
)


class KdcRpSession:
    def __init__(self, kv: SymKey, *, timeout: Optional[float] = DEFAULT_TIMEOUT,
                 clock: Callable[[], float] = time.monotonic, observer: Observer = _quiet) -> None:
        self.kv = kv
        self.timeout = timeout
        self.clock = clock
        self.observer = observer
        self.state: object = Idle()

    def create_challenge(self, h: bytes, rng: EntropySource = system_rng) -> bytes:
        """Steps (1)-(2): seal (c, h) under K_V; 71 bytes on the wire."""
        if not isinstance(self.state, Idle):
            raise NotIdle("a protocol run is already in flight")
        c = rand_nonce(rng)
        cha = encode_kdc_challenge(c, h, self.kv, rng)
        deadline = None if self.timeout is None else self.clock() + self.timeout
        self.state = AwaitingResult(c, deadline, bytes(h))
        self.observer("relyingPartyBegins", c=c, id=bytes(h), cha=cha)
        return cha

    def _reject(self, reason: RejectReason) -> RpRejected:
        self.state = Rejected(reason)
        return RpRejected(reason)

    def expired(self) -> bool:
        state = self.state
        return (isinstance(state, AwaitingResult) and state.deadline is not None
                and self.clock() > state.deadline)

    def poll(self) -> None:
        if self.expired():
            self._reject(RejectReason.TIMEOUT)

    def finish(self, res_rp: bytes) -> Verdict:
        """Steps (17)-(19)."""
        state = self.state
        if not isinstance(state, AwaitingResult):
            raise StateError("no protocol run awaiting a result")
        if self.expired():
            raise self._reject(RejectReason.TIMEOUT)
        try:
            result, c_res, h_res, ks = decode_kdc_result_rp(res_rp, self.kv)
        except IntegrityError:
            raise self._reject(RejectReason.TAMPER_OR_WRONG_VERIFIER) from None
        except FormatError:
            raise self._reject(RejectReason.MALFORMED) from None
        if not ct_equal(c_res, state.c):
            raise self._reject(RejectReason.REPLAY)
        if not ct_equal(h_res, state.h):
            raise self._reject(RejectReason.HASH_MISMATCH)
        verdict = Verdict(validate_attestation_result(result), result, ks)
        self.state = Accepted(verdict)
        self.observer("relyingPartyAccepts", c=c_res, id=h_res, result=result, ks=ks)
        return verdict

    @property
    def done(self) -> bool:
        return isinstance(self.state, TERMINAL)

    def reset(self) -> None:
        if isinstance(self.state, AwaitingResult):
            raise StateError("cannot reset with a run in flight")
        self.state = Idle()


@dataclass(frozen=True)
class SentHash:
    h: bytes


@dataclass(frozen=True)
class KdcAwaitingVerdict:
    cha: bytes


@dataclass(frozen=True)
class KdcDone:
    session_key: SymKey


class KdcAttesterSession:
    def __init__(self, signer: SigKeyPair, kem: KemKeyPair, verifier_public: bytes, verifier_kem: bytes, *,
                 observer: Observer = _quiet) -> None:
        self.signer = signer
        self.kem = kem
        self.verifier_public = verifier_public
        self.verifier_kem = verifier_kem
        self.observer = observer
        self.state: object = Idle()

    @property
    def h(self) -> bytes:
        return hash_bytes(self.signer.public)

    def announce(self) -> bytes:
        """Message (a): hash of PK_A."""
        if not isinstance(self.state, Idle):
            raise StateError("attester is not idle")
        h = self.h
        self.state = SentHash(h)
        return h

    def handle_challenge(self, cha: bytes, collect: MetricsProvider,
                         rng: EntropySource = system_rng) -> EvidenceMsg:
        """Steps (3)-(5)."""
        if not isinstance(self.state, SentHash):
            raise StateError("announce first")
        metrics = collect()
        msg = encode_kdc_evidence(metrics, self.state.h, cha, self.verifier_kem, self.signer, rng)
        self.observer("attesterBegins", pk=self.signer.public, h=self.state.h, metrics=metrics, cha=bytes(cha))
        self.state = KdcAwaitingVerdict(bytes(cha))
        return msg

    def unwrap(self, msg: Union[KdcVerdictMsg, bytes]) -> bytes:
        """Steps (15)-(16): check the verifier signature, then decrypt Res_A.

        Returns Res_RP for forwarding. Raises SignatureError / IntegrityError /
        FormatError and stays in the waiting state on failure.
        """
        if not isinstance(self.state, KdcAwaitingVerdict):
            raise StateError("no verdict expected")
        if not isinstance(msg, KdcVerdictMsg):
            msg = KdcVerdictMsg.from_bytes(msg)
        res_rp, ks = decode_kdc_result_attester(msg, self.kem, self.verifier_public)
        self.state = KdcDone(ks)
        return res_rp

    @property
    def session_key(self) -> Optional[SymKey]:
        return self.state.session_key if isinstance(self.state, KdcDone) else None

    def reset(self) -> None:
        self.state = Idle()


class KdcVerifierContext(VerifierBase):
    """Steps (6)-(14) of the key-distribution variant."""

    def __init__(self, signer: SigKeyPair, kem: KemKeyPair, rp_keys, attesters, policy, **kwargs) -> None:
        super().__init__(rp_keys, attesters, policy, **kwargs)
        self.signer = signer
        self.kem = kem

    def process_evidence(self, msg: Union[EvidenceMsg, bytes], claimed: Optional[bytes] = None,
                         rng: EntropySource = system_rng) -> KdcVerdictMsg:
        if not isinstance(msg, EvidenceMsg):
            try:
                msg = EvidenceMsg.from_bytes(msg)
            except FormatError:
                raise VerifierAbort(AbortReason.BAD_SIGNATURE, 6) from None
        trusted = self.lookup(msg.key_id, claimed, 6)
        try:
            metrics, h_a, cha = decode_kdc_evidence(msg, self.kem, trusted.public)
        except SignatureError:
            raise VerifierAbort(AbortReason.BAD_SIGNATURE, 6) from None
        except (IntegrityError, FormatError):
            raise VerifierAbort(AbortReason.BAD_ENVELOPE, 7) from None
        kv, c, h_rp = self.open_challenge(cha, decode_kdc_challenge, 8)
        if not self.seen.claim(c, h_rp):
            raise VerifierAbort(AbortReason.DUPLICATE_CHALLENGE, 8)
        if not (ct_equal(h_rp, h_a) and ct_equal(h_a, hash_bytes(trusted.public))):
            raise VerifierAbort(AbortReason.HASH_BINDING_MISMATCH, 9)
        if trusted.kem_public is None:
            raise VerifierAbort(AbortReason.BAD_ENVELOPE, 13)
        result = validate_metrics(self.policy, metrics, attester_id=h_a[:16], issued_at=self.clock(),
                                  verifier_id=self.verifier_id, ear_version=self.ear_version)
        ks = SymKey.generate(rng)
        res_rp = encode_kdc_result_rp(result, c, h_rp, ks, kv, rng)
        self.observer("verifierAccepts", pk=trusted.public, metrics=metrics, id=h_a, c=c, result=result, ks=ks)
        return encode_kdc_result_attester(res_rp, ks, trusted.kem_public, self.signer, rng)
