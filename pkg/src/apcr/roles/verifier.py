"""Verifier: appraises evidence and issues results sealed for the relying party."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Optional, Union

from ..crypto import (
    KemKeyPair,
    SymKey,
    attester_id,
    ct_equal,
    hash_bytes,
    system_rng,
    validate_key_attestation,
)
from ..crypto.symmetric import EntropySource
from ..errors import AttestationError, FormatError, IntegrityError, SignatureError
from ..wire import EAR_PROFILE, EvidenceMsg, decode_challenge, decode_evidence, encode_result
from .common import AbortReason, Observer, VerifierAbort, _quiet
from .policy import Policy, validate_metrics

DEFAULT_VERIFIER_ID = "verifier.lan"


@dataclass(frozen=True)
class TrustedAttester:
    public: bytes
    tee_public: bytes
    kem_public: Optional[bytes] = None

    @property
    def key_id(self) -> bytes:
        return hash_bytes(self.public)


class SeenSet:
    """Atomic check-and-insert set of challenge fingerprints."""

    def __init__(self) -> None:
        self._seen: set[tuple[bytes, bytes]] = set()
        self._lock = threading.Lock()

    def claim(self, c: bytes, ident: bytes) -> bool:
        with self._lock:
            if (c, ident) in self._seen:
                return False
            self._seen.add((c, ident))
            return True

    def __len__(self) -> int:
        return len(self._seen)


class VerifierBase:
    def __init__(self, rp_keys: Union[SymKey, Mapping[str, SymKey]],
                 attesters: Iterable[TrustedAttester], policy: Policy, *,
                 verifier_id: str = DEFAULT_VERIFIER_ID,
                 ear_version: str = EAR_PROFILE,
                 clock: Callable[[], int] = lambda: int(time.time()),
                 observer: Observer = _quiet) -> None:
        self.rp_keys = {"rp": rp_keys} if isinstance(rp_keys, SymKey) else dict(rp_keys)
        self._trust: dict[bytes, TrustedAttester] = {}
        for a in attesters:
            self.trust(a)
        self.policy = policy
        self.verifier_id = verifier_id
        self.ear_version = ear_version
        self.clock = clock
        self.observer = observer
        self.seen = SeenSet()

    def trust(self, attester: TrustedAttester) -> None:
        self._trust[attester.key_id] = attester

    def lookup(self, key_id: bytes, claimed: Optional[bytes], step: int) -> TrustedAttester:
        entry = self._trust.get(bytes(key_id))
        if entry is None or (claimed is not None and not ct_equal(entry.public, claimed)):
            raise VerifierAbort(AbortReason.BAD_SIGNATURE, step)
        return entry

    def open_challenge(self, cha: bytes, decode, step: int) -> tuple[SymKey, bytes, bytes]:
        # the wire carries no RP identifier; find K_V by trial decryption
        for kv in self.rp_keys.values():
            try:
                first, second = decode(cha, kv)
            except (IntegrityError, FormatError):
                continue
            return kv, first, second
        raise VerifierAbort(AbortReason.BAD_CHALLENGE, step)


class VerifierContext(VerifierBase):
    """Pre-shared-key variant, steps (8)-(15)."""

    def __init__(self, kem: KemKeyPair, rp_keys: Union[SymKey, Mapping[str, SymKey]],
                 attesters: Iterable[TrustedAttester], policy: Policy, **kwargs) -> None:
        super().__init__(rp_keys, attesters, policy, **kwargs)
        self.kem = kem

    def process_evidence(self, msg: Union[EvidenceMsg, bytes], claimed: Optional[bytes] = None,
                         rng: EntropySource = system_rng) -> bytes:
        """Return the sealed result ``Res`` or raise :class:`VerifierAbort`."""
        if not isinstance(msg, EvidenceMsg):
            try:
                msg = EvidenceMsg.from_bytes(msg)
            except FormatError:
                raise VerifierAbort(AbortReason.BAD_SIGNATURE, 8) from None
        trusted = self.lookup(msg.key_id, claimed, 8)
        try:
            ak, metrics, cha = decode_evidence(msg, self.kem, trusted.public)
        except SignatureError:
            raise VerifierAbort(AbortReason.BAD_SIGNATURE, 8) from None
        except (IntegrityError, FormatError):
            raise VerifierAbort(AbortReason.BAD_ENVELOPE, 9) from None
        kv, c, id_cha = self.open_challenge(cha, decode_challenge, 10)
        if not self.seen.claim(c, id_cha):
            raise VerifierAbort(AbortReason.DUPLICATE_CHALLENGE, 10)
        try:
            h = validate_key_attestation(ak, trusted.tee_public)
        except AttestationError:
            raise VerifierAbort(AbortReason.BAD_KEY_ATTESTATION, 11) from None
        id_a = attester_id(h, trusted.public)
        if not ct_equal(id_a, id_cha):
            raise VerifierAbort(AbortReason.ID_BINDING_MISMATCH, 13)
        result = validate_metrics(self.policy, metrics, attester_id=id_a, issued_at=self.clock(),
                                  verifier_id=self.verifier_id, ear_version=self.ear_version)
        self.observer("verifierAccepts", pk=trusted.public, metrics=metrics, id=id_a, c=c, result=result)
        return encode_result(result, c, id_cha, kv, rng)
