"""Software stand-in for the attester's TEE key-attestation facility.

The simulator holds its own Ed25519 identity and signs a domain-separated
statement over the digest of the key it vouches for. Verifiers trust the
simulator's public key directly.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

from ..errors import AttestationError, FormatError, SignatureError
from .asymmetric import SIGNATURE_LEN, SigKeyPair, checksig, sign
from .symmetric import DIGEST_LEN, EntropySource, system_rng
from .trace import note

_STATEMENT = b"apcr/key-attestation/v1"


@dataclass(frozen=True)
class KeyAttestation:
    attested_digest: bytes
    envelope: bytes

    def to_bytes(self) -> bytes:
        return self.attested_digest + self.envelope

    @classmethod
    def from_bytes(cls, data: bytes) -> "KeyAttestation":
        if len(data) != DIGEST_LEN + SIGNATURE_LEN:
            raise FormatError("key attestation must be 96 bytes")
        return cls(bytes(data[:DIGEST_LEN]), bytes(data[DIGEST_LEN:]))


class SoftwareTee:
    def __init__(self, identity: SigKeyPair | None = None, rng: EntropySource = system_rng) -> None:
        self._identity = identity or SigKeyPair.generate(rng)
        self._lock = threading.Lock()
        self.available = True

    @property
    def public(self) -> bytes:
        return self._identity.public

    def attest_key(self, h: bytes) -> KeyAttestation:
        if len(h) != DIGEST_LEN:
            raise ValueError("attestKey expects a 32-byte digest")
        with self._lock:
            if not self.available:
                raise AttestationError("TEE unavailable")
            note("attestKey")
            return KeyAttestation(bytes(h), sign(_STATEMENT + h, self._identity))


def validate_key_attestation(ak: KeyAttestation, tee_public: bytes) -> bytes:
    """Return the digest the TEE vouched for, or raise AttestationError."""
    note("validateKeyAttestation")
    if len(ak.attested_digest) != DIGEST_LEN:
        raise AttestationError("bad attested digest length")
    try:
        checksig(ak.envelope, _STATEMENT + ak.attested_digest, tee_public)
    except SignatureError as exc:
        raise AttestationError("key attestation envelope does not verify") from exc
    return ak.attested_digest
