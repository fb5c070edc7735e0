"""Attester state machine: turns an opaque challenge into signed evidence and
relays the verifier's result untouched."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

from ..crypto import SigKeyPair, SoftwareTee, SymKey, hash_bytes, system_rng
from ..crypto.symmetric import EntropySource
from ..errors import StateError
from ..wire import EvidenceMsg, Metrics, encode_evidence
from .common import Idle, Observer, _quiet

MetricsProvider = Callable[[], Metrics]


@dataclass(frozen=True)
class AwaitingVerdict:
    cha: bytes


@dataclass(frozen=True)
class Done:
    pass


class AttesterSession:
    def __init__(self, ka: SymKey, signer: SigKeyPair, verifier_kem: bytes, tee: SoftwareTee, *,
                 observer: Observer = _quiet) -> None:
        self.ka = ka
        self.signer = signer
        self.verifier_kem = verifier_kem
        self.tee = tee
        self.observer = observer
        self.state: object = Idle()

    def handle_challenge(self, cha: bytes, collect: MetricsProvider,
                         rng: EntropySource = system_rng) -> EvidenceMsg:
        """Steps (3)-(7). ``cha`` stays opaque; the attester holds no K_V."""
        if not isinstance(self.state, Idle):
            raise StateError("attester is not idle")
        h = hash_bytes(self.ka.raw)
        ak = self.tee.attest_key(h)
        metrics = collect()
        msg = encode_evidence(ak, metrics, cha, self.verifier_kem, self.signer, rng)
        self.state = AwaitingVerdict(bytes(cha))
        self.observer("attesterBegins", pk=self.signer.public, h=h, metrics=metrics, cha=bytes(cha))
        return msg

    def forward_result(self, res: bytes) -> bytes:
        if not isinstance(self.state, AwaitingVerdict):
            raise StateError("no result expected")
        self.state = Done()
        return bytes(res)

    def reset(self) -> None:
        self.state = Idle()
