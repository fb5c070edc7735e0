"""Participants and key material for a simulated run."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..crypto import (
    DeterministicRng,
    KemKeyPair,
    SigKeyPair,
    SoftwareTee,
    SymKey,
    attester_id,
    hash_bytes,
)
from ..roles import Policy, TrustedAttester
from ..wire import Metrics

DEFAULT_CLAIMS = ("boot-hash", "firmware-version", "tee-config")


@dataclass
class AttesterKeys:
    name: str
    ka: SymKey
    signer: SigKeyPair
    kem: KemKeyPair
    tee: SoftwareTee
    metrics: Metrics

    @property
    def h(self) -> bytes:
        return hash_bytes(self.ka.raw)

    @property
    def id(self) -> bytes:
        return attester_id(self.h, self.signer.public)

    @property
    def trust_record(self) -> TrustedAttester:
        return TrustedAttester(self.signer.public, self.tee.public, self.kem.public)


@dataclass
class Topology:
    """Keys for one RP, one verifier and any number of attesters.

    ``rp_peer`` is the attester the relying party believes it talks to.
    Attesters named in ``compromised`` have no honest node: their traffic
    lands at the adversary. ``leaked`` lists key material the adversary is
    explicitly given (e.g. a compromised attester's K_A).
    """

    seed: int
    variant: str
    kv: SymKey
    verifier_signer: SigKeyPair
    verifier_kem: KemKeyPair
    policy: Policy
    attesters: dict[str, AttesterKeys]
    rp_peer: str = "alice"
    compromised: frozenset[str] = frozenset()
    leaked: dict[str, bytes] = field(default_factory=dict)

    @classmethod
    def generate(cls, seed: int = 0, variant: str = "lpm", *, names: tuple[str, ...] = ("alice",),
                 rp_peer: Optional[str] = None, compromised: tuple[str, ...] = (),
                 metrics: Optional[dict[str, Metrics]] = None, leak_ka: tuple[str, ...] = (),
                 claims: tuple[str, ...] = DEFAULT_CLAIMS) -> "Topology":
        rng = DeterministicRng(seed).fork("keys")
        reference = {name: rng(32) for name in claims}
        policy = Policy.of(reference)
        attesters = {}
        for name in names:
            sub = rng.fork(f"attester:{name}")
            m = (metrics or {}).get(name, Metrics.of(reference))
            attesters[name] = AttesterKeys(name, SymKey.generate(sub), SigKeyPair.generate(sub),
                                           KemKeyPair.generate(sub), SoftwareTee(rng=sub), m)
        topo = cls(seed, variant, SymKey.generate(rng), SigKeyPair.generate(rng), KemKeyPair.generate(rng),
                   policy, attesters, rp_peer or names[0], frozenset(compromised))
        for name in leak_ka:
            topo.leaked[f"ka:{name}"] = attesters[name].ka.raw
        return topo

    def trust_records(self) -> list[TrustedAttester]:
        return [a.trust_record for a in self.attesters.values()]

    def public_keys(self) -> dict[str, bytes]:
        out = {"verifier:sig": self.verifier_signer.public, "verifier:kem": self.verifier_kem.public}
        for a in self.attesters.values():
            out[f"{a.name}:sig"] = a.signer.public
            out[f"{a.name}:kem"] = a.kem.public
            out[f"{a.name}:tee"] = a.tee.public
        return out

    def symmetric_secrets(self) -> list[bytes]:
        return [self.kv.raw] + [a.ka.raw for a in self.attesters.values()]

    def private_secrets(self) -> list[bytes]:
        out = [self.verifier_signer.seed(), self.verifier_kem.seed()]
        for a in self.attesters.values():
            out += [a.signer.seed(), a.kem.seed()]
        return out
