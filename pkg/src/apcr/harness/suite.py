"""Canonical attack scenarios for both protocol variants.

The set is regression-grade, not exhaustive: it covers replay of every
message, single-byte tampering of every message, relay (cuckoo) attempts,
forged results, reflection and a couple of oracle uses of honest parties.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional

from ..crypto import SigKeyPair, SoftwareTee, SymKey, hash_bytes, seal
from ..roles import AbortReason, RejectReason
from ..wire import (
    EAR_PROFILE,
    LETTERS,
    EarResult,
    EarStatus,
    EvidenceMsg,
    KdcVerdictMsg,
    Metrics,
    MsgType,
    encode_evidence,
    encode_result,
    frame,
)
from ..crypto import aenc, sign
from ..wire.messages import AAD_KDC_RESULT, lp
from .checks import check_correspondence, check_secrecy
from .network import RunReport, run_scenario
from .script import AdversaryScript, Drop, Forge, Modify, Reflect, Replay, Reroute, Rule
from .topology import Topology


@dataclass
class Scenario:
    name: str
    script: AdversaryScript
    runs: int = 1
    topology: dict[str, Any] = field(default_factory=dict)
    honest: bool = False
    expect_abort: Optional[AbortReason] = None
    expect_reject: Optional[RejectReason] = None

    def run(self, variant: str, seed: int = 0) -> RunReport:
        topo = Topology.generate(seed, variant, **self.topology)
        return run_scenario(topo, self.script, variant, runs=self.runs)


def _rule(variant: str, letter: str, occurrence: Optional[int], action) -> Rule:
    return Rule(LETTERS[variant][letter], occurrence, action)


def _script(*rules: Rule) -> AdversaryScript:
    return AdversaryScript(list(rules))


# -- forgeries --------------------------------------------------------------

def _fake_ear(view) -> EarResult:
    return EarResult(EAR_PROFILE, 1_700_000_000, "verifier.lan", view.rng(16), EarStatus.AFFIRMING)


def forge_result_under_ka(view, entry) -> bytes:
    """Affirming result sealed under the (leaked) K_A instead of K_V."""
    ka = SymKey(view.knowledge["ka:alice"])
    return frame(MsgType.RESULT_TO_RP, encode_result(_fake_ear(view), view.rng(16), view.rng(16), ka, view.rng))


def forge_result_own_key(view, entry) -> bytes:
    key = SymKey.generate(view.rng)
    return frame(entry.msg_type, encode_result(_fake_ear(view), view.rng(16), view.rng(16), key, view.rng))


def forge_bogus_challenge(view, entry) -> bytes:
    return frame(MsgType.CHALLENGE, view.rng(55))


def forge_rogue_evidence(view, entry) -> bytes:
    """Evidence over the live challenge, signed by the adversary while
    claiming alice's key id."""
    cha = next(d for d in reversed(view.traffic()) if d[0] == MsgType.CHALLENGE)[3:]
    signer = SigKeyPair.generate(view.rng)
    tee = SoftwareTee(rng=view.rng)
    ak = tee.attest_key(hash_bytes(view.rng(16)))
    msg = encode_evidence(ak, Metrics.of({"boot-hash": view.rng(32)}), cha, view.publics["verifier:kem"],
                          signer, view.rng)
    forged = EvidenceMsg(hash_bytes(view.publics["alice:sig"]), msg.sig, msg.ev)
    return frame(MsgType.EVIDENCE, forged.to_bytes())


def forge_hash_of_bob(view, entry) -> bytes:
    return frame(MsgType.KDC_HASH, hash_bytes(view.publics["bob:sig"]))


def forge_kdc_verdict(view, entry) -> bytes:
    """Res_A for alice, signed with an adversary key instead of SK_V."""
    fake_rp = seal(view.rng(80), SymKey.generate(view.rng), view.rng, AAD_KDC_RESULT).to_bytes()
    res_a = aenc(lp(fake_rp) + view.rng(16), view.publics["alice:kem"], view.rng)
    return frame(MsgType.KDC_RESULT_TO_ATTESTER,
                 KdcVerdictMsg(sign(res_a, SigKeyPair.generate(view.rng)), res_a).to_bytes())


def forge_kdc_result_rp(view, entry) -> bytes:
    body = view.rng(119) + view.rng(16) + view.rng(32) + view.rng(16)
    return frame(MsgType.KDC_RESULT_TO_RP, seal(body, SymKey.generate(view.rng), view.rng, AAD_KDC_RESULT).to_bytes())


# -- scenario sets ----------------------------------------------------------

def _mid(letter: str, variant: str) -> int:
    # a byte well inside the payload of each message
    return {"lpm": {"a": 30, "b": 150, "c": 90, "d": 90},
            "kdc": {"a": 20, "b": 40, "c": 150, "d": 150, "e": 90}}[variant][letter]


def lpm_scenarios() -> list[Scenario]:
    v = "lpm"
    r = lambda *a: _rule(v, *a)  # noqa: E731
    # run 1 entries: a=0 b=1 c=2 d=3; its (d) is withheld so no run accepts
    out = [
        Scenario("honest", AdversaryScript(), honest=True),
        Scenario("replay-a", _script(r("d", 1, Drop()), r("a", 2, Replay(0))), runs=2,
                 expect_abort=AbortReason.DUPLICATE_CHALLENGE),
        Scenario("replay-b", _script(r("d", 1, Drop()), r("b", 2, Replay(1))), runs=2,
                 expect_abort=AbortReason.DUPLICATE_CHALLENGE),
        Scenario("replay-c", _script(r("d", 1, Drop()), r("c", 2, Replay(2))), runs=2,
                 expect_reject=RejectReason.REPLAY),
        Scenario("replay-d", _script(r("d", 1, Drop()), r("d", 2, Replay(3))), runs=2,
                 expect_reject=RejectReason.REPLAY),
        Scenario("modify-a", _script(r("a", 1, Modify(_mid("a", v), 0x01))),
                 expect_abort=AbortReason.BAD_CHALLENGE),
        Scenario("modify-b", _script(r("b", 1, Modify(_mid("b", v), 0x01))),
                 expect_abort=AbortReason.BAD_SIGNATURE),
        Scenario("modify-c", _script(r("c", 1, Modify(_mid("c", v), 0x01))),
                 expect_reject=RejectReason.TAMPER_OR_WRONG_VERIFIER),
        Scenario("modify-d", _script(r("d", 1, Modify(_mid("d", v), 0x01))),
                 expect_reject=RejectReason.TAMPER_OR_WRONG_VERIFIER),
        Scenario("cuckoo-relay", _script(r("a", 1, Reroute("alice"))),
                 topology=dict(names=("alice", "mallory"), rp_peer="mallory", compromised=("mallory",)),
                 expect_abort=AbortReason.ID_BINDING_MISMATCH),
        Scenario("foreign-attester", _script(r("a", 1, Reroute("mallory"))),
                 topology=dict(names=("alice", "mallory"), rp_peer="alice"),
                 expect_abort=AbortReason.ID_BINDING_MISMATCH),
        Scenario("wrong-verifier-ka", _script(r("d", 1, Forge(forge_result_under_ka))),
                 topology=dict(leak_ka=("alice",)), expect_reject=RejectReason.TAMPER_OR_WRONG_VERIFIER),
        Scenario("wrong-verifier-own-key", _script(r("c", 1, Forge(forge_result_own_key))),
                 expect_reject=RejectReason.TAMPER_OR_WRONG_VERIFIER),
        Scenario("reflect-a-as-d", _script(r("a", 1, Reflect(MsgType.RESULT_TO_RP))),
                 expect_reject=RejectReason.TAMPER_OR_WRONG_VERIFIER),
        Scenario("oracle-bogus-challenge", _script(r("a", 1, Forge(forge_bogus_challenge))),
                 expect_abort=AbortReason.BAD_CHALLENGE),
        Scenario("rogue-signer", _script(r("b", 1, Forge(forge_rogue_evidence))),
                 expect_abort=AbortReason.BAD_SIGNATURE),
        Scenario("drop-d", _script(r("d", 1, Drop())), expect_reject=RejectReason.TIMEOUT),
    ]
    return out


def kdc_scenarios() -> list[Scenario]:
    v = "kdc"
    r = lambda *a: _rule(v, *a)  # noqa: E731
    # run 1 entries: a=0 b=1 c=2 d=3 e=4
    out = [
        Scenario("honest", AdversaryScript(), honest=True),
        Scenario("replay-b", _script(r("e", 1, Drop()), r("b", 2, Replay(1))), runs=2,
                 expect_abort=AbortReason.DUPLICATE_CHALLENGE),
        Scenario("replay-c", _script(r("e", 1, Drop()), r("c", 2, Replay(2))), runs=2,
                 expect_abort=AbortReason.DUPLICATE_CHALLENGE),
        Scenario("replay-d", _script(r("e", 1, Drop()), r("d", 2, Replay(3))), runs=2,
                 expect_reject=RejectReason.REPLAY),
        Scenario("replay-e", _script(r("e", 1, Drop()), r("e", 2, Replay(4))), runs=2,
                 expect_reject=RejectReason.REPLAY),
        Scenario("modify-a", _script(r("a", 1, Modify(_mid("a", v), 0x01))),
                 expect_abort=AbortReason.HASH_BINDING_MISMATCH),
        Scenario("modify-b", _script(r("b", 1, Modify(_mid("b", v), 0x01))),
                 expect_abort=AbortReason.BAD_CHALLENGE),
        Scenario("modify-c", _script(r("c", 1, Modify(_mid("c", v), 0x01))),
                 expect_abort=AbortReason.BAD_SIGNATURE),
        Scenario("modify-d", _script(r("d", 1, Modify(_mid("d", v), 0x01))),
                 expect_reject=RejectReason.TIMEOUT),
        Scenario("modify-e", _script(r("e", 1, Modify(_mid("e", v), 0x01))),
                 expect_reject=RejectReason.TAMPER_OR_WRONG_VERIFIER),
        Scenario("hash-swap", _script(r("a", 1, Forge(forge_hash_of_bob))),
                 topology=dict(names=("alice", "bob")), expect_abort=AbortReason.HASH_BINDING_MISMATCH),
        Scenario("cuckoo-relay", _script(r("b", 1, Reroute("bob"))),
                 topology=dict(names=("alice", "bob")), expect_reject=RejectReason.TIMEOUT),
        Scenario("wrong-verifier-d", _script(r("d", 1, Forge(forge_kdc_verdict))),
                 expect_reject=RejectReason.TIMEOUT),
        Scenario("wrong-verifier-e", _script(r("e", 1, Forge(forge_kdc_result_rp))),
                 expect_reject=RejectReason.TAMPER_OR_WRONG_VERIFIER),
        Scenario("reflect-b-as-e", _script(r("b", 1, Reflect(MsgType.KDC_RESULT_TO_RP))),
                 expect_reject=RejectReason.TAMPER_OR_WRONG_VERIFIER),
        Scenario("drop-e", _script(r("e", 1, Drop())), expect_reject=RejectReason.TIMEOUT),
    ]
    return out


def canonical_scenarios(variant: str) -> list[Scenario]:
    return lpm_scenarios() if variant == "lpm" else kdc_scenarios()


@dataclass
class ScenarioResult:
    name: str
    honest: bool
    accepts: int
    reject_reasons: list[Optional[RejectReason]]
    aborts: list[tuple[AbortReason, int]]
    correspondence: bool
    secrecy: bool
    expectation_met: bool
    transcript_hash: str


@dataclass
class SuiteSummary:
    variant: str
    results: list[ScenarioResult]

    @property
    def attack_accepts(self) -> int:
        return sum(r.accepts for r in self.results if not r.honest)

    @property
    def honest_accepts(self) -> int:
        return sum(r.accepts for r in self.results if r.honest)

    @property
    def ok(self) -> bool:
        return (self.attack_accepts == 0 and all(r.correspondence and r.secrecy and r.expectation_met
                                                 for r in self.results))

    def lines(self) -> list[str]:
        out = []
        for r in self.results:
            reasons = ",".join(x.value if x else "-" for x in r.reject_reasons)
            aborts = ",".join(f"{a.value}@{s}" for a, s in r.aborts) or "-"
            out.append(f"{r.name:24s} accepts={r.accepts} rp={reasons:32s} verifier={aborts:28s} "
                       f"corr={'ok' if r.correspondence else 'FAIL'} "
                       f"secrecy={'ok' if r.secrecy else 'FAIL'} "
                       f"expect={'ok' if r.expectation_met else 'FAIL'}")
        return out


def evaluate(scenario: Scenario, report: RunReport) -> ScenarioResult:
    reasons = [o.reject_reason for o in report.outcomes]
    aborts = [(a.reason, a.step) for a in report.aborts]
    met = True
    if scenario.honest:
        met = report.accepts == scenario.runs
    if scenario.expect_abort is not None:
        met = met and scenario.expect_abort in [a for a, _ in aborts]
    if scenario.expect_reject is not None:
        met = met and scenario.expect_reject in reasons
    return ScenarioResult(scenario.name, scenario.honest, report.accepts, reasons, aborts,
                          bool(check_correspondence(report)), bool(check_secrecy(report)), met,
                          report.transcript.digest())


def attack_suite(variant: str, seed: int = 0) -> SuiteSummary:
    results = []
    for scenario in canonical_scenarios(variant):
        results.append(evaluate(scenario, scenario.run(variant, seed)))
    return SuiteSummary(variant, results)
