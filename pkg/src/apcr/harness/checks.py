"""Executable forms of the protocol's security properties over a RunReport."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from ..crypto import attester_id, hash_bytes
from ..roles import validate_metrics
from .network import Event, RunReport


@dataclass
class CheckResult:
    ok: bool
    problems: list[str] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.ok


def _take(candidates: list[Event], used: set[int]) -> Optional[Event]:
    free = [e for e in candidates if id(e) not in used]
    if len(free) != 1:
        return None
    used.add(id(free[0]))
    return free[0]


def check_correspondence(report: RunReport) -> CheckResult:
    """Injective agreement: every RP acceptance has its own matching begin,
    attester and verifier events, with R_A recomputable from M_A."""
    used: set[int] = set()
    problems = []
    begins = report.events_named("relyingPartyBegins")
    attesters = report.events_named("attesterBegins")
    verifiers = report.events_named("verifierAccepts")
    policy = report.topology.policy
    for acc in report.events_named("relyingPartyAccepts"):
        c, ident, result = acc.params["c"], acc.params["id"], acc.params["result"]
        tag = f"accept(c={c.hex()[:8]})"
        rb = _take([e for e in begins if e.params["c"] == c and e.params["id"] == ident
                    and e.step < acc.step], used)
        if rb is None:
            problems.append(f"{tag}: no unique relyingPartyBegins")
            continue
        va = _take([e for e in verifiers if e.params["c"] == c and e.params["id"] == ident
                    and rb.step < e.step < acc.step], used)
        if va is None:
            problems.append(f"{tag}: no unique verifierAccepts")
            continue
        ab = _take([e for e in attesters if e.params["cha"] == rb.params["cha"]
                    and e.params["metrics"] == va.params["metrics"] and e.params["pk"] == va.params["pk"]
                    and rb.step < e.step < va.step], used)
        if ab is None:
            problems.append(f"{tag}: no unique attesterBegins over the same challenge")
            continue
        if report.variant == "lpm":
            bound = attester_id(ab.params["h"], ab.params["pk"])
        else:
            bound = hash_bytes(ab.params["pk"]) if ab.params["h"] == hash_bytes(ab.params["pk"]) else None
        if bound != ident:
            problems.append(f"{tag}: id not bound to the attester's keys")
        expected = validate_metrics(policy, va.params["metrics"], attester_id=result.attester_id,
                                    issued_at=result.issued_at, verifier_id=result.verifier_id,
                                    ear_version=result.ear_version)
        if result != expected or va.params["result"] != result:
            problems.append(f"{tag}: R_A != validateMetrics(M_A)")
        if report.variant == "kdc" and acc.params.get("ks") != va.params.get("ks"):
            problems.append(f"{tag}: session key differs from the verifier's")
    return CheckResult(not problems, problems)


def check_secrecy(report: RunReport, secrets: Optional[Iterable[bytes]] = None) -> CheckResult:
    """No secret occurs as a contiguous substring of adversary-visible octets.

    This is a syntactic under-approximation of Dolev-Yao deduction.
    """
    secrets = list(report.secrets() if secrets is None else secrets)
    problems = []
    traffic = report.adversary_view()
    for s in secrets:
        if not s:
            raise ValueError("empty secret is a substring of everything")
        for i, data in enumerate(traffic):
            if s in data:
                problems.append(f"secret {s[:4].hex()}.. ({len(s)} B) visible in entry {i}")
    return CheckResult(not problems, problems)
