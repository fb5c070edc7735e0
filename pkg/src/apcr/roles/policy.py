"""Reference-value appraisal of attestation metrics."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from ..errors import ConfigError
from ..wire import EAR_PROFILE, EarResult, EarStatus, Metrics


@dataclass(frozen=True)
class Policy:
    """Flat table: claim name -> set of acceptable measurement values."""

    reference: Mapping[str, frozenset[bytes]] = field(default_factory=dict)

    @classmethod
    def of(cls, table: Mapping[str, bytes | Iterable[bytes]]) -> "Policy":
        out = {}
        for name, allowed in table.items():
            if isinstance(allowed, (bytes, bytearray)):
                allowed = [allowed]
            out[name] = frozenset(bytes(v) for v in allowed)
        return cls(out)

    @classmethod
    def load(cls, path: str | Path) -> "Policy":
        """Read a JSON policy file ``{"claim": ["hex", ...], ...}``."""
        try:
            raw = json.loads(Path(path).read_text())
            if not isinstance(raw, dict):
                raise ValueError("expected a JSON object")
            return cls.of({k: [bytes.fromhex(v) for v in (vs if isinstance(vs, list) else [vs])]
                           for k, vs in raw.items()})
        except (OSError, ValueError, TypeError, AttributeError) as exc:
            raise ConfigError(f"bad policy file {path}: {exc}") from None

    def dump(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(
            {k: sorted(v.hex() for v in vs) for k, vs in sorted(self.reference.items())}, indent=2) + "\n")


def appraise(policy: Policy, metrics: Metrics) -> EarStatus:
    claims = metrics.as_dict()
    for name, allowed in policy.reference.items():
        if claims.get(name) not in allowed:
            return EarStatus.CONTRAINDICATED
    if set(claims) - set(policy.reference):
        return EarStatus.WARNING
    return EarStatus.AFFIRMING


def validate_metrics(policy: Policy, metrics: Metrics, *, attester_id: bytes, issued_at: int,
                     verifier_id: str, ear_version: str = EAR_PROFILE) -> EarResult:
    """Attestation result for ``metrics``; a pure function of its arguments."""
    return EarResult(ear_version, issued_at, verifier_id, attester_id, appraise(policy, metrics))
