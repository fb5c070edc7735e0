"""Command-line entry points.

    keytag-rp        --listen 127.0.0.1:7000 --keys keys/
    verifier-daemon  --listen 127.0.0.1:7002 --keys keys/ [--policy p.json] [--sessions N]
    phone-attester   --listen 127.0.0.1:7001 --peer rp=127.0.0.1:7000 --peer verifier=127.0.0.1:7002 --keys keys/
    apcr-provision   keys/ [--tamper]
    apcr --role demo --keys keys/          all three roles in one process
    apcr --bench 10 --keys keys/           timing experiments on loopback

Exit status is 0 only for a successful key transfer (RP: trusted and
released; attester: door key decrypted; demo: both).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from .bench import bench_run
from .crypto import DeterministicRng, system_rng
from .demo import KeyStore, demo_run, provision, run_attester, run_rp, run_verifier, udp_channels
from .errors import ApcrError, ConfigError
from .net import UdpChannel, address_from_env, parse_address
from .roles import Policy

ROLES = ("rp", "attester", "verifier", "demo")
ENV = {"rp": "APCR_RP_ADDR", "attester": "APCR_ATTESTER_ADDR", "verifier": "APCR_VERIFIER_ADDR"}
DEFAULT_ADDR = {"rp": "127.0.0.1:7000", "attester": "127.0.0.1:7001", "verifier": "127.0.0.1:7002"}


@dataclass
class DemoConfig:
    role: str
    variant: str = "lpm"
    keys: Path = Path("keys")
    policy: Optional[Path] = None
    listen: Optional[str] = None
    peers: dict[str, str] = field(default_factory=dict)
    timeout_ms: int = 2000
    bench: Optional[int] = None
    sessions: Optional[int] = None
    seed: Optional[int] = None

    def __post_init__(self) -> None:
        if self.role not in ROLES:
            raise ConfigError(f"unknown role {self.role!r}")
        if self.variant not in ("lpm", "kdc"):
            raise ConfigError(f"unknown variant {self.variant!r}")
        if self.timeout_ms <= 0:
            raise ConfigError("timeout must be positive")
        if self.bench is not None and self.bench < 1:
            raise ConfigError("--bench needs at least one repetition")

    @property
    def timeout(self) -> float:
        return self.timeout_ms / 1000

    def address(self, role: str) -> tuple[str, int]:
        if role in self.peers:
            return parse_address(self.peers[role])
        return address_from_env(ENV[role], DEFAULT_ADDR[role])

    def listen_address(self) -> tuple[str, int]:
        return parse_address(self.listen) if self.listen else self.address(self.role)

    def load_policy(self) -> Optional[Policy]:
        return Policy.load(self.policy) if self.policy else None


def _peer(text: str) -> tuple[str, str]:
    role, sep, addr = text.partition("=")
    if not sep or role not in ENV:
        raise argparse.ArgumentTypeError(f"expected ROLE=HOST:PORT with ROLE in {sorted(ENV)}, got {text!r}")
    return role, addr


def build_parser(role: Optional[str] = None) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog={None: "apcr", "rp": "keytag-rp", "attester": "phone-attester",
                                      "verifier": "verifier-daemon"}[role])
    if role is None:
        p.add_argument("--role", choices=ROLES, default="demo")
    p.add_argument("--variant", choices=("lpm", "kdc"), default="lpm")
    p.add_argument("--peer", type=_peer, action="append", default=[], metavar="ROLE=HOST:PORT")
    p.add_argument("--listen", metavar="HOST:PORT")
    p.add_argument("--keys", type=Path, default=Path("keys"), metavar="DIR")
    p.add_argument("--policy", type=Path, metavar="FILE")
    p.add_argument("--bench", type=int, nargs="?", const=10, metavar="N")
    p.add_argument("--timeout", type=int, default=2000, metavar="MS")
    p.add_argument("--sessions", type=int, metavar="N", help="verifier: stop after N evidence messages")
    p.add_argument("--seed", type=int, help="deterministic randomness (testing only)")
    p.add_argument("--json", action="store_true", help="machine-readable summary on stdout")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def config_from_args(args: argparse.Namespace, role: Optional[str]) -> DemoConfig:
    return DemoConfig(role or args.role, args.variant, args.keys, args.policy, args.listen, dict(args.peer),
                      args.timeout, args.bench, args.sessions, args.seed)


def run(cfg: DemoConfig, as_json: bool = False) -> int:
    store = KeyStore(cfg.keys)
    rng = DeterministicRng(cfg.seed).fork(cfg.role) if cfg.seed is not None else system_rng
    if cfg.bench is not None:
        report = bench_run(store, cfg.bench, cfg.variant, cfg.timeout)
        print(json.dumps(report.as_dict()) if as_json else report.text())
        return 0
    if cfg.role == "demo":
        result = demo_run(store, cfg.variant, cfg.timeout, udp_channels(), cfg.seed, cfg.load_policy())
        summary = {"decision": result.rp.decision and result.rp.decision.value, "reject": result.rp.reject,
                   "rp_sent": result.rp.traffic.bytes_sent, "rp_received": result.rp.traffic.bytes_received,
                   "key_material": result.attester.key_material_len, "door_key": result.attester.ok,
                   "exit": result.exit_status}
        print(json.dumps(summary) if as_json else " ".join(f"{k}={v}" for k, v in summary.items()))
        return result.exit_status
    with UdpChannel(cfg.listen_address()) as chan:
        if cfg.role == "rp":
            out = run_rp(store, chan, cfg.variant, cfg.timeout, rng)
            print(json.dumps({"decision": out.decision and out.decision.value, "reject": out.reject,
                              "sent": out.traffic.bytes_sent, "received": out.traffic.bytes_received}))
            return 0 if out.trusted and out.released else 1
        if cfg.role == "attester":
            att = run_attester(store, chan, cfg.address("rp"), cfg.address("verifier"), cfg.variant, cfg.timeout, rng)
            print(json.dumps({"door_key": att.ok, "error": att.error, "key_material": att.key_material_len}))
            return 0 if att.ok else 1
        outcomes = run_verifier(store, chan, cfg.variant, cfg.sessions, rng, cfg.load_policy())
        print(json.dumps({"served": outcomes}))
        return 0


def _main(role: Optional[str], argv: Optional[Sequence[str]]) -> int:
    args = build_parser(role).parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, stream=sys.stderr,
                        format="%(asctime)s %(message)s")
    try:
        return run(config_from_args(args, role), args.json)
    except (ApcrError, OSError) as exc:
        logging.getLogger("apcr").error("%s: %s", type(exc).__name__, exc)
        return 2


def main(argv: Optional[Sequence[str]] = None) -> int:
    return _main(None, argv)


def rp_main(argv: Optional[Sequence[str]] = None) -> int:
    return _main("rp", argv)


def attester_main(argv: Optional[Sequence[str]] = None) -> int:
    return _main("attester", argv)


def verifier_main(argv: Optional[Sequence[str]] = None) -> int:
    return _main("verifier", argv)


def provision_main(argv: Optional[Sequence[str]] = None) -> int:
    p = argparse.ArgumentParser(prog="apcr-provision", description="write a demo key set and policy")
    p.add_argument("dir", type=Path)
    p.add_argument("--tamper", action="store_true", help="attester metrics deviate from the policy")
    p.add_argument("--seed", type=int)
    args = p.parse_args(argv)
    rng = DeterministicRng(args.seed) if args.seed is not None else system_rng
    provision(args.dir, rng, tamper=args.tamper)
    print(args.dir)
    return 0


if __name__ == "__main__":
    sys.exit(main())
