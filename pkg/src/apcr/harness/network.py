"""Deterministic in-memory network with a Dolev-Yao adversary in the middle.

Every frame an honest node sends is handed to the adversary first. The
adversary sees the raw octets, may deliver, drop, replay, modify, inject,
reroute or reflect them, and can only ever use key material explicitly
leaked to it through the topology.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter, deque
from dataclasses import dataclass, field
from typing import IO, Any, Optional

from ..crypto import DeterministicRng, SymKey
from ..errors import ApcrError, ConfigError, FormatError
from ..kdc import KdcAttesterSession, KdcRpSession, KdcVerifierContext
from ..roles import (
    Accepted,
    AttesterSession,
    AwaitingResult,
    Rejected,
    RpRejected,
    RpSession,
    VerifierAbort,
    VerifierContext,
)
from ..wire import EarResult, Frame, Metrics, MsgType, encode_ear, frame
from .script import (
    AdversaryScript,
    Deliver,
    Drop,
    Duplicate,
    Forge,
    Inject,
    Modify,
    Reflect,
    Replay,
    Reroute,
)
from .topology import Topology

EPOCH = 1_700_000_000
RP_STEP_BUDGET = 64


@dataclass
class Entry:
    index: int
    step: int
    src: str
    dst: str
    data: bytes
    origin: str  # "honest" or "adversary"
    fate: str = "delivered"  # or "dropped"

    @property
    def channel(self) -> str:
        return f"{self.src}->{self.dst}"

    @property
    def msg_type(self) -> Optional[MsgType]:
        try:
            return MsgType(self.data[0]) if self.data else None
        except ValueError:
            return None


@dataclass
class Transcript:
    entries: list[Entry] = field(default_factory=list)

    def append(self, entry: Entry) -> Entry:
        self.entries.append(entry)
        return entry

    def __getitem__(self, i: int) -> Entry:
        return self.entries[i]

    def __len__(self) -> int:
        return len(self.entries)

    def digest(self) -> str:
        h = hashlib.sha256()
        for e in self.entries:
            meta = f"{e.index}|{e.step}|{e.src}|{e.dst}|{e.origin}|{e.fate}|{len(e.data)}|".encode()
            h.update(meta + e.data)
        return h.hexdigest()


@dataclass
class Event:
    name: str
    run: int
    step: int
    node: str
    params: dict[str, Any]


@dataclass
class RunOutcome:
    run: int
    rp_state: object = None
    verifier_aborts: list[VerifierAbort] = field(default_factory=list)
    attester_errors: list[str] = field(default_factory=list)
    attester_key: Optional[SymKey] = None

    @property
    def accepted(self) -> bool:
        return isinstance(self.rp_state, Accepted)

    @property
    def reject_reason(self):
        return self.rp_state.reason if isinstance(self.rp_state, Rejected) else None


@dataclass
class RunReport:
    variant: str
    topology: Topology
    events: list[Event]
    outcomes: list[RunOutcome]
    transcript: Transcript

    def events_named(self, name: str) -> list[Event]:
        return [e for e in self.events if e.name == name]

    @property
    def accepts(self) -> int:
        return len(self.events_named("relyingPartyAccepts"))

    @property
    def aborts(self) -> list[VerifierAbort]:
        return [a for o in self.outcomes for a in o.verifier_aborts]

    def adversary_view(self) -> list[bytes]:
        return [e.data for e in self.transcript.entries]

    def secrets(self) -> list[bytes]:
        """Everything that must never show up in adversary-visible traffic."""
        out = self.topology.symmetric_secrets() + self.topology.private_secrets()
        for a in self.topology.attesters.values():
            if a.metrics.claims:
                out.append(a.metrics.encode())
        for e in self.events:
            for v in e.params.values():
                if isinstance(v, SymKey):
                    out.append(v.raw)
                elif isinstance(v, EarResult):
                    out.append(encode_ear(v))
                elif isinstance(v, Metrics) and v.claims:
                    out.append(v.encode())
        leaked = set(self.topology.leaked.values())
        return [s for s in dict.fromkeys(out) if s not in leaked]

    def write_jsonl(self, fh: IO[str]) -> None:
        for e in self.transcript.entries:
            fh.write(json.dumps({"kind": "entry", "index": e.index, "step": e.step, "src": e.src, "dst": e.dst,
                                 "origin": e.origin, "fate": e.fate, "hex": e.data.hex()}) + "\n")
        for ev in self.events:
            fh.write(json.dumps({"kind": "event", "name": ev.name, "run": ev.run, "step": ev.step,
                                 "node": ev.node, "params": {k: _jsonable(v) for k, v in ev.params.items()}}) + "\n")
        for o in self.outcomes:
            fh.write(json.dumps({"kind": "outcome", "run": o.run, "rp": _state_name(o.rp_state),
                                 "verifier_aborts": [[a.reason.value, a.step] for a in o.verifier_aborts],
                                 "attester_errors": o.attester_errors}) + "\n")


def _state_name(state: object) -> str:
    if isinstance(state, Rejected):
        return f"rejected:{state.reason.value}"
    if isinstance(state, Accepted):
        return f"accepted:{state.verdict.decision.value}"
    return type(state).__name__.lower()


def _jsonable(v: Any) -> Any:
    if isinstance(v, bytes):
        return v.hex()
    if isinstance(v, SymKey):
        return repr(v)  # fingerprint only
    if isinstance(v, Metrics):
        return {k: x.hex() for k, x in v.claims}
    if isinstance(v, EarResult):
        return {"ear_version": v.ear_version, "issued_at": v.issued_at, "verifier_id": v.verifier_id,
                "attester_id": v.attester_id.hex(), "verdict": v.verdict.name.lower()}
    return v


class AdversaryView:
    """What the attacker can see: raw traffic and explicitly leaked keys."""

    def __init__(self, transcript: Transcript, knowledge: dict[str, bytes], publics: dict[str, bytes],
                 rng: DeterministicRng) -> None:
        self._transcript = transcript
        self.knowledge = dict(knowledge)
        self.publics = dict(publics)
        self.rng = rng

    def traffic(self) -> list[bytes]:
        return [e.data for e in self._transcript.entries]


class Network:
    def __init__(self, topology: Topology, script: AdversaryScript) -> None:
        self.topology = topology
        self.script = script
        self.transcript = Transcript()
        self.step = 0
        self.run = 0
        self.events: list[Event] = []
        self.outcomes: list[RunOutcome] = []
        self.queue: deque[tuple[str, str, bytes]] = deque()
        self.occurrences: Counter = Counter()
        root = DeterministicRng(topology.seed)
        self.adversary = AdversaryView(self.transcript, topology.leaked, topology.public_keys(),
                                       root.fork("adversary"))
        self.nodes: dict[str, "Node"] = {}
        build = _build_lpm if topology.variant == "lpm" else _build_kdc
        build(self, root)

    # -- plumbing used by nodes ------------------------------------------

    def clock(self) -> int:
        return self.step

    def observer(self, node: str):
        def emit(name: str, **params: Any) -> None:
            self.events.append(Event(name, self.run, self.step, node, params))
        return emit

    def send(self, src: str, dst: str, msg_type: MsgType, payload: bytes) -> None:
        self._intercept(src, dst, frame(msg_type, payload))

    # -- adversary ----------------------------------------------------------

    def _record(self, src: str, dst: str, data: bytes, origin: str, fate: str = "delivered") -> Entry:
        self.step += 1
        return self.transcript.append(Entry(len(self.transcript), self.step, src, dst, bytes(data), origin, fate))

    def _inject(self, src: str, dst: str, data: Optional[bytes]) -> None:
        if data is None:
            return
        self._record(src, dst, data, "adversary")
        self.queue.append((src, dst, bytes(data)))

    def _intercept(self, src: str, dst: str, data: bytes) -> None:
        entry = self._record(src, dst, data, "honest")
        kind = entry.msg_type
        self.occurrences[kind] += 1
        action = self.script.action_for(kind, self.occurrences[kind])
        if isinstance(action, Deliver):
            self.queue.append((src, dst, data))
            return
        if isinstance(action, Duplicate):
            self.queue.append((src, dst, data))
            self._inject(src, dst, data)
            return
        entry.fate = "dropped"
        if isinstance(action, Drop):
            return
        if isinstance(action, Replay):
            if action.entry >= len(self.transcript) - 1:
                raise ConfigError(f"replay references entry {action.entry}, only "
                                  f"{len(self.transcript) - 1} earlier entries exist")
            self._inject(src, dst, self.transcript[action.entry].data)
        elif isinstance(action, Modify):
            if action.index >= len(data):
                raise ConfigError(f"modify index {action.index} beyond {len(data)}-byte frame")
            mutated = bytearray(data)
            mutated[action.index] ^= action.mask
            self._inject(src, dst, bytes(mutated))
        elif isinstance(action, Inject):
            self._inject(src, dst, action.raw)
        elif isinstance(action, Reroute):
            self._inject(src, action.to, data)
        elif isinstance(action, Reflect):
            self._inject(dst, src, bytes([action.as_type]) + data[1:])
        elif isinstance(action, Forge):
            self._inject(src, dst, action.fn(self.adversary, entry))
        else:  # pragma: no cover
            raise ConfigError(f"unknown action {action!r}")

    # -- scheduler ----------------------------------------------------------

    def drain(self) -> None:
        while self.queue:
            src, dst, data = self.queue.popleft()
            node = self.nodes.get(dst)
            if node is None:
                continue  # compromised or unknown endpoint: adversary already saw it
            try:
                parsed = Frame.from_bytes(data)
            except FormatError:
                node.note_error("malformed frame")
                continue
            node.receive(src, parsed)

    def execute(self, runs: int) -> RunReport:
        rp = self.nodes["rp"]
        for run in range(1, runs + 1):
            self.run = run
            outcome = RunOutcome(run)
            self.outcomes.append(outcome)
            for node in self.nodes.values():
                node.begin(outcome)
            self.nodes[self.initiator].start()
            self.drain()
            session = rp.session
            if isinstance(session.state, AwaitingResult):
                # quiescent with no result: let the step budget run out
                if session.state.deadline is not None:
                    self.step = max(self.step, int(session.state.deadline) + 1)
                session.poll()
            outcome.rp_state = session.state
        return RunReport(self.topology.variant, self.topology, self.events, self.outcomes, self.transcript)


class Node:
    def __init__(self, net: Network, name: str) -> None:
        self.net = net
        self.name = name
        self.outcome: Optional[RunOutcome] = None

    def begin(self, outcome: RunOutcome) -> None:
        self.outcome = outcome

    def start(self) -> None:
        raise ConfigError(f"{self.name} cannot initiate a run")

    def note_error(self, text: str) -> None:
        pass

    def receive(self, src: str, f: Frame) -> None:
        raise NotImplementedError


# -- pre-shared-key variant ---------------------------------------------------

class LpmRpNode(Node):
    def __init__(self, net: Network, rng: DeterministicRng) -> None:
        super().__init__(net, "rp")
        topo = net.topology
        peer = topo.attesters[topo.rp_peer]
        self.rng = rng
        self.session = RpSession(peer.ka, topo.kv, peer.id, timeout=RP_STEP_BUDGET,
                                 clock=net.clock, observer=net.observer("rp"))

    def start(self) -> None:
        if self.session.done:
            self.session.reset()
        cha = self.session.create_challenge(self.rng)
        self.net.send("rp", self.net.topology.rp_peer, MsgType.CHALLENGE, cha)

    def receive(self, src: str, f: Frame) -> None:
        if f.type is MsgType.RESULT_TO_RP and isinstance(self.session.state, AwaitingResult):
            # key release after the verdict is demo-only (apcr.demo)
            try:
                self.session.process_result(f.payload)
            except RpRejected:
                pass


class LpmAttesterNode(Node):
    def __init__(self, net: Network, name: str, rng: DeterministicRng) -> None:
        super().__init__(net, name)
        keys = net.topology.attesters[name]
        self.keys = keys
        self.rng = rng
        self.session = AttesterSession(keys.ka, keys.signer, net.topology.verifier_kem.public, keys.tee,
                                       observer=net.observer(name))
        self.reply_to = "rp"

    def note_error(self, text: str) -> None:
        self.outcome.attester_errors.append(f"{self.name}: {text}")

    def receive(self, src: str, f: Frame) -> None:
        if f.type is MsgType.CHALLENGE:
            self.session.reset()
            self.reply_to = src
            try:
                ev = self.session.handle_challenge(f.payload, lambda: self.keys.metrics, self.rng)
            except ApcrError as exc:
                self.note_error(str(exc))
                return
            self.net.send(self.name, "verifier", MsgType.EVIDENCE, ev.to_bytes())
        elif f.type is MsgType.RESULT_TO_ATTESTER:
            try:
                res = self.session.forward_result(f.payload)
            except ApcrError as exc:
                self.note_error(str(exc))
                return
            self.net.send(self.name, self.reply_to, MsgType.RESULT_TO_RP, res)


class LpmVerifierNode(Node):
    def __init__(self, net: Network, rng: DeterministicRng) -> None:
        super().__init__(net, "verifier")
        topo = net.topology
        self.rng = rng
        self.ctx = VerifierContext(topo.verifier_kem, topo.kv, topo.trust_records(), topo.policy,
                                   clock=lambda: EPOCH + net.step, observer=net.observer("verifier"))

    def receive(self, src: str, f: Frame) -> None:
        if f.type is not MsgType.EVIDENCE:
            return
        try:
            res = self.ctx.process_evidence(f.payload, rng=self.rng)
        except VerifierAbort as abort:
            self.outcome.verifier_aborts.append(abort)
            return
        self.net.send("verifier", src, MsgType.RESULT_TO_ATTESTER, res)


def _build_lpm(net: Network, root: DeterministicRng) -> None:
    net.initiator = "rp"
    net.nodes["rp"] = LpmRpNode(net, root.fork("rp"))
    net.nodes["verifier"] = LpmVerifierNode(net, root.fork("verifier"))
    for name in net.topology.attesters:
        if name not in net.topology.compromised:
            net.nodes[name] = LpmAttesterNode(net, name, root.fork(f"node:{name}"))


# -- key-distribution variant -------------------------------------------------

class KdcRpNode(Node):
    def __init__(self, net: Network, rng: DeterministicRng) -> None:
        super().__init__(net, "rp")
        self.rng = rng
        self.session = KdcRpSession(net.topology.kv, timeout=RP_STEP_BUDGET, clock=net.clock,
                                    observer=net.observer("rp"))

    def receive(self, src: str, f: Frame) -> None:
        if f.type is MsgType.KDC_HASH:
            if self.session.done:
                self.session.reset()
            if len(f.payload) != 32 or isinstance(self.session.state, AwaitingResult):
                return
            cha = self.session.create_challenge(f.payload, self.rng)
            self.net.send("rp", src, MsgType.KDC_CHALLENGE, cha)
        elif f.type is MsgType.KDC_RESULT_TO_RP and isinstance(self.session.state, AwaitingResult):
            try:
                self.session.finish(f.payload)
            except RpRejected:
                pass


class KdcAttesterNode(Node):
    def __init__(self, net: Network, name: str, rng: DeterministicRng) -> None:
        super().__init__(net, name)
        topo = net.topology
        self.keys = topo.attesters[name]
        self.rng = rng
        self.session = KdcAttesterSession(self.keys.signer, self.keys.kem, topo.verifier_signer.public,
                                          topo.verifier_kem.public, observer=net.observer(name))
        self.reply_to = "rp"

    def note_error(self, text: str) -> None:
        self.outcome.attester_errors.append(f"{self.name}: {text}")

    def start(self) -> None:
        self.session.reset()
        self.net.send(self.name, "rp", MsgType.KDC_HASH, self.session.announce())

    def receive(self, src: str, f: Frame) -> None:
        try:
            if f.type is MsgType.KDC_CHALLENGE:
                self.reply_to = src
                ev = self.session.handle_challenge(f.payload, lambda: self.keys.metrics, self.rng)
                self.net.send(self.name, "verifier", MsgType.KDC_EVIDENCE, ev.to_bytes())
            elif f.type is MsgType.KDC_RESULT_TO_ATTESTER:
                res_rp = self.session.unwrap(f.payload)
                self.outcome.attester_key = self.session.session_key
                self.net.send(self.name, self.reply_to, MsgType.KDC_RESULT_TO_RP, res_rp)
        except ApcrError as exc:
            self.note_error(f"{type(exc).__name__}: {exc}")


class KdcVerifierNode(Node):
    def __init__(self, net: Network, rng: DeterministicRng) -> None:
        super().__init__(net, "verifier")
        topo = net.topology
        self.rng = rng
        self.ctx = KdcVerifierContext(topo.verifier_signer, topo.verifier_kem, topo.kv, topo.trust_records(),
                                      topo.policy, clock=lambda: EPOCH + net.step,
                                      observer=net.observer("verifier"))

    def receive(self, src: str, f: Frame) -> None:
        if f.type is not MsgType.KDC_EVIDENCE:
            return
        try:
            msg = self.ctx.process_evidence(f.payload, rng=self.rng)
        except VerifierAbort as abort:
            self.outcome.verifier_aborts.append(abort)
            return
        self.net.send("verifier", src, MsgType.KDC_RESULT_TO_ATTESTER, msg.to_bytes())


def _build_kdc(net: Network, root: DeterministicRng) -> None:
    topo = net.topology
    net.initiator = topo.rp_peer
    net.nodes["rp"] = KdcRpNode(net, root.fork("rp"))
    net.nodes["verifier"] = KdcVerifierNode(net, root.fork("verifier"))
    for name in topo.attesters:
        if name not in topo.compromised:
            net.nodes[name] = KdcAttesterNode(net, name, root.fork(f"node:{name}"))
    if topo.rp_peer not in net.nodes:
        raise ConfigError("kdc runs are initiated by the RP's peer, which must be honest")


def run_scenario(topology: Topology, script: Optional[AdversaryScript] = None, variant: Optional[str] = None,
                 runs: int = 1) -> RunReport:
    """Run ``runs`` protocol runs back to back under ``script``."""
    if variant is not None and variant != topology.variant:
        raise ConfigError(f"topology built for {topology.variant!r}, asked to run {variant!r}")
    if topology.rp_peer not in topology.attesters:
        raise ConfigError(f"unknown rp peer {topology.rp_peer!r}")
    return Network(topology, script or AdversaryScript()).execute(runs)
