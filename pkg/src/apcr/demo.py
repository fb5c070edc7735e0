"""Lock-and-key demo over real channels.

The attester (a phone) asks the key tag (RP) for a door key. The request
triggers one protocol run; on Trust the RP releases the door key sealed under
K_A (lpm) or K_S (kdc). Otherwise it sends a random blob of the same length.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional

from .crypto import (
    DeterministicRng,
    KemKeyPair,
    SigKeyPair,
    SoftwareTee,
    SymKey,
    attester_id,
    hash_bytes,
    rand_nonce,
    system_rng,
)
from .crypto.symmetric import EntropySource
from .errors import ApcrError, ChannelTimeout, ConfigError, FormatError, IntegrityError
from .kdc import KdcAttesterSession, KdcRpSession, KdcVerifierContext
from .net import Channel, CountingChannel, MemoryHub, TrafficLog
from .roles import (
    Accepted,
    AttesterSession,
    Decision,
    Policy,
    RpRejected,
    RpSession,
    TrustedAttester,
    VerifierAbort,
    VerifierContext,
)
from .wire import (
    DOOR_KEY_LEN,
    KEY_MATERIAL_LEN,
    Frame,
    Metrics,
    MsgType,
    decode_key_material,
    decode_key_request,
    encode_key_material,
    encode_key_request,
)

log = logging.getLogger("apcr.demo")

# fixture value, not real key material
DOOR_KEY = hash_bytes(b"door-key/0") + hash_bytes(b"door-key/1") + hash_bytes(b"door-key/2")
assert len(DOOR_KEY) == DOOR_KEY_LEN

APP_ID = 0x01

STEPS = {
    "lpm": {"rp-cha": "(1)-(2)", "att-ev": "(3)-(7)", "ver": "(8)-(15)", "att-fwd": "(15)", "rp-res": "(16)-(18)"},
    "kdc": {"att-h": "(a)", "rp-cha": "(1)-(2)", "att-ev": "(3)-(5)", "ver": "(6)-(14)", "att-fwd": "(15)-(16)",
            "rp-res": "(17)-(19)"},
}


# -- key files --------------------------------------------------------------

@dataclass
class KeyStore:
    """Pre-provisioned key files: one directory, each role reads its part."""

    root: Path

    def _hex(self, name: str, length: Optional[int] = None) -> bytes:
        path = self.root / name
        try:
            raw = bytes.fromhex(path.read_text().strip())
        except FileNotFoundError:
            raise ConfigError(f"missing key file {path}") from None
        except ValueError:
            raise ConfigError(f"{path} is not hex") from None
        if length is not None and len(raw) != length:
            raise ConfigError(f"{path}: expected {length} bytes, found {len(raw)}")
        return raw

    def _json(self, name: str, convert: Callable[[dict], Any]) -> Any:
        path = self.root / name
        try:
            return convert(json.loads(path.read_text()))
        except FileNotFoundError:
            raise ConfigError(f"missing file {path}") from None
        except (ValueError, KeyError, TypeError, AttributeError) as exc:
            raise ConfigError(f"{path}: {exc}") from None

    def kv(self) -> SymKey:
        return SymKey(self._hex("kv.key", 16))

    def ka(self) -> SymKey:
        return SymKey(self._hex("ka.key", 16))

    def attester_id(self) -> bytes:
        return self._hex("attester.id", 16)

    def door_key(self) -> bytes:
        return self._hex("door.key", DOOR_KEY_LEN)

    def attester_signer(self) -> SigKeyPair:
        return SigKeyPair.from_seed(self._hex("attester.sig", 32))

    def attester_kem(self) -> KemKeyPair:
        return KemKeyPair.from_seed(self._hex("attester.kem", 32))

    def attester_tee(self) -> SoftwareTee:
        return SoftwareTee(SigKeyPair.from_seed(self._hex("attester.tee", 32)))

    def attester_metrics(self) -> Metrics:
        return self._json("metrics.json", lambda d: Metrics.of({k: bytes.fromhex(v) for k, v in d.items()}))

    def attester_public(self) -> TrustedAttester:
        return self._json("attester.pub.json", lambda p: TrustedAttester(
            bytes.fromhex(p["sig"]), bytes.fromhex(p["tee"]), bytes.fromhex(p["kem"])))

    def verifier_signer(self) -> SigKeyPair:
        return SigKeyPair.from_seed(self._hex("verifier.sig", 32))

    def verifier_kem(self) -> KemKeyPair:
        return KemKeyPair.from_seed(self._hex("verifier.kem", 32))

    def verifier_public(self) -> tuple[bytes, bytes]:
        return self._json("verifier.pub.json", lambda p: (bytes.fromhex(p["sig"]), bytes.fromhex(p["kem"])))

    def check(self, variant: str = "lpm") -> None:
        """Load every file the three roles need; raises ConfigError."""
        self.kv(), self.door_key(), self.attester_signer(), self.attester_kem(), self.attester_metrics()
        self.attester_public(), self.verifier_signer(), self.verifier_kem(), self.verifier_public()
        if variant == "lpm":
            self.ka(), self.attester_id(), self.attester_tee()


def provision(root: Path, rng: EntropySource = system_rng, *, claims: tuple[str, ...] = (
        "boot-hash", "firmware-version", "tee-config"), tamper: bool = False) -> KeyStore:
    """Write a full key set plus a matching policy to ``root``.

    With ``tamper`` the attester's measured metrics differ from the policy in
    one claim, so the verifier answers contraindicated.
    """
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    kv, ka = SymKey.generate(rng), SymKey.generate(rng)
    a_sig, a_kem, a_tee = SigKeyPair.generate(rng), KemKeyPair.generate(rng), SigKeyPair.generate(rng)
    v_sig, v_kem = SigKeyPair.generate(rng), KemKeyPair.generate(rng)
    reference = {c: rng(32) for c in claims}
    measured = dict(reference)
    if tamper:
        first = claims[0]
        measured[first] = bytes(b ^ 0xFF for b in reference[first])
    files = {
        "kv.key": kv.raw.hex(),
        "ka.key": ka.raw.hex(),
        "attester.id": attester_id(hash_bytes(ka.raw), a_sig.public).hex(),
        "door.key": DOOR_KEY.hex(),
        "attester.sig": a_sig.seed().hex(),
        "attester.kem": a_kem.seed().hex(),
        "attester.tee": a_tee.seed().hex(),
        "verifier.sig": v_sig.seed().hex(),
        "verifier.kem": v_kem.seed().hex(),
        "attester.pub.json": json.dumps({"sig": a_sig.public.hex(), "kem": a_kem.public.hex(),
                                         "tee": a_tee.public.hex()}),
        "verifier.pub.json": json.dumps({"sig": v_sig.public.hex(), "kem": v_kem.public.hex()}),
        "metrics.json": json.dumps({k: v.hex() for k, v in measured.items()}),
    }
    for name, text in files.items():
        (root / name).write_text(text + "\n")
    Policy.of(reference).dump(root / "policy.json")
    return KeyStore(root)


# -- endpoints --------------------------------------------------------------

@dataclass
class RpOutcome:
    decision: Optional[Decision] = None
    reject: Optional[str] = None
    released: bool = False
    traffic: TrafficLog = field(default_factory=TrafficLog)

    @property
    def trusted(self) -> bool:
        return self.decision is Decision.TRUST


@dataclass
class AttesterOutcome:
    door_key: Optional[bytes] = None
    key_material_len: int = 0
    error: Optional[str] = None
    traffic: TrafficLog = field(default_factory=TrafficLog)

    @property
    def ok(self) -> bool:
        return self.door_key is not None


def _recv_until(chan: Channel, wanted: set[MsgType], deadline: float) -> Frame:
    while True:
        left = deadline - time.monotonic()
        if left <= 0:
            raise ChannelTimeout("deadline passed")
        try:
            f = chan.recv(left)
        except FormatError as exc:
            log.warning("dropping malformed frame: %s", exc)
            continue
        if f.type in wanted:
            return f
        log.debug("ignoring %s", f.type.name)


def run_rp(store: KeyStore, chan: Channel, variant: str = "lpm", timeout: float = 2.0,
           rng: EntropySource = system_rng, wait: Optional[float] = None) -> RpOutcome:
    """Serve one key request. ``wait`` bounds the wait for the request."""
    steps = STEPS[variant]
    chan = CountingChannel(chan)
    out = RpOutcome(traffic=chan.log)
    kv = store.kv()
    door = store.door_key()
    far = time.monotonic() + (wait if wait is not None else 1e9)
    f = _recv_until(chan, {MsgType.KEY_REQUEST}, far)
    attester = chan.last_sender
    app, _ = decode_key_request(f.payload)
    log.info("[rp] key request app=%d from %s", app, attester)
    if variant == "lpm":
        ka = store.ka()
        session = RpSession(ka, kv, store.attester_id(), timeout=timeout)
        chan.send(Frame(MsgType.CHALLENGE, session.create_challenge(rng)), attester)
        result_type = MsgType.RESULT_TO_RP
    else:
        hf = _recv_until(chan, {MsgType.KDC_HASH}, time.monotonic() + timeout)
        session = KdcRpSession(kv, timeout=timeout)
        chan.send(Frame(MsgType.KDC_CHALLENGE, session.create_challenge(hf.payload, rng)), attester)
        result_type = MsgType.KDC_RESULT_TO_RP
        ka = None
    log.info("[rp] step %s challenge sent", steps["rp-cha"])
    try:
        res = _recv_until(chan, {result_type}, time.monotonic() + timeout)
        verdict = session.process_result(res.payload) if variant == "lpm" else session.finish(res.payload)
        out.decision = verdict.decision
        key = ka if variant == "lpm" else verdict.session_key
        log.info("[rp] step %s verdict %s (%s)", steps["rp-res"], verdict.decision.value,
                 verdict.result.verdict.name.lower())
    except ChannelTimeout:
        out.reject = "timeout"
        log.info("[rp] step %s reject: timeout", steps["rp-res"])
    except RpRejected as exc:
        out.reject = exc.reason.value
        log.info("[rp] step %s reject: %s", steps["rp-res"], exc.reason.value)
    if out.trusted:
        blob = encode_key_material(door, key, rng)
        out.released = True
    else:
        blob = rng(KEY_MATERIAL_LEN)  # same length as a real release
    chan.send(Frame(MsgType.KEY_MATERIAL, blob), attester)
    log.info("[rp] key material %s (%d bytes); sent %d received %d", "released" if out.released else "dummy",
             len(blob), chan.log.bytes_sent, chan.log.bytes_received)
    return out


def run_attester(store: KeyStore, chan: Channel, rp, verifier, variant: str = "lpm", timeout: float = 2.0,
                 rng: EntropySource = system_rng) -> AttesterOutcome:
    steps = STEPS[variant]
    chan = CountingChannel(chan)
    out = AttesterOutcome(traffic=chan.log)
    signer, metrics = store.attester_signer(), store.attester_metrics()
    v_sig, v_kem = store.verifier_public()
    deadline = time.monotonic() + 3 * timeout
    chan.send(Frame(MsgType.KEY_REQUEST, encode_key_request(APP_ID, rand_nonce(rng))), rp)
    log.info("[attester] key request sent")
    try:
        if variant == "lpm":
            ka = store.ka()
            session = AttesterSession(ka, signer, v_kem, store.attester_tee())
            f = _recv_until(chan, {MsgType.CHALLENGE, MsgType.KEY_MATERIAL}, deadline)
            if f.type is MsgType.CHALLENGE:
                ev = session.handle_challenge(f.payload, lambda: metrics, rng)
                chan.send(Frame(MsgType.EVIDENCE, ev.to_bytes()), verifier)
                log.info("[attester] step %s evidence sent", steps["att-ev"])
                f = _recv_until(chan, {MsgType.RESULT_TO_ATTESTER, MsgType.KEY_MATERIAL}, deadline)
                if f.type is MsgType.RESULT_TO_ATTESTER:
                    chan.send(Frame(MsgType.RESULT_TO_RP, session.forward_result(f.payload)), rp)
                    log.info("[attester] step %s result forwarded", steps["att-fwd"])
                    f = _recv_until(chan, {MsgType.KEY_MATERIAL}, deadline)
            key = ka
        else:
            session = KdcAttesterSession(signer, store.attester_kem(), v_sig, v_kem)
            chan.send(Frame(MsgType.KDC_HASH, session.announce()), rp)
            log.info("[attester] step %s hash sent", steps["att-h"])
            f = _recv_until(chan, {MsgType.KDC_CHALLENGE, MsgType.KEY_MATERIAL}, deadline)
            if f.type is MsgType.KDC_CHALLENGE:
                ev = session.handle_challenge(f.payload, lambda: metrics, rng)
                chan.send(Frame(MsgType.KDC_EVIDENCE, ev.to_bytes()), verifier)
                log.info("[attester] step %s evidence sent", steps["att-ev"])
                f = _recv_until(chan, {MsgType.KDC_RESULT_TO_ATTESTER, MsgType.KEY_MATERIAL}, deadline)
                if f.type is MsgType.KDC_RESULT_TO_ATTESTER:
                    chan.send(Frame(MsgType.KDC_RESULT_TO_RP, session.unwrap(f.payload)), rp)
                    log.info("[attester] step %s result forwarded", steps["att-fwd"])
                    f = _recv_until(chan, {MsgType.KEY_MATERIAL}, deadline)
            key = session.session_key
        out.key_material_len = len(f.payload)
        if key is None:
            raise IntegrityError("no session key")
        out.door_key = decode_key_material(f.payload, key)
        log.info("[attester] door key received (%d bytes)", len(out.door_key))
    except (ApcrError, TimeoutError) as exc:
        out.error = f"{type(exc).__name__}: {exc}"
        log.info("[attester] no door key: %s", out.error)
    return out


def run_verifier(store: KeyStore, chan: Channel, variant: str = "lpm", sessions: Optional[int] = 1,
                 rng: EntropySource = system_rng, policy: Optional[Policy] = None,
                 idle_timeout: Optional[float] = None, stop: Optional[threading.Event] = None) -> list[str]:
    """Serve ``sessions`` evidence messages (None: until ``stop`` or idle)."""
    policy = policy or Policy.load(store.root / "policy.json")
    records = [store.attester_public()]
    if variant == "lpm":
        ctx = VerifierContext(store.verifier_kem(), store.kv(), records, policy)
        wanted, reply = MsgType.EVIDENCE, MsgType.RESULT_TO_ATTESTER
    else:
        ctx = KdcVerifierContext(store.verifier_signer(), store.verifier_kem(), store.kv(), records, policy)
        wanted, reply = MsgType.KDC_EVIDENCE, MsgType.KDC_RESULT_TO_ATTESTER
    outcomes = []
    while sessions is None or len(outcomes) < sessions:
        if stop is not None and stop.is_set():
            break
        try:
            f = chan.recv(idle_timeout if stop is None else 0.1)
        except ChannelTimeout:
            if stop is None:
                break
            continue
        except FormatError as exc:
            log.warning("[verifier] malformed frame: %s", exc)
            continue
        if f.type is not wanted:
            continue
        sender = chan.last_sender
        try:
            res = ctx.process_evidence(f.payload, rng=rng)
        except VerifierAbort as abort:
            log.info("[verifier] step (%d) abort: %s", abort.step, abort.reason.value)
            outcomes.append(abort.reason.value)
            continue
        payload = res if isinstance(res, bytes) else res.to_bytes()
        chan.send(Frame(reply, payload), sender)
        log.info("[verifier] step %s result sent (%d bytes)", STEPS[variant]["ver"], len(payload))
        outcomes.append("ok")
    return outcomes


# -- all three in one process -----------------------------------------------

@dataclass
class DemoResult:
    rp: RpOutcome
    attester: AttesterOutcome
    verifier: list[str]
    elapsed_ms: float = 0.0  # attester side, request to key material

    @property
    def exit_status(self) -> int:
        return 0 if self.rp.trusted and self.attester.ok else 1


ChannelFactory = Callable[[str], Channel]


def memory_channels() -> ChannelFactory:
    hub = MemoryHub()
    return lambda name: hub.channel(name)


def udp_channels(host: str = "127.0.0.1") -> ChannelFactory:
    from .net import UdpChannel
    return lambda name: UdpChannel((host, 0))


def demo_run(store: KeyStore, variant: str = "lpm", timeout: float = 2.0, channels: Optional[ChannelFactory] = None,
             seed: Optional[int] = None, policy: Optional[Policy] = None) -> DemoResult:
    """Run RP, attester and verifier on their own threads over ``channels``."""
    channels = channels or memory_channels()
    # fail here rather than inside an endpoint thread
    store.check(variant)
    policy = policy or Policy.load(store.root / "policy.json")
    root = DeterministicRng(seed) if seed is not None else None
    rngs = {n: (root.fork(n) if root else system_rng) for n in ("rp", "attester", "verifier")}
    chans = {n: channels(n) for n in ("rp", "attester", "verifier")}
    results: dict[str, object] = {}

    def rp():
        results["rp"] = run_rp(store, chans["rp"], variant, timeout, rngs["rp"], wait=3 * timeout)

    def verifier():
        results["verifier"] = run_verifier(store, chans["verifier"], variant, 1, rngs["verifier"], policy,
                                           idle_timeout=2 * timeout)

    threads = [threading.Thread(target=rp), threading.Thread(target=verifier)]
    try:
        for t in threads:
            t.start()
        start = time.perf_counter()
        results["attester"] = run_attester(store, chans["attester"], chans["rp"].address,
                                           chans["verifier"].address, variant, timeout, rngs["attester"])
        elapsed = (time.perf_counter() - start) * 1000
        for t in threads:
            t.join()
    finally:
        for c in chans.values():
            c.close()
    if "rp" not in results or "verifier" not in results:
        raise ApcrError("an endpoint thread died; see log")
    return DemoResult(results["rp"], results["attester"], results["verifier"], elapsed)
