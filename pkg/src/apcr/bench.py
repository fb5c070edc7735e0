"""Timing experiments for the lock-and-key demo.

Three modes, each timed at the attester from key request to key material:

1. baseline: request and an unconditional key response, no attestation
2. full: the complete protocol run (demo_run)
3. comm-only: the exact message sequence of mode 2 with random payloads,
   no crypto and no decoding

processing overhead = mean(2) - mean(3).
"""

from __future__ import annotations

import statistics
import threading
import time
from dataclasses import dataclass, field
from typing import Optional

from .crypto import system_rng
from .demo import ChannelFactory, KeyStore, demo_run, udp_channels
from .net import Channel, CountingChannel
from .wire import KEY_MATERIAL_LEN, KEY_REQUEST_LEN, Frame, MsgType

# (sender, receiver, type, payload length)
Hop = tuple[str, str, MsgType, int]


@dataclass
class BenchReport:
    repetitions: int
    variant: str
    baseline_ms: list[float]
    full_ms: list[float]
    comm_ms: list[float]
    full_messages: list[Hop] = field(default_factory=list)
    comm_messages: list[Hop] = field(default_factory=list)

    @property
    def mean_baseline(self) -> float:
        return statistics.fmean(self.baseline_ms)

    @property
    def mean_full(self) -> float:
        return statistics.fmean(self.full_ms)

    @property
    def mean_comm(self) -> float:
        return statistics.fmean(self.comm_ms)

    @property
    def overhead(self) -> float:
        return self.mean_full - self.mean_comm

    def as_dict(self) -> dict:
        return {"variant": self.variant, "repetitions": self.repetitions,
                "mean_ms": {"baseline": self.mean_baseline, "full": self.mean_full, "comm_only": self.mean_comm},
                "processing_overhead_ms": self.overhead,
                "messages": [[s, d, t.name, n] for s, d, t, n in self.full_messages]}

    def text(self) -> str:
        return "\n".join([
            f"variant {self.variant}, {self.repetitions} repetitions",
            f"(1) baseline  mean {self.mean_baseline:8.3f} ms",
            f"(2) full      mean {self.mean_full:8.3f} ms",
            f"(3) comm-only mean {self.mean_comm:8.3f} ms",
            f"processing overhead (2)-(3) {self.overhead:8.3f} ms",
            f"messages per run: {len(self.full_messages)}, bytes: {sum(h[3] for h in self.full_messages)}",
        ])


def _hops(result) -> list[Hop]:
    """Message sequence of one full run, reconstructed from the endpoint logs."""
    hops: list[Hop] = []
    for who, log in (("attester", result.attester.traffic), ("rp", result.rp.traffic)):
        for t, n in log.sent:
            hops.append((who, _dest(who, t), t, n))
    verifier_sent = [(t, n) for t, n in result.attester.traffic.received
                     if t in (MsgType.RESULT_TO_ATTESTER, MsgType.KDC_RESULT_TO_ATTESTER)]
    hops += [("verifier", "attester", t, n) for t, n in verifier_sent]
    order = {t: i for i, t in enumerate(_ORDER)}
    return sorted(hops, key=lambda h: order[h[2]])


_ORDER = [MsgType.KEY_REQUEST, MsgType.KDC_HASH, MsgType.CHALLENGE, MsgType.KDC_CHALLENGE, MsgType.EVIDENCE,
          MsgType.KDC_EVIDENCE, MsgType.RESULT_TO_ATTESTER, MsgType.KDC_RESULT_TO_ATTESTER, MsgType.RESULT_TO_RP,
          MsgType.KDC_RESULT_TO_RP, MsgType.KEY_MATERIAL]


def _dest(sender: str, t: MsgType) -> str:
    if sender == "rp":
        return "attester"
    if t in (MsgType.EVIDENCE, MsgType.KDC_EVIDENCE):
        return "verifier"
    return "rp"


def replay_hops(hops: list[Hop], channels: ChannelFactory, timeout: float = 2.0) -> tuple[float, list[Hop]]:
    """Move random payloads along ``hops``; returns (elapsed ms, hops seen)."""
    names = sorted({h[0] for h in hops} | {h[1] for h in hops})
    chans = {n: CountingChannel(channels(n)) for n in names}
    addr = {n: c.address for n, c in chans.items()}
    seen: list[Hop] = []
    lock = threading.Lock()
    errors: list[BaseException] = []

    def play(me: str) -> None:
        try:
            for src, dst, t, n in hops:
                if src == me:
                    chans[me].send(Frame(t, system_rng(n)), addr[dst])
                elif dst == me:
                    f = chans[me].recv(timeout)
                    with lock:
                        seen.append((src, dst, f.type, len(f.payload)))
        except BaseException as exc:  # surfaced below
            errors.append(exc)

    others = [threading.Thread(target=play, args=(n,)) for n in names if n != "attester"]
    try:
        for t in others:
            t.start()
        start = time.perf_counter()
        play("attester")
        elapsed = (time.perf_counter() - start) * 1000
        for t in others:
            t.join()
    finally:
        for c in chans.values():
            c.close()
    if errors:
        raise errors[0]
    return elapsed, seen


BASELINE: list[Hop] = [("attester", "rp", MsgType.KEY_REQUEST, KEY_REQUEST_LEN),
                       ("rp", "attester", MsgType.KEY_MATERIAL, KEY_MATERIAL_LEN)]


def bench_run(store: KeyStore, repetitions: int = 10, variant: str = "lpm", timeout: float = 2.0,
              channels: Optional[ChannelFactory] = None) -> BenchReport:
    channels = channels or udp_channels()
    baseline, full, comm = [], [], []
    full_hops: list[Hop] = []
    comm_hops: list[Hop] = []
    for _ in range(repetitions):
        ms, _seen = replay_hops(BASELINE, channels, timeout)
        baseline.append(ms)
        result = demo_run(store, variant, timeout, channels)
        full.append(result.elapsed_ms)
        if result.exit_status != 0:
            raise RuntimeError("full protocol run did not release the key")
        full_hops = _hops(result)
        ms, seen = replay_hops(full_hops, channels, timeout)
        comm.append(ms)
        comm_hops = sorted(seen, key=lambda h: {t: i for i, t in enumerate(_ORDER)}[h[2]])
    return BenchReport(repetitions, variant, baseline, full, comm, full_hops, comm_hops)
