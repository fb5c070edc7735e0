"""Datagram transport for protocol frames.

``UdpChannel`` and ``MemoryChannel`` share one interface:

    send(frame, to=None)   frame is raw bytes or a Frame
    recv(timeout) -> Frame the sender is left in ``last_sender``

One frame per datagram. Nothing is reassembled, retransmitted or encrypted
here; the protocol messages protect themselves.
"""

from __future__ import annotations

import os
import queue
import socket
import threading
from dataclasses import dataclass, field
from typing import Any, Hashable, Optional, Union

from .errors import ChannelTimeout, ConfigError, FormatError
from .wire import MAX_FRAME, Frame, MsgType

Address = Hashable


def _raw(data: Union[bytes, Frame]) -> bytes:
    raw = data.to_bytes() if isinstance(data, Frame) else bytes(data)
    if len(raw) > MAX_FRAME:
        raise FormatError(f"{len(raw)}-byte frame exceeds {MAX_FRAME}")
    return raw


class Channel:
    address: Address
    peer: Optional[Address] = None
    last_sender: Optional[Address] = None

    def send(self, data: Union[bytes, Frame], to: Optional[Address] = None) -> None:
        raise NotImplementedError

    def recv(self, timeout: Optional[float] = None) -> Frame:
        raise NotImplementedError

    def close(self) -> None:
        pass

    def __enter__(self):
        return self

    def __exit__(self, *exc) -> None:
        self.close()

    def _target(self, to: Optional[Address]) -> Address:
        target = to if to is not None else self.peer
        if target is None:
            raise ConfigError("no destination and no default peer")
        return target


def parse_address(text: str, default_host: str = "127.0.0.1") -> tuple[str, int]:
    """``host:port``, ``[v6]:port`` or a bare port."""
    text = text.strip()
    if text.isdigit():
        return default_host, int(text)
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ConfigError(f"bad address {text!r}, expected host:port")
    return host.strip("[]") or default_host, int(port)


def address_from_env(name: str, fallback: str) -> tuple[str, int]:
    return parse_address(os.environ.get(name, fallback))


class UdpChannel(Channel):
    def __init__(self, listen: Union[str, tuple[str, int]] = ("127.0.0.1", 0),
                 peer: Union[str, tuple[str, int], None] = None) -> None:
        if isinstance(listen, str):
            listen = parse_address(listen)
        family = socket.AF_INET6 if ":" in listen[0] else socket.AF_INET
        self._sock = socket.socket(family, socket.SOCK_DGRAM)
        self._sock.bind(listen)
        self.address = self._sock.getsockname()[:2]
        self.peer = parse_address(peer) if isinstance(peer, str) else peer
        self.last_sender = None

    def send(self, data: Union[bytes, Frame], to: Optional[Address] = None) -> None:
        raw = _raw(data)
        self._sock.sendto(raw, self._target(to))

    def recv(self, timeout: Optional[float] = None) -> Frame:
        self._sock.settimeout(timeout)
        try:
            # one byte more than allowed so oversize datagrams are noticed
            raw, sender = self._sock.recvfrom(MAX_FRAME + 1)
        except socket.timeout:
            raise ChannelTimeout(f"no datagram within {timeout}s") from None
        self.last_sender = sender[:2]
        return Frame.from_bytes(raw)

    def close(self) -> None:
        self._sock.close()


@dataclass
class MemoryHub:
    """In-process datagram switch; addresses are arbitrary hashables."""

    boxes: dict[Address, "queue.Queue[tuple[Address, bytes]]"] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)

    def channel(self, address: Address, peer: Optional[Address] = None) -> "MemoryChannel":
        with self.lock:
            if address in self.boxes:
                raise ConfigError(f"address {address!r} already bound")
            self.boxes[address] = queue.Queue()
        return MemoryChannel(self, address, peer)

    def deliver(self, src: Address, dst: Address, raw: bytes) -> None:
        box = self.boxes.get(dst)
        if box is not None:  # unbound destination: datagram is lost
            box.put((src, raw))


class MemoryChannel(Channel):
    def __init__(self, hub: MemoryHub, address: Address, peer: Optional[Address] = None) -> None:
        self.hub = hub
        self.address = address
        self.peer = peer
        self.last_sender = None

    @classmethod
    def pair(cls, a: Address = "a", b: Address = "b") -> tuple["MemoryChannel", "MemoryChannel"]:
        hub = MemoryHub()
        return hub.channel(a, b), hub.channel(b, a)

    def send(self, data: Union[bytes, Frame], to: Optional[Address] = None) -> None:
        self.hub.deliver(self.address, self._target(to), _raw(data))

    def recv(self, timeout: Optional[float] = None) -> Frame:
        try:
            sender, raw = self.hub.boxes[self.address].get(timeout=timeout)
        except queue.Empty:
            raise ChannelTimeout(f"no datagram within {timeout}s") from None
        self.last_sender = sender
        return Frame.from_bytes(raw)

    def close(self) -> None:
        with self.hub.lock:
            self.hub.boxes.pop(self.address, None)


@dataclass
class TrafficLog:
    """Per-endpoint message accounting, payload bytes only."""

    sent: list[tuple[MsgType, int]] = field(default_factory=list)
    received: list[tuple[MsgType, int]] = field(default_factory=list)

    @property
    def bytes_sent(self) -> int:
        return sum(n for _, n in self.sent)

    @property
    def bytes_received(self) -> int:
        return sum(n for _, n in self.received)


class CountingChannel(Channel):
    """Wraps a channel and logs every frame's type and payload size."""

    def __init__(self, inner: Channel, log: Optional[TrafficLog] = None) -> None:
        self.inner = inner
        self.log = log if log is not None else TrafficLog()

    @property
    def address(self) -> Any:  # type: ignore[override]
        return self.inner.address

    @property
    def last_sender(self) -> Any:  # type: ignore[override]
        return self.inner.last_sender

    def send(self, data: Union[bytes, Frame], to: Optional[Address] = None) -> None:
        f = data if isinstance(data, Frame) else Frame.from_bytes(_raw(data))
        self.inner.send(f, to)
        self.log.sent.append((f.type, len(f.payload)))

    def recv(self, timeout: Optional[float] = None) -> Frame:
        f = self.inner.recv(timeout)
        self.log.received.append((f.type, len(f.payload)))
        return f

    def close(self) -> None:
        self.inner.close()
