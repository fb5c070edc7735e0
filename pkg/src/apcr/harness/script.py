"""Adversary scripts: ordered match -> action rules.

Text form, one rule per line::

    # comment
    on d 1: drop
    on d 2: replay 3
    on a *: modify 10 0x01
    on a 1: reroute alice
    on a 1: reflect d
    on 0xA2 1: duplicate
    on b 1: inject a20003aabbcc

``<msg-type>`` is a protocol letter of the active variant (a, b, ...), a
``MsgType`` name (``challenge``, ``result_to_rp``) or a hex type byte.
``<occurrence#>`` counts honest sends of that type from 1, or ``*``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Optional, Union

from ..errors import ConfigError
from ..wire import LETTERS, MsgType


@dataclass(frozen=True)
class Deliver:
    pass


@dataclass(frozen=True)
class Drop:
    pass


@dataclass(frozen=True)
class Replay:
    entry: int


@dataclass(frozen=True)
class Modify:
    index: int
    mask: int


@dataclass(frozen=True)
class Inject:
    raw: bytes


@dataclass(frozen=True)
class Reroute:
    to: str


@dataclass(frozen=True)
class Duplicate:
    pass


@dataclass(frozen=True)
class Reflect:
    as_type: MsgType


@dataclass(frozen=True)
class Forge:
    """Python-only action: ``fn(view, entry)`` returns a raw frame or None."""

    fn: Callable[[Any, Any], Optional[bytes]]
    label: str = "forge"


Action = Union[Deliver, Drop, Replay, Modify, Inject, Reroute, Duplicate, Reflect, Forge]


@dataclass(frozen=True)
class Rule:
    msg_type: MsgType
    occurrence: Optional[int]  # None matches every occurrence
    action: Action

    def matches(self, msg_type: Optional[MsgType], occurrence: int) -> bool:
        return msg_type == self.msg_type and (self.occurrence is None or self.occurrence == occurrence)


@dataclass
class AdversaryScript:
    rules: list[Rule] = field(default_factory=list)

    def action_for(self, msg_type: Optional[MsgType], occurrence: int) -> Action:
        for rule in self.rules:
            if rule.matches(msg_type, occurrence):
                return rule.action
        return Deliver()

    def __add__(self, other: "AdversaryScript") -> "AdversaryScript":
        return AdversaryScript(self.rules + other.rules)

    def to_text(self, variant: str = "lpm") -> str:
        names = {v: k for k, v in LETTERS[variant].items()}
        lines = []
        for r in self.rules:
            kind = names.get(r.msg_type, f"0x{int(r.msg_type):02X}")
            occ = "*" if r.occurrence is None else str(r.occurrence)
            lines.append(f"on {kind} {occ}: {_action_text(r.action, names)}")
        return "\n".join(lines) + ("\n" if lines else "")


def _action_text(a: Action, names: dict) -> str:
    if isinstance(a, Deliver):
        return "deliver"
    if isinstance(a, Drop):
        return "drop"
    if isinstance(a, Replay):
        return f"replay {a.entry}"
    if isinstance(a, Modify):
        return f"modify {a.index} 0x{a.mask:02x}"
    if isinstance(a, Inject):
        return f"inject {a.raw.hex()}"
    if isinstance(a, Reroute):
        return f"reroute {a.to}"
    if isinstance(a, Duplicate):
        return "duplicate"
    if isinstance(a, Reflect):
        return f"reflect {names.get(a.as_type, f'0x{int(a.as_type):02X}')}"
    raise ConfigError(f"{a!r} has no text form")


def parse_msg_type(token: str, variant: str) -> MsgType:
    token = token.strip()
    letters = LETTERS.get(variant)
    if letters is None:
        raise ConfigError(f"unknown variant {variant!r}")
    if token.lower() in letters:
        return letters[token.lower()]
    if token.upper() in MsgType.__members__:
        return MsgType[token.upper()]
    try:
        return MsgType(int(token, 16) if token.lower().startswith("0x") else int(token))
    except ValueError:
        raise ConfigError(f"unknown message type {token!r}") from None


def _int(token: str) -> int:
    try:
        return int(token, 0)
    except ValueError:
        raise ConfigError(f"expected an integer, got {token!r}") from None


_RULE = re.compile(r"^on\s+(\S+)\s+(\*|\d+)\s*:\s*(\w[\w-]*)\s*(.*)$")


def parse_script(text: str, variant: str = "lpm") -> AdversaryScript:
    rules = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        m = _RULE.match(line)
        if not m:
            raise ConfigError(f"line {lineno}: cannot parse {line!r}")
        kind, occ, verb, rest = m.groups()
        msg_type = parse_msg_type(kind, variant)
        occurrence = None if occ == "*" else int(occ)
        if occurrence is not None and occurrence < 1:
            raise ConfigError(f"line {lineno}: occurrences count from 1")
        args = rest.split()
        verb = verb.lower()
        try:
            if verb == "deliver" and not args:
                action: Action = Deliver()
            elif verb == "drop" and not args:
                action = Drop()
            elif verb == "duplicate" and not args:
                action = Duplicate()
            elif verb == "replay" and len(args) == 1:
                action = Replay(_int(args[0]))
                if action.entry < 0:
                    raise ConfigError("entry index must be non-negative")
            elif verb == "modify" and len(args) == 2:
                action = Modify(_int(args[0]), _int(args[1]))
                if action.index < 0 or not 0 < action.mask < 256:
                    raise ConfigError("modify needs index >= 0 and mask in 1..255")
            elif verb == "inject" and len(args) == 1:
                action = Inject(bytes.fromhex(args[0]))
            elif verb == "reroute" and len(args) == 1:
                action = Reroute(args[0])
            elif verb == "reflect" and len(args) == 1:
                action = Reflect(parse_msg_type(args[0], variant))
            else:
                raise ConfigError(f"bad action {verb!r} with {len(args)} argument(s)")
        except (ConfigError, ValueError) as exc:
            raise ConfigError(f"line {lineno}: {exc}") from None
        rules.append(Rule(msg_type, occurrence, action))
    return AdversaryScript(rules)


def load_script(path: Union[str, Path], variant: str = "lpm") -> AdversaryScript:
    return parse_script(Path(path).read_text(), variant)
