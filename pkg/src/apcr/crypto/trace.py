"""Opt-in call log of primitive invocations.

Used by tests to observe the order in which a role calls into the crypto
layer (e.g. signature check before evidence decryption).
"""

from __future__ import annotations

from contextlib import contextmanager
from contextvars import ContextVar
from typing import Iterator

_calls: ContextVar[list[str] | None] = ContextVar("apcr_crypto_calls", default=None)


def note(op: str) -> None:
    calls = _calls.get()
    if calls is not None:
        calls.append(op)


@contextmanager
def recording() -> Iterator[list[str]]:
    """Collect the names of primitive calls made inside the block."""
    calls: list[str] = []
    token = _calls.set(calls)
    try:
        yield calls
    finally:
        _calls.reset(token)
