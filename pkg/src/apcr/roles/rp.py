"""Relying-party state machine: challenge out, verdict in.

Uses symmetric primitives only.
"""

from __future__ import annotations

import time
from typing import Callable, Optional

from ..crypto import SymKey, ct_equal, rand_nonce, system_rng
from ..crypto.symmetric import EntropySource
from ..errors import FormatError, IntegrityError, NotIdle, StateError
from ..wire import decode_result, encode_challenge
from .common import (
    TERMINAL,
    Accepted,
    AwaitingResult,
    Idle,
    Observer,
    Rejected,
    RejectReason,
    RpRejected,
    Verdict,
    _quiet,
    validate_attestation_result,
)

DEFAULT_TIMEOUT = 30.0


class RpSession:
    """One relying party talking to one attester.

    ``timeout`` is in ``clock`` units; pass ``None`` to disable the deadline.
    A session runs one protocol run at a time; call :meth:`reset` after a
    terminal state to start the next one.
    """

    def __init__(self, ka: SymKey, kv: SymKey, attester_id: bytes, *,
                 timeout: Optional[float] = DEFAULT_TIMEOUT,
                 clock: Callable[[], float] = time.monotonic,
                 observer: Observer = _quiet) -> None:
        self.ka = ka
        self.kv = kv
        self.attester_id = bytes(attester_id)
        self.timeout = timeout
        self.clock = clock
        self.observer = observer
        self.state: object = Idle()

    def create_challenge(self, rng: EntropySource = system_rng) -> bytes:
        """Steps (1)-(2): draw c, seal (c, id_A) under K_V."""
        if not isinstance(self.state, Idle):
            raise NotIdle("a protocol run is already in flight")
        c = rand_nonce(rng)
        cha = encode_challenge(c, self.attester_id, self.kv, rng)
        deadline = None if self.timeout is None else self.clock() + self.timeout
        self.state = AwaitingResult(c, deadline)
        self.observer("relyingPartyBegins", c=c, id=self.attester_id, cha=cha)
        return cha

    def _reject(self, reason: RejectReason) -> RpRejected:
        self.state = Rejected(reason)
        return RpRejected(reason)

    def expired(self) -> bool:
        state = self.state
        return (isinstance(state, AwaitingResult) and state.deadline is not None
                and self.clock() > state.deadline)

    def poll(self) -> None:
        """Move an overdue run to Rejected(TIMEOUT)."""
        if self.expired():
            self._reject(RejectReason.TIMEOUT)

    def process_result(self, res: bytes) -> Verdict:
        """Steps (16)-(18). Always leaves the session in a terminal state."""
        state = self.state
        if not isinstance(state, AwaitingResult):
            raise StateError("no protocol run awaiting a result")
        if self.expired():
            raise self._reject(RejectReason.TIMEOUT)
        try:
            result, c_res, id_res = decode_result(res, self.kv)
        except IntegrityError:
            raise self._reject(RejectReason.TAMPER_OR_WRONG_VERIFIER) from None
        except FormatError:
            raise self._reject(RejectReason.MALFORMED) from None
        if not ct_equal(c_res, state.c):
            raise self._reject(RejectReason.REPLAY)
        if not ct_equal(id_res, self.attester_id):
            raise self._reject(RejectReason.WRONG_ATTESTER)
        verdict = Verdict(validate_attestation_result(result), result)
        self.state = Accepted(verdict)
        self.observer("relyingPartyAccepts", c=c_res, id=id_res, result=result)
        return verdict

    @property
    def done(self) -> bool:
        return isinstance(self.state, TERMINAL)

    def reset(self) -> None:
        if isinstance(self.state, AwaitingResult):
            raise StateError("cannot reset with a run in flight")
        self.state = Idle()
