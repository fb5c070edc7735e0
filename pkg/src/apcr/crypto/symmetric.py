"""Symmetric primitives: entropy, AES-CCM sealing, hashing and attester ids.

Everything a relying party needs lives here; nothing in this module touches
public-key cryptography.
"""

from __future__ import annotations

import hashlib
import hmac
import os
from dataclasses import dataclass
from typing import Callable, Union

from cryptography.exceptions import InvalidTag
from cryptography.hazmat.primitives.ciphers.aead import AESCCM

from ..errors import EntropyError, FormatError, IntegrityError
from .trace import note

KEY_LEN = 16
NONCE_LEN = 16
CCM_NONCE_LEN = 13
TAG_LEN = 10
AEAD_OVERHEAD = CCM_NONCE_LEN + TAG_LEN
DIGEST_LEN = 32
ID_LEN = 16

EntropySource = Callable[[int], bytes]


def system_rng(n: int) -> bytes:
    """Default entropy source backed by the operating system CSPRNG."""
    try:
        return os.urandom(n)
    except NotImplementedError as exc:  # pragma: no cover - platform dependent
        raise EntropyError("operating system entropy source unavailable") from exc


class DeterministicRng:
    """Reproducible byte stream for tests and the simulation harness.

    SHA-256 in counter mode over the seed. Not for production keys.
    """

    def __init__(self, seed: int | bytes = 0) -> None:
        if isinstance(seed, int):
            seed = seed.to_bytes(8, "big", signed=True)
        self._seed = bytes(seed)
        self._counter = 0
        self._buffer = b""

    def __call__(self, n: int) -> bytes:
        while len(self._buffer) < n:
            block = hashlib.sha256(self._seed + self._counter.to_bytes(8, "big")).digest()
            self._counter += 1
            self._buffer += block
        out, self._buffer = self._buffer[:n], self._buffer[n:]
        return out

    def fork(self, label: str) -> "DeterministicRng":
        """Independent child stream, so adding draws in one place does not
        shift every other participant's randomness."""
        return DeterministicRng(hashlib.sha256(self._seed + b"/" + label.encode()).digest())


def _draw(rng: EntropySource, n: int) -> bytes:
    try:
        out = rng(n)
    except EntropyError:
        raise
    except Exception as exc:
        raise EntropyError(f"entropy source failed: {exc}") from exc
    if not isinstance(out, (bytes, bytearray)) or len(out) != n:
        raise EntropyError(f"entropy source returned {len(out) if out is not None else 0} bytes, wanted {n}")
    return bytes(out)


@dataclass(frozen=True)
class SymKey:
    """128-bit shared symmetric key."""

    raw: bytes

    def __post_init__(self) -> None:
        if not isinstance(self.raw, (bytes, bytearray)) or len(self.raw) != KEY_LEN:
            raise ValueError(f"SymKey must be exactly {KEY_LEN} bytes")
        object.__setattr__(self, "raw", bytes(self.raw))

    @classmethod
    def generate(cls, rng: EntropySource = system_rng) -> "SymKey":
        return cls(_draw(rng, KEY_LEN))

    @classmethod
    def from_hex(cls, text: str) -> "SymKey":
        return cls(bytes.fromhex(text.strip()))

    def __repr__(self) -> str:
        return f"SymKey(fp={hashlib.sha256(self.raw).hexdigest()[:8]})"


def rand_nonce(rng: EntropySource = system_rng) -> bytes:
    """Fresh 128-bit protocol nonce."""
    return _draw(rng, NONCE_LEN)


@dataclass(frozen=True)
class AeadCiphertext:
    nonce: bytes
    body: bytes
    tag: bytes

    def to_bytes(self) -> bytes:
        return self.nonce + self.body + self.tag

    @classmethod
    def from_bytes(cls, data: bytes) -> "AeadCiphertext":
        if len(data) < AEAD_OVERHEAD:
            raise FormatError(f"AEAD ciphertext shorter than {AEAD_OVERHEAD} bytes")
        data = bytes(data)
        return cls(data[:CCM_NONCE_LEN], data[CCM_NONCE_LEN:-TAG_LEN], data[-TAG_LEN:])

    def __len__(self) -> int:
        return len(self.nonce) + len(self.body) + len(self.tag)


def senc(plaintext: bytes, key: SymKey, nonce: bytes, aad: bytes = b"") -> AeadCiphertext:
    """AES-128-CCM encryption with a 13-byte nonce and 10-byte tag.

    ``aad`` is authenticated but not transmitted; the wire layer uses it as a
    per-message-type domain label.
    """
    if len(nonce) != CCM_NONCE_LEN:
        raise ValueError(f"CCM nonce must be {CCM_NONCE_LEN} bytes, got {len(nonce)}")
    note("senc")
    sealed = AESCCM(key.raw, tag_length=TAG_LEN).encrypt(bytes(nonce), bytes(plaintext), aad or None)
    return AeadCiphertext(bytes(nonce), sealed[:-TAG_LEN], sealed[-TAG_LEN:])


def seal(plaintext: bytes, key: SymKey, rng: EntropySource = system_rng, aad: bytes = b"") -> AeadCiphertext:
    """``senc`` with a random nonce drawn from ``rng``."""
    return senc(plaintext, key, _draw(rng, CCM_NONCE_LEN), aad)


def sdec(ct: Union[AeadCiphertext, bytes], key: SymKey, aad: bytes = b"") -> bytes:
    note("sdec")
    if not isinstance(ct, AeadCiphertext):
        try:
            ct = AeadCiphertext.from_bytes(ct)
        except FormatError as exc:
            raise IntegrityError(str(exc)) from exc
    if len(ct.nonce) != CCM_NONCE_LEN or len(ct.tag) != TAG_LEN:
        raise IntegrityError("malformed AEAD ciphertext")
    try:
        return AESCCM(key.raw, tag_length=TAG_LEN).decrypt(ct.nonce, ct.body + ct.tag, aad or None)
    except InvalidTag as exc:
        raise IntegrityError("authentication tag mismatch") from exc


def hash_bytes(m: bytes) -> bytes:
    note("hash")
    return hashlib.sha256(m).digest()


def attester_id(h: bytes, public_key: bytes) -> bytes:
    """First 16 bytes of SHA-256(h || raw public key)."""
    if len(h) != DIGEST_LEN:
        raise ValueError("attester id expects a 32-byte key digest")
    return hashlib.sha256(bytes(h) + bytes(public_key)).digest()[:ID_LEN]


def ct_equal(a: bytes, b: bytes) -> bool:
    return hmac.compare_digest(a, b)
