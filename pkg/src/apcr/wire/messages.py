"""Codecs for the protocol messages of both variants.

Inner tuples are length-prefixed concatenations (2-byte big-endian length)
for variable-size parts and raw octets for fixed-size parts. Where a
variable part is followed only by fixed-size fields (the result messages)
its length is implied, which keeps the challenge and result byte budgets
exact.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Mapping

from ..crypto import (
    AEAD_OVERHEAD,
    DIGEST_LEN,
    HYBRID_OVERHEAD,
    ID_LEN,
    KEY_LEN,
    NONCE_LEN,
    SIGNATURE_LEN,
    EntropySource,
    KemKeyPair,
    KeyAttestation,
    SigKeyPair,
    SymKey,
    adec,
    aenc,
    checksig,
    hash_bytes,
    sdec,
    seal,
    sign,
    system_rng,
)
from ..errors import FormatError
from .ear import EarResult, decode_ear, encode_ear

CHALLENGE_LEN = AEAD_OVERHEAD + NONCE_LEN + ID_LEN
KDC_CHALLENGE_LEN = AEAD_OVERHEAD + NONCE_LEN + DIGEST_LEN

# AEAD associated data; separates message kinds sealed under the same K_V
AAD_CHALLENGE = b"apcr/lpm/cha"
AAD_RESULT = b"apcr/lpm/res"
AAD_KDC_CHALLENGE = b"apcr/kdc/cha"
AAD_KDC_RESULT = b"apcr/kdc/res"
AAD_KEY_MATERIAL = b"apcr/app/key"


def lp(data: bytes) -> bytes:
    if len(data) > 0xFFFF:
        raise ValueError("field too long for 2-byte length prefix")
    return struct.pack(">H", len(data)) + bytes(data)


class Reader:
    def __init__(self, data: bytes) -> None:
        self.data = bytes(data)
        self.pos = 0

    def fixed(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError("truncated field")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def prefixed(self) -> bytes:
        (n,) = struct.unpack(">H", self.fixed(2))
        return self.fixed(n)

    def end(self) -> None:
        if self.pos != len(self.data):
            raise FormatError(f"{len(self.data) - self.pos} trailing bytes")


@dataclass(frozen=True)
class Metrics:
    """Attestation claims, kept sorted by name."""

    claims: tuple[tuple[str, bytes], ...] = ()

    def __post_init__(self) -> None:
        items = tuple(sorted((str(k), bytes(v)) for k, v in self.claims))
        names = [k for k, _ in items]
        if len(set(names)) != len(names):
            raise ValueError("duplicate claim name")
        object.__setattr__(self, "claims", items)

    @classmethod
    def of(cls, claims: Mapping[str, bytes] | Iterable[tuple[str, bytes]] = ()) -> "Metrics":
        if isinstance(claims, Mapping):
            claims = claims.items()
        return cls(tuple(claims))

    def as_dict(self) -> dict[str, bytes]:
        return dict(self.claims)

    def encode(self) -> bytes:
        return b"".join(lp(k.encode("utf-8")) + lp(v) for k, v in self.claims)

    @classmethod
    def decode(cls, data: bytes) -> "Metrics":
        r = Reader(data)
        items = []
        while r.pos < len(r.data):
            try:
                name = r.prefixed().decode("utf-8")
            except UnicodeDecodeError as exc:
                raise FormatError("claim name is not UTF-8") from exc
            items.append((name, r.prefixed()))
        names = [k for k, _ in items]
        if names != sorted(set(names)):
            raise FormatError("claims not in canonical order")
        return cls(tuple(items))


# -- message (a): challenge -------------------------------------------------

def encode_challenge(c: bytes, attester: bytes, kv: SymKey, rng: EntropySource = system_rng) -> bytes:
    if len(c) != NONCE_LEN or len(attester) != ID_LEN:
        raise ValueError("challenge needs a 16-byte nonce and a 16-byte id")
    return seal(c + attester, kv, rng, AAD_CHALLENGE).to_bytes()


def decode_challenge(msg: bytes, kv: SymKey) -> tuple[bytes, bytes]:
    plain = sdec(msg, kv, AAD_CHALLENGE)
    if len(plain) != NONCE_LEN + ID_LEN:
        raise FormatError("challenge plaintext must be 32 bytes")
    return plain[:NONCE_LEN], plain[NONCE_LEN:]


# -- message (b): evidence --------------------------------------------------

@dataclass(frozen=True)
class EvidenceMsg:
    """Signed hybrid-encrypted evidence.

    ``key_id`` is SHA-256 of the signer's public key so the verifier can pick
    the key to check ``sig`` with.
    """

    key_id: bytes
    sig: bytes
    ev: bytes

    def to_bytes(self) -> bytes:
        return self.key_id + self.sig + self.ev

    @classmethod
    def from_bytes(cls, data: bytes) -> "EvidenceMsg":
        if len(data) < DIGEST_LEN + SIGNATURE_LEN + HYBRID_OVERHEAD:
            raise FormatError("evidence message too short")
        data = bytes(data)
        return cls(data[:DIGEST_LEN], data[DIGEST_LEN:DIGEST_LEN + SIGNATURE_LEN], data[DIGEST_LEN + SIGNATURE_LEN:])


def _signed_evidence(inner: bytes, verifier_kem: bytes, signer: SigKeyPair, rng: EntropySource) -> EvidenceMsg:
    ev = aenc(inner, verifier_kem, rng)
    return EvidenceMsg(hash_bytes(signer.public), sign(ev, signer), ev)


def _open_evidence(msg: EvidenceMsg, verifier_kem: KemKeyPair, attester_public: bytes) -> bytes:
    checksig(msg.sig, msg.ev, attester_public)
    return adec(msg.ev, verifier_kem)


def encode_evidence(ak: KeyAttestation, metrics: Metrics, cha: bytes, verifier_kem: bytes,
                    signer: SigKeyPair, rng: EntropySource = system_rng) -> EvidenceMsg:
    inner = lp(ak.to_bytes()) + lp(metrics.encode()) + lp(cha)
    return _signed_evidence(inner, verifier_kem, signer, rng)


def decode_evidence(msg: EvidenceMsg, verifier_kem: KemKeyPair,
                    attester_public: bytes) -> tuple[KeyAttestation, Metrics, bytes]:
    """Signature first, then decryption; raises SignatureError/IntegrityError/FormatError."""
    r = Reader(_open_evidence(msg, verifier_kem, attester_public))
    ak = KeyAttestation.from_bytes(r.prefixed())
    metrics = Metrics.decode(r.prefixed())
    cha = r.prefixed()
    r.end()
    return ak, metrics, cha


# -- messages (c)/(d): result -----------------------------------------------

def encode_result(r: EarResult, c: bytes, id_cha: bytes, kv: SymKey, rng: EntropySource = system_rng) -> bytes:
    if len(c) != NONCE_LEN or len(id_cha) != ID_LEN:
        raise ValueError("result needs a 16-byte nonce and a 16-byte id")
    return seal(encode_ear(r) + c + id_cha, kv, rng, AAD_RESULT).to_bytes()


def decode_result(msg: bytes, kv: SymKey) -> tuple[EarResult, bytes, bytes]:
    plain = sdec(msg, kv, AAD_RESULT)
    tail = NONCE_LEN + ID_LEN
    if len(plain) < tail:
        raise FormatError("result plaintext too short")
    ear = decode_ear(plain[:-tail])
    return ear, plain[-tail:-ID_LEN], plain[-ID_LEN:]


def result_size(ear_len: int) -> int:
    return ear_len + NONCE_LEN + ID_LEN + AEAD_OVERHEAD


# -- key-distribution variant ------------------------------------------------

def encode_kdc_challenge(c: bytes, h: bytes, kv: SymKey, rng: EntropySource = system_rng) -> bytes:
    if len(c) != NONCE_LEN or len(h) != DIGEST_LEN:
        raise ValueError("kdc challenge needs a 16-byte nonce and a 32-byte digest")
    return seal(c + h, kv, rng, AAD_KDC_CHALLENGE).to_bytes()


def decode_kdc_challenge(msg: bytes, kv: SymKey) -> tuple[bytes, bytes]:
    plain = sdec(msg, kv, AAD_KDC_CHALLENGE)
    if len(plain) != NONCE_LEN + DIGEST_LEN:
        raise FormatError("kdc challenge plaintext must be 48 bytes")
    return plain[:NONCE_LEN], plain[NONCE_LEN:]


def encode_kdc_evidence(metrics: Metrics, h: bytes, cha: bytes, verifier_kem: bytes,
                        signer: SigKeyPair, rng: EntropySource = system_rng) -> EvidenceMsg:
    if len(h) != DIGEST_LEN:
        raise ValueError("h must be 32 bytes")
    inner = lp(metrics.encode()) + h + lp(cha)
    return _signed_evidence(inner, verifier_kem, signer, rng)


def decode_kdc_evidence(msg: EvidenceMsg, verifier_kem: KemKeyPair,
                        attester_public: bytes) -> tuple[Metrics, bytes, bytes]:
    r = Reader(_open_evidence(msg, verifier_kem, attester_public))
    metrics = Metrics.decode(r.prefixed())
    h = r.fixed(DIGEST_LEN)
    cha = r.prefixed()
    r.end()
    return metrics, h, cha


def encode_kdc_result_rp(r: EarResult, c: bytes, h: bytes, ks: SymKey, kv: SymKey,
                         rng: EntropySource = system_rng) -> bytes:
    if len(c) != NONCE_LEN or len(h) != DIGEST_LEN:
        raise ValueError("bad nonce or digest length")
    return seal(encode_ear(r) + c + h + ks.raw, kv, rng, AAD_KDC_RESULT).to_bytes()


def decode_kdc_result_rp(msg: bytes, kv: SymKey) -> tuple[EarResult, bytes, bytes, SymKey]:
    plain = sdec(msg, kv, AAD_KDC_RESULT)
    tail = NONCE_LEN + DIGEST_LEN + KEY_LEN
    if len(plain) < tail:
        raise FormatError("kdc result plaintext too short")
    ear = decode_ear(plain[:-tail])
    rest = plain[-tail:]
    return ear, rest[:NONCE_LEN], rest[NONCE_LEN:NONCE_LEN + DIGEST_LEN], SymKey(rest[-KEY_LEN:])


@dataclass(frozen=True)
class KdcVerdictMsg:
    """Message (d) of the key-distribution variant: Res_A plus the verifier's signature."""

    sig: bytes
    res_a: bytes

    def to_bytes(self) -> bytes:
        return self.sig + self.res_a

    @classmethod
    def from_bytes(cls, data: bytes) -> "KdcVerdictMsg":
        if len(data) < SIGNATURE_LEN + HYBRID_OVERHEAD:
            raise FormatError("kdc verdict message too short")
        return cls(bytes(data[:SIGNATURE_LEN]), bytes(data[SIGNATURE_LEN:]))


def encode_kdc_result_attester(res_rp: bytes, ks: SymKey, attester_kem: bytes, verifier_sig: SigKeyPair,
                               rng: EntropySource = system_rng) -> KdcVerdictMsg:
    res_a = aenc(lp(res_rp) + ks.raw, attester_kem, rng)
    return KdcVerdictMsg(sign(res_a, verifier_sig), res_a)


def decode_kdc_result_attester(msg: KdcVerdictMsg, attester_kem: KemKeyPair,
                               verifier_public: bytes) -> tuple[bytes, SymKey]:
    checksig(msg.sig, msg.res_a, verifier_public)
    r = Reader(adec(msg.res_a, attester_kem))
    res_rp = r.prefixed()
    ks = SymKey(r.fixed(KEY_LEN))
    r.end()
    return res_rp, ks


# -- application messages (demo) --------------------------------------------

KEY_REQUEST_LEN = 20
KEY_REQUEST_TYPE = 0x01
DOOR_KEY_LEN = 96
KEY_MATERIAL_LEN = AEAD_OVERHEAD + DOOR_KEY_LEN


def encode_key_request(app_id: int, request_nonce: bytes) -> bytes:
    """20-byte key-transfer request: type, 2-byte length, app id, 16-byte nonce."""
    if len(request_nonce) != NONCE_LEN or not 0 <= app_id < 256:
        raise ValueError("bad key request fields")
    body = bytes([app_id]) + request_nonce
    return struct.pack(">BH", KEY_REQUEST_TYPE, len(body)) + body


def decode_key_request(data: bytes) -> tuple[int, bytes]:
    if len(data) != KEY_REQUEST_LEN:
        raise FormatError("key request must be 20 bytes")
    kind, length = struct.unpack(">BH", data[:3])
    if kind != KEY_REQUEST_TYPE or length != KEY_REQUEST_LEN - 3:
        raise FormatError("bad key request header")
    return data[3], bytes(data[4:])


def encode_key_material(door_key: bytes, key: SymKey, rng: EntropySource = system_rng) -> bytes:
    if len(door_key) != DOOR_KEY_LEN:
        raise ValueError("door key must be 96 bytes")
    return seal(door_key, key, rng, AAD_KEY_MATERIAL).to_bytes()


def decode_key_material(data: bytes, key: SymKey) -> bytes:
    plain = sdec(data, key, AAD_KEY_MATERIAL)
    if len(plain) != DOOR_KEY_LEN:
        raise FormatError("door key must be 96 bytes")
    return plain

