"""Public-key primitives used by the attester and verifier.

Signatures are Ed25519. Hybrid encryption is an ECIES-style construction:
ephemeral X25519, HKDF-SHA256, AES-128-GCM. The ephemeral key is drawn from
the caller's entropy source so simulated runs stay reproducible.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from cryptography.exceptions import InvalidSignature, InvalidTag
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric.ed25519 import Ed25519PrivateKey, Ed25519PublicKey
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from cryptography.hazmat.primitives.serialization import Encoding, NoEncryption, PrivateFormat, PublicFormat

from ..errors import IntegrityError, SignatureError
from .symmetric import EntropySource, _draw, system_rng
from .trace import note

PUBLIC_KEY_LEN = 32
SIGNATURE_LEN = 64
HYBRID_TAG_LEN = 16
HYBRID_OVERHEAD = PUBLIC_KEY_LEN + HYBRID_TAG_LEN

_HYBRID_INFO = b"apcr/hybrid/v1"


def _raw_public(key: Ed25519PublicKey | X25519PublicKey) -> bytes:
    return key.public_bytes(Encoding.Raw, PublicFormat.Raw)


@dataclass(frozen=True)
class SigKeyPair:
    secret: Ed25519PrivateKey = field(repr=False)
    public: bytes

    @classmethod
    def from_seed(cls, seed: bytes) -> "SigKeyPair":
        sk = Ed25519PrivateKey.from_private_bytes(bytes(seed))
        return cls(sk, _raw_public(sk.public_key()))

    @classmethod
    def generate(cls, rng: EntropySource = system_rng) -> "SigKeyPair":
        return cls.from_seed(_draw(rng, 32))

    def seed(self) -> bytes:
        return self.secret.private_bytes(Encoding.Raw, PrivateFormat.Raw, NoEncryption())


@dataclass(frozen=True)
class KemKeyPair:
    secret: X25519PrivateKey = field(repr=False)
    public: bytes

    @classmethod
    def from_seed(cls, seed: bytes) -> "KemKeyPair":
        sk = X25519PrivateKey.from_private_bytes(bytes(seed))
        return cls(sk, _raw_public(sk.public_key()))

    @classmethod
    def generate(cls, rng: EntropySource = system_rng) -> "KemKeyPair":
        return cls.from_seed(_draw(rng, 32))

    def seed(self) -> bytes:
        return self.secret.private_bytes(Encoding.Raw, PrivateFormat.Raw, NoEncryption())


def sign(m: bytes, keypair: SigKeyPair) -> bytes:
    note("sign")
    return keypair.secret.sign(bytes(m))


def checksig(sig: bytes, m: bytes, public: bytes) -> bytes:
    """Return ``m`` if ``sig`` is a valid signature over it, else raise."""
    note("checksig")
    if len(sig) != SIGNATURE_LEN or len(public) != PUBLIC_KEY_LEN:
        raise SignatureError("malformed signature or public key")
    try:
        Ed25519PublicKey.from_public_bytes(bytes(public)).verify(bytes(sig), bytes(m))
    except (InvalidSignature, ValueError) as exc:
        raise SignatureError("signature verification failed") from exc
    return m


def _derive(shared: bytes, eph_pub: bytes, recipient: bytes) -> tuple[bytes, bytes]:
    okm = HKDF(hashes.SHA256(), 28, salt=None, info=_HYBRID_INFO + eph_pub + recipient).derive(shared)
    return okm[:16], okm[16:]


def aenc(plaintext: bytes, public: bytes, rng: EntropySource = system_rng) -> bytes:
    """Encrypt to the holder of ``public``; output is eph_pub || ct || tag."""
    note("aenc")
    eph = X25519PrivateKey.from_private_bytes(_draw(rng, 32))
    eph_pub = _raw_public(eph.public_key())
    try:
        shared = eph.exchange(X25519PublicKey.from_public_bytes(bytes(public)))
    except ValueError as exc:
        raise ValueError("recipient public key is not a usable X25519 point") from exc
    key, nonce = _derive(shared, eph_pub, bytes(public))
    return eph_pub + AESGCM(key).encrypt(nonce, bytes(plaintext), eph_pub)


def adec(ct: bytes, keypair: KemKeyPair) -> bytes:
    note("adec")
    if len(ct) < HYBRID_OVERHEAD:
        raise IntegrityError("hybrid ciphertext too short")
    eph_pub, body = bytes(ct[:PUBLIC_KEY_LEN]), bytes(ct[PUBLIC_KEY_LEN:])
    try:
        shared = keypair.secret.exchange(X25519PublicKey.from_public_bytes(eph_pub))
        key, nonce = _derive(shared, eph_pub, keypair.public)
        return AESGCM(key).decrypt(nonce, body, eph_pub)
    except (InvalidTag, ValueError) as exc:
        raise IntegrityError("hybrid decryption failed") from exc
