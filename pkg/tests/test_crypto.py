import hashlib

import pytest
from cryptography.hazmat.primitives import hashes
from cryptography.hazmat.primitives.asymmetric.x25519 import X25519PrivateKey, X25519PublicKey
from cryptography.hazmat.primitives.ciphers.aead import AESGCM
from cryptography.hazmat.primitives.kdf.hkdf import HKDF
from hypothesis import given, settings
from hypothesis import strategies as st

from apcr.crypto import (
    AEAD_OVERHEAD,
    HYBRID_OVERHEAD,
    AeadCiphertext,
    DeterministicRng,
    KemKeyPair,
    KeyAttestation,
    SigKeyPair,
    SoftwareTee,
    SymKey,
    adec,
    aenc,
    attester_id,
    checksig,
    hash_bytes,
    rand_nonce,
    recording,
    sdec,
    seal,
    senc,
    sign,
    validate_key_attestation,
)
from apcr.errors import AttestationError, EntropyError, FormatError, IntegrityError, SignatureError

from oracles import ccm_decrypt, ccm_encrypt, sha256_counter_stream

keys16 = st.binary(min_size=16, max_size=16)
nonces13 = st.binary(min_size=13, max_size=13)


# -- oracle sanity: RFC 3610 packet vector #1 -------------------------------

def test_ccm_oracle_matches_rfc3610_packet_1():
    key = bytes(range(0xC0, 0xD0))
    nonce = bytes.fromhex("00000003020100a0a1a2a3a4a5")
    aad = bytes(range(8))
    pt = bytes(range(8, 0x1F))
    expected = bytes.fromhex("588c979a61c663d2f066d0c2c0f989806d5f6b61dac38417e8d12cfdf926e0")
    assert ccm_encrypt(key, nonce, pt, aad, 8) == expected


# -- AES-CCM ----------------------------------------------------------------

@given(keys16, nonces13, st.binary(max_size=200), st.binary(max_size=40))
def test_senc_matches_independent_ccm(key, nonce, pt, aad):
    ct = senc(pt, SymKey(key), nonce, aad)
    assert ct.to_bytes() == nonce + ccm_encrypt(key, nonce, pt, aad, 10)
    assert ccm_decrypt(key, nonce, ct.to_bytes()[13:], aad, 10) == pt


def test_ccm_known_answer_10_byte_tag():
    # frozen from the independent oracle; body equals the RFC packet, tag differs
    key = SymKey(bytes(range(0xC0, 0xD0)))
    nonce = bytes.fromhex("00000003020100a0a1a2a3a4a5")
    ct = senc(bytes(range(8, 0x1F)), key, nonce, bytes(range(8)))
    assert ct.body.hex() == "588c979a61c663d2f066d0c2c0f989806d5f6b61dac384"
    assert ct.tag.hex() == "fea4b050e8727d0d2cb3"


@given(keys16, st.binary(max_size=300))
def test_seal_roundtrip_and_overhead(key, pt):
    k = SymKey(key)
    ct = seal(pt, k, DeterministicRng(key))
    assert len(ct.to_bytes()) == len(pt) + AEAD_OVERHEAD == len(ct)
    assert sdec(ct.to_bytes(), k) == pt


@given(keys16, st.binary(min_size=1, max_size=64), st.data())
def test_sdec_rejects_any_single_bit_flip(key, pt, data):
    k = SymKey(key)
    raw = bytearray(seal(pt, k, DeterministicRng(1)).to_bytes())
    i = data.draw(st.integers(0, len(raw) - 1))
    raw[i] ^= 1 << data.draw(st.integers(0, 7))
    with pytest.raises(IntegrityError):
        sdec(bytes(raw), k)


def test_sdec_wrong_key_and_wrong_aad():
    k1, k2 = SymKey(b"\x01" * 16), SymKey(b"\x02" * 16)
    ct = seal(b"hello", k1, DeterministicRng(0), b"label-a")
    with pytest.raises(IntegrityError):
        sdec(ct, k2, b"label-a")
    with pytest.raises(IntegrityError):
        sdec(ct, k1, b"label-b")
    with pytest.raises(IntegrityError):
        sdec(b"\0" * 22, k1)


def test_senc_rejects_bad_nonce_length():
    with pytest.raises(ValueError):
        senc(b"x", SymKey(bytes(16)), b"\0" * 12)


def test_aead_ciphertext_parsing():
    with pytest.raises(FormatError):
        AeadCiphertext.from_bytes(b"\0" * 22)
    ct = AeadCiphertext.from_bytes(bytes(range(23)))
    assert ct.body == b"" and ct.nonce == bytes(range(13)) and ct.tag == bytes(range(13, 23))


# -- keys and entropy -------------------------------------------------------

@pytest.mark.parametrize("n", [0, 15, 17, 32])
def test_symkey_length_enforced(n):
    with pytest.raises(ValueError):
        SymKey(bytes(n))


def test_symkey_repr_hides_key():
    k = SymKey(bytes.fromhex("00112233445566778899aabbccddeeff"))
    assert "0011" not in repr(k) and "fp=" in repr(k)
    assert SymKey.from_hex(k.raw.hex()) == k


def test_deterministic_rng_pinned_stream():
    seed = (0).to_bytes(8, "big", signed=True)
    assert DeterministicRng(0)(80) == sha256_counter_stream(seed, 80)
    assert DeterministicRng(0)(16).hex() == hashlib.sha256(seed + bytes(8)).hexdigest()[:32]


def test_deterministic_rng_chunking_is_irrelevant():
    a, b = DeterministicRng(7), DeterministicRng(7)
    assert a(5) + a(40) + a(3) == b(48)


def test_fork_is_independent_of_parent_position():
    a, b = DeterministicRng(3), DeterministicRng(3)
    a(100)
    assert a.fork("x")(32) == b.fork("x")(32)
    assert b.fork("x")(32) != b.fork("y")(32)


def test_entropy_failure_surfaces_as_entropy_error():
    def broken(n):
        raise OSError("no entropy")

    with pytest.raises(EntropyError):
        rand_nonce(broken)
    with pytest.raises(EntropyError):
        SymKey.generate(lambda n: b"\0" * (n - 1))


# -- hashing and ids -------------------------------------------------------

def test_sha256_known_answer():
    assert hash_bytes(b"abc").hex() == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"


@given(st.binary(min_size=32, max_size=32), st.binary(min_size=32, max_size=32))
def test_attester_id_definition(h, pk):
    assert attester_id(h, pk) == hashlib.sha256(h + pk).digest()[:16]


def test_attester_id_binds_both_inputs():
    h, pk = bytes(32), bytes(range(32))
    assert attester_id(h, pk) != attester_id(b"\1" + h[1:], pk)
    assert attester_id(h, pk) != attester_id(h, b"\1" + pk[1:])
    with pytest.raises(ValueError):
        attester_id(b"short", pk)


# -- signatures -------------------------------------------------------------

def test_ed25519_rfc8032_test_1():
    kp = SigKeyPair.from_seed(bytes.fromhex("9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60"))
    assert kp.public.hex() == "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a"
    sig = sign(b"", kp)
    assert sig.hex() == ("e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e06522490155"
                         "5fb8821590a33bacc61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b")
    assert checksig(sig, b"", kp.public) == b""


@given(st.binary(max_size=100))
def test_checksig_returns_message_or_raises(m):
    kp = SigKeyPair.generate(DeterministicRng(m))
    sig = sign(m, kp)
    assert checksig(sig, m, kp.public) == m
    with pytest.raises(SignatureError):
        checksig(sig, m + b"!", kp.public)
    with pytest.raises(SignatureError):
        checksig(sig[:-1] + bytes([sig[-1] ^ 1]), m, kp.public)
    with pytest.raises(SignatureError):
        checksig(sig, m, SigKeyPair.generate(DeterministicRng(b"other" + m)).public)


# -- hybrid encryption -----------------------------------------------------

def _oracle_adec(ct: bytes, kem: KemKeyPair) -> bytes:
    eph = ct[:32]
    shared = X25519PrivateKey.from_private_bytes(kem.seed()).exchange(X25519PublicKey.from_public_bytes(eph))
    okm = HKDF(hashes.SHA256(), 28, None, b"apcr/hybrid/v1" + eph + kem.public).derive(shared)
    return AESGCM(okm[:16]).decrypt(okm[16:], ct[32:], eph)


@given(st.binary(max_size=500))
@settings(max_examples=50)
def test_hybrid_roundtrip_overhead_and_oracle(pt):
    kem = KemKeyPair.generate(DeterministicRng(1))
    ct = aenc(pt, kem.public, DeterministicRng(pt))
    assert len(ct) == len(pt) + HYBRID_OVERHEAD == len(pt) + 48
    assert adec(ct, kem) == pt
    assert _oracle_adec(ct, kem) == pt


def test_hybrid_wrong_recipient_and_tamper():
    a, b = KemKeyPair.generate(DeterministicRng(1)), KemKeyPair.generate(DeterministicRng(2))
    ct = aenc(b"metrics", a.public, DeterministicRng(3))
    with pytest.raises(IntegrityError):
        adec(ct, b)
    for i in (0, 31, 32, len(ct) - 1):
        bad = bytearray(ct)
        bad[i] ^= 0x80
        with pytest.raises(IntegrityError):
            adec(bytes(bad), a)
    with pytest.raises(IntegrityError):
        adec(ct[:47], a)


def test_key_seeds_roundtrip():
    s, k = SigKeyPair.generate(DeterministicRng(9)), KemKeyPair.generate(DeterministicRng(9))
    assert SigKeyPair.from_seed(s.seed()).public == s.public
    assert KemKeyPair.from_seed(k.seed()).public == k.public


# -- software TEE ----------------------------------------------------------

def test_key_attestation_roundtrip():
    tee = SoftwareTee(rng=DeterministicRng(4))
    h = hash_bytes(b"K_A")
    ak = tee.attest_key(h)
    assert len(ak.to_bytes()) == 96
    assert KeyAttestation.from_bytes(ak.to_bytes()) == ak
    assert validate_key_attestation(ak, tee.public) == h


def test_key_attestation_rejects_other_tee_and_swapped_digest():
    tee, other = SoftwareTee(rng=DeterministicRng(4)), SoftwareTee(rng=DeterministicRng(5))
    ak = tee.attest_key(hash_bytes(b"K_A"))
    with pytest.raises(AttestationError):
        validate_key_attestation(ak, other.public)
    with pytest.raises(AttestationError):
        validate_key_attestation(KeyAttestation(hash_bytes(b"other"), ak.envelope), tee.public)


def test_tee_unavailable():
    tee = SoftwareTee(rng=DeterministicRng(4))
    tee.available = False
    with pytest.raises(AttestationError):
        tee.attest_key(bytes(32))


def test_recording_logs_primitive_calls():
    with recording() as calls:
        k = SymKey(bytes(16))
        sdec(seal(b"x", k, DeterministicRng(0)), k)
        hash_bytes(b"")
    assert calls == ["senc", "sdec", "hash"]
