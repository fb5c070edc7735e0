"""Independent reference implementations used only by the tests.

Nothing here imports the package under test.
"""

from __future__ import annotations

import hashlib
import struct

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes


def _ecb(key: bytes):
    return Cipher(algorithms.AES(key), modes.ECB()).encryptor()


def _xor(a: bytes, b: bytes) -> bytes:
    return bytes(x ^ y for x, y in zip(a, b))


def ccm_encrypt(key: bytes, nonce: bytes, plaintext: bytes, aad: bytes, tag_len: int) -> bytes:
    """AES-CCM built from raw AES blocks (CBC-MAC then CTR)."""
    L = 15 - len(nonce)
    aes = _ecb(key)
    flags = (0x40 if aad else 0) | (((tag_len - 2) // 2) << 3) | (L - 1)
    b0 = bytes([flags]) + nonce + len(plaintext).to_bytes(L, "big")
    blocks = b0
    if aad:
        assert len(aad) < 0xFF00
        a = struct.pack(">H", len(aad)) + aad
        blocks += a + b"\0" * (-len(a) % 16)
    blocks += plaintext + b"\0" * (-len(plaintext) % 16)
    mac = b"\0" * 16
    for i in range(0, len(blocks), 16):
        mac = aes.update(_xor(mac, blocks[i:i + 16]))

    def ctr(i: int) -> bytes:
        return aes.update(bytes([L - 1]) + nonce + i.to_bytes(L, "big"))

    out = b""
    for j in range(0, len(plaintext), 16):
        chunk = plaintext[j:j + 16]
        out += _xor(chunk, ctr(j // 16 + 1))
    return out + _xor(mac[:tag_len], ctr(0))


def ccm_decrypt(key: bytes, nonce: bytes, sealed: bytes, aad: bytes, tag_len: int) -> bytes:
    """Decrypt by re-encrypting the recovered plaintext (CTR is symmetric)."""
    body = sealed[:-tag_len]
    L = 15 - len(nonce)
    aes = _ecb(key)
    pt = b""
    for j in range(0, len(body), 16):
        ks = aes.update(bytes([L - 1]) + nonce + (j // 16 + 1).to_bytes(L, "big"))
        pt += _xor(body[j:j + 16], ks)
    if ccm_encrypt(key, nonce, pt, aad, tag_len) != sealed:
        raise ValueError("tag mismatch")
    return pt


def sha256_counter_stream(seed: bytes, n: int) -> bytes:
    out = b""
    i = 0
    while len(out) < n:
        out += hashlib.sha256(seed + i.to_bytes(8, "big")).digest()
        i += 1
    return out[:n]


# RFC 8949 Appendix A, restricted to the types the codec supports
CBOR_VECTORS = [
    (0, "00"), (1, "01"), (10, "0a"), (23, "17"), (24, "1818"), (25, "1819"), (100, "1864"),
    (1000, "1903e8"), (1000000, "1a000f4240"), (1000000000000, "1b000000e8d4a51000"),
    (18446744073709551615, "1bffffffffffffffff"), (-18446744073709551616, "3bffffffffffffffff"),
    (-1, "20"), (-10, "29"), (-100, "3863"), (-1000, "3903e7"),
    (b"", "40"), (bytes.fromhex("01020304"), "4401020304"),
    ("", "60"), ("a", "6161"), ("IETF", "6449455446"), ("\"\\", "62225c"), ("ü", "62c3bc"),
    ("水", "63e6b0b4"),
    ([], "80"), ([1, 2, 3], "83010203"), ([1, [2, 3], [4, 5]], "8301820203820405"),
    (list(range(1, 26)), "98190102030405060708090a0b0c0d0e0f101112131415161718181819"),
    ({}, "a0"), ({1: 2, 3: 4}, "a201020304"), ({"a": 1, "b": [2, 3]}, "a26161016162820203"),
    (["a", {"b": "c"}], "826161a161626163"),
    ({"a": "A", "b": "B", "c": "C", "d": "D", "e": "E"}, "a56161614161626142616361436164614461656145"),
]
