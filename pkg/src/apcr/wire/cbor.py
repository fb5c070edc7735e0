"""Minimal deterministic CBOR (RFC 8949 core deterministic encoding).

Supports the subset the attestation result needs: integers, byte and text
strings, arrays and maps. Map keys are emitted in bytewise order of their
encodings, lengths use the shortest form, and the decoder refuses anything
the encoder would not have produced.
"""

from __future__ import annotations

import struct
from typing import Any

from ..errors import FormatError

_UINT, _NINT, _BYTES, _TEXT, _ARRAY, _MAP = range(6)


def _head(major: int, value: int) -> bytes:
    if value < 24:
        return bytes([major << 5 | value])
    if value < 0x100:
        return bytes([major << 5 | 24, value])
    if value < 0x10000:
        return bytes([major << 5 | 25]) + struct.pack(">H", value)
    if value < 0x100000000:
        return bytes([major << 5 | 26]) + struct.pack(">I", value)
    if value < 0x10000000000000000:
        return bytes([major << 5 | 27]) + struct.pack(">Q", value)
    raise ValueError("integer out of CBOR range")


def dumps(obj: Any) -> bytes:
    if isinstance(obj, bool) or obj is None:
        raise TypeError("booleans and null are not used by this codec")
    if isinstance(obj, int):
        return _head(_UINT, obj) if obj >= 0 else _head(_NINT, -1 - obj)
    if isinstance(obj, (bytes, bytearray)):
        return _head(_BYTES, len(obj)) + bytes(obj)
    if isinstance(obj, str):
        raw = obj.encode("utf-8")
        return _head(_TEXT, len(raw)) + raw
    if isinstance(obj, (list, tuple)):
        return _head(_ARRAY, len(obj)) + b"".join(dumps(x) for x in obj)
    if isinstance(obj, dict):
        items = sorted((dumps(k), dumps(v)) for k, v in obj.items())
        return _head(_MAP, len(items)) + b"".join(k + v for k, v in items)
    raise TypeError(f"cannot CBOR-encode {type(obj).__name__}")


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise FormatError("truncated CBOR item")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def head(self) -> tuple[int, int]:
        initial = self.take(1)[0]
        major, info = initial >> 5, initial & 0x1F
        if info < 24:
            return major, info
        widths = {24: 1, 25: 2, 26: 4, 27: 8}
        if info not in widths:
            raise FormatError(f"unsupported CBOR additional info {info}")
        value = int.from_bytes(self.take(widths[info]), "big")
        if _head(major, value) != bytes([initial]) + value.to_bytes(widths[info], "big"):
            raise FormatError("non-shortest CBOR length encoding")
        return major, value

    def item(self, depth: int = 0) -> Any:
        if depth > 16:
            raise FormatError("CBOR nesting too deep")
        major, value = self.head()
        if major == _UINT:
            return value
        if major == _NINT:
            return -1 - value
        if major == _BYTES:
            return self.take(value)
        if major == _TEXT:
            try:
                return self.take(value).decode("utf-8")
            except UnicodeDecodeError as exc:
                raise FormatError("invalid UTF-8 in CBOR text") from exc
        if major == _ARRAY:
            return [self.item(depth + 1) for _ in range(value)]
        if major == _MAP:
            out: dict = {}
            last = None
            for _ in range(value):
                start = self.pos
                key = self.item(depth + 1)
                encoded_key = self.data[start:self.pos]
                if last is not None and encoded_key <= last:
                    raise FormatError("CBOR map keys not in deterministic order")
                last = encoded_key
                if isinstance(key, list):
                    raise FormatError("unhashable CBOR map key")
                out[key] = self.item(depth + 1)
            return out
        raise FormatError(f"unsupported CBOR major type {major}")


def loads(data: bytes) -> Any:
    reader = _Reader(bytes(data))
    obj = reader.item()
    if reader.pos != len(reader.data):
        raise FormatError("trailing bytes after CBOR item")
    return obj
