import pytest
from hypothesis import given
from hypothesis import strategies as st

from apcr.errors import FormatError
from apcr.wire import cbor

from oracles import CBOR_VECTORS


@pytest.mark.parametrize("value,hexed", CBOR_VECTORS, ids=[h for _, h in CBOR_VECTORS])
def test_rfc8949_vectors(value, hexed):
    assert cbor.dumps(value).hex() == hexed
    assert cbor.loads(bytes.fromhex(hexed)) == value


@pytest.mark.parametrize("hexed", [
    "1817",          # 23 in two bytes
    "190017",        # 23 in three bytes
    "5800",          # empty bytes, long form
    "a2616201616101",  # keys out of order
    "a2616101616102",  # duplicate key
    "0000",          # trailing byte
    "f5",            # true
    "f6",            # null
    "c074",          # tag
    "5f",            # indefinite length
    "62c3",          # truncated text
    "61ff",          # invalid utf-8
])
def test_rejects_non_deterministic_or_unsupported(hexed):
    with pytest.raises(FormatError):
        cbor.loads(bytes.fromhex(hexed))


def test_rejects_unencodable():
    for bad in (True, None, 1.5, 2 ** 64, -(2 ** 64) - 1, {1, 2}):
        with pytest.raises((TypeError, ValueError)):
            cbor.dumps(bad)


def test_nesting_limit():
    deep = bytes.fromhex("81" * 20 + "00")
    with pytest.raises(FormatError):
        cbor.loads(deep)


values = st.recursive(
    st.integers(-(2 ** 64), 2 ** 64 - 1) | st.binary(max_size=40) | st.text(max_size=20),
    lambda inner: st.lists(inner, max_size=4)
    | st.dictionaries(st.integers(-100, 100) | st.text(max_size=8), inner, max_size=4),
    max_leaves=12,
)


@given(values)
def test_roundtrip(v):
    assert cbor.loads(cbor.dumps(v)) == v


@given(st.dictionaries(st.text(max_size=6), st.integers(0, 5), min_size=2, max_size=6))
def test_map_keys_sorted_by_encoding(d):
    # deterministic encoding: independent of insertion order
    assert cbor.dumps(d) == cbor.dumps(dict(reversed(list(d.items()))))
